#![allow(dead_code)]

pub mod client;
pub mod oracle;

use std::collections::BTreeMap;

use subjeval::design::{Condition, Segment, Speaker};
use subjeval::sim::RaterModel;

/// The fifteen condition labels of the challenge.
pub const CONDITIONS: [&str; 15] = [
    "NA", "BM", "BD", "SA", "SB", "SC", "SD", "SE", "SF", "SG", "SH", "SI", "SJ", "SK", "SL",
];

pub fn conditions(n: usize) -> Vec<Condition> {
    CONDITIONS[..n].iter().map(|c| Condition::from_id(*c).unwrap()).collect()
}

pub fn segments(n: usize, speaker: Speaker) -> Vec<Segment> {
    (0..n)
        .map(|i| Segment {
            id: format!("seg{i:02}"),
            duration_s: 8.0 + (i % 5) as f64 * 0.5,
            start_s: 30.0 * i as f64,
            chunk_id: format!("chunk{}", i / 4),
            active_speaker: speaker,
        })
        .collect()
}

pub fn model(qualities: &[(&str, f64)]) -> RaterModel {
    RaterModel {
        latent_quality: qualities.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        sharpness: 1.5,
        tie_propensity: 0.15,
        attention_failure_prob: 0.1,
        rating_noise: 15.0,
    }
}

/// Latent qualities spread evenly over [20, 80] across the first `n` labels.
pub fn spread_model(n: usize) -> RaterModel {
    let q: Vec<(&str, f64)> = CONDITIONS[..n]
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, 80.0 - 60.0 * i as f64 / (n.max(2) - 1) as f64))
        .collect();
    model(&q)
}

/// P(at least two of four independent checks fail).
pub fn exclusion_probability(p: f64) -> f64 {
    1.0 - (1.0 - p).powi(4) - 4.0 * p * (1.0 - p).powi(3)
}

/// Checks a plan against the counterbalancing and attention-check rules,
/// recounting everything from the raw page lists.
pub fn check_plan(plan: &subjeval::design::StudyPlan) -> Result<(), String> {
    use std::collections::{BTreeSet, HashMap};
    use subjeval::design::{AudioLayout, MatchStatus, StudyKind};

    let kind = plan.study_kind;
    let pages = kind.pages_per_participant() as usize;
    let slots = kind.slots_per_page() as usize;
    if plan.pages_per_participant as usize != pages || plan.slots_per_page as usize != slots {
        return Err("page or slot count differs from the study kind".into());
    }
    let stim: HashMap<&str, &subjeval::design::StimulusSpec> =
        plan.stimuli.iter().map(|s| (s.stimulus_id.as_str(), s)).collect();
    let layout = match kind {
        StudyKind::Humanlikeness => AudioLayout::MonoMuted,
        StudyKind::SpeechApprop => AudioLayout::Mono,
        StudyKind::InterlocApprop => AudioLayout::StereoInterlocLeftAgentRight,
    };
    let mut cond_counts: BTreeMap<&str, u64> = plan.conditions.iter().map(|c| (c.id.as_str(), 0)).collect();
    let mut position: HashMap<(&str, usize), u64> = HashMap::new();

    for p in &plan.participants {
        if p.pages.len() != pages {
            return Err(format!("{} has {} pages", p.participant_id, p.pages.len()));
        }
        for (k, page) in p.pages.iter().enumerate() {
            *position.entry((page.segment_id.as_str(), k)).or_default() += 1;
            if page.slots.len() != slots {
                return Err(format!("{} page {} has {} slots", p.participant_id, k + 1, page.slots.len()));
            }
            for s in &page.slots {
                let spec = stim.get(s.stimulus_id.as_str()).ok_or(format!("unknown stimulus {}", s.stimulus_id))?;
                if spec.segment_id != page.segment_id || spec.condition_id != s.condition_id || spec.match_status != s.match_status {
                    return Err(format!("stimulus {} disagrees with its slot", s.stimulus_id));
                }
                if spec.audio_layout != layout {
                    return Err(format!("stimulus {} has layout {:?}", s.stimulus_id, spec.audio_layout));
                }
                let mismatched_source_ok = match spec.match_status {
                    MatchStatus::Matched => spec.motion_source_segment_id == spec.segment_id,
                    MatchStatus::Mismatched => spec.motion_source_segment_id != spec.segment_id,
                };
                if !mismatched_source_ok {
                    return Err(format!("stimulus {} has a wrong motion source", s.stimulus_id));
                }
            }
            if kind.is_pairwise() {
                let (a, b) = (&page.slots[0], &page.slots[1]);
                if a.condition_id != b.condition_id {
                    return Err("pairwise page mixes conditions".into());
                }
                let matched = page.slots.iter().filter(|s| s.match_status == MatchStatus::Matched).count();
                if matched != 1 || a.side.is_none() || b.side.is_none() || a.side == b.side {
                    return Err(format!("{} page {} is not one matched vs one mismatched", p.participant_id, k + 1));
                }
                *cond_counts.get_mut(a.condition_id.as_str()).ok_or("unknown condition")? += 1;
            } else {
                let distinct: BTreeSet<&str> = page.slots.iter().map(|s| s.condition_id.as_str()).collect();
                if distinct.len() != slots {
                    return Err(format!("{} page {} repeats a condition", p.participant_id, k + 1));
                }
                for s in &page.slots {
                    *cond_counts.get_mut(s.condition_id.as_str()).ok_or("unknown condition")? += 1;
                }
            }
        }

        let check_pages: BTreeSet<u32> = p.attention_checks.iter().map(|c| c.page_index).collect();
        if p.attention_checks.len() != 4 || check_pages.len() != 4 {
            return Err(format!("{} has {} checks on {} pages", p.participant_id, p.attention_checks.len(), check_pages.len()));
        }
        if check_pages.iter().any(|&i| i < 2 || i as usize > pages) {
            return Err(format!("{} has a check outside pages 2..={pages}", p.participant_id));
        }
        if p.attention_checks.iter().any(|c| c.slot as usize >= slots || (kind.is_pairwise() && c.slot != 0)) {
            return Err(format!("{} has a check on an invalid slot", p.participant_id));
        }
    }

    let (lo, hi) = (cond_counts.values().min().unwrap(), cond_counts.values().max().unwrap());
    if hi - lo > 1 {
        return Err(format!("condition counts range {lo}..{hi}"));
    }
    // Every segment's histogram over page positions is flat within one.
    let seg_ids: BTreeSet<&str> = position.keys().map(|(s, _)| *s).collect();
    for s in &seg_ids {
        let h: Vec<u64> = (0..pages).map(|k| position.get(&(*s, k)).copied().unwrap_or(0)).collect();
        if h.iter().max().unwrap() - h.iter().min().unwrap() > 1 {
            return Err(format!("segment {s} position histogram {h:?}"));
        }
    }
    // And every position sees the segments equally often within one.
    for k in 0..pages {
        let h: Vec<u64> = plan.segments.iter().map(|s| position.get(&(s.id.as_str(), k)).copied().unwrap_or(0)).collect();
        if h.iter().max().unwrap() - h.iter().min().unwrap() > 1 {
            return Err(format!("position {} segment histogram spread too wide", k + 1));
        }
    }
    if let Some(m) = &plan.mismatch {
        let ids: Vec<String> = plan.segments.iter().map(|s| s.id.clone()).collect();
        check_derangement(&ids, m)?;
    } else if kind.is_pairwise() {
        return Err("pairwise plan without mismatch assignment".into());
    }
    Ok(())
}

/// Checks that `m` maps `ids` onto itself bijectively without fixed points.
pub fn check_derangement(ids: &[String], m: &subjeval::design::MismatchAssignment) -> Result<(), String> {
    let mut matched: Vec<&str> = m.pairs.iter().map(|p| p.matched_segment_id.as_str()).collect();
    let mut sources: Vec<&str> = m.pairs.iter().map(|p| p.source_segment_id.as_str()).collect();
    let mut want: Vec<&str> = ids.iter().map(String::as_str).collect();
    matched.sort_unstable();
    sources.sort_unstable();
    want.sort_unstable();
    if matched != want || sources != want {
        return Err("mismatch assignment is not a bijection on the segments".into());
    }
    if let Some(p) = m.pairs.iter().find(|p| p.matched_segment_id == p.source_segment_id) {
        return Err(format!("segment {} keeps its own motion", p.matched_segment_id));
    }
    Ok(())
}
