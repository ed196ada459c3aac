//! Counterbalanced study plans.
//!
//! Segments follow a Latin-square rotation: participant `p` sees, on page
//! `k`, segment `(p + k) mod S` of a seeded segment order, so every segment
//! visits every page position equally often (within one) across consecutive
//! participants. Conditions are dealt cyclically from a seeded condition
//! order across the global page sequence, which keeps per-condition counts
//! within one of each other. Slot order within a parallel-rating page is
//! shuffled per participant; the side of the matched stimulus on a pairwise
//! page is a seeded fair coin.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    derive_seed, inject_attention_checks, make_derangement, Condition, MatchStatus, MismatchAssignment,
    Segment, Side, StimulusSpec, StudyKind,
};
use crate::ingest::{PreferenceOption, RawResponse};
use crate::{Error, Result};

pub const PLAN_SCHEMA: &str = "subjeval/plan-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub stimulus_id: String,
    pub condition_id: String,
    pub match_status: MatchStatus,
    /// Screen side on pairwise pages; absent on parallel-rating pages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub segment_id: String,
    pub slots: Vec<SlotAssignment>,
}

impl Page {
    pub fn matched_side(&self) -> Option<Side> {
        self.slots
            .iter()
            .find(|s| s.match_status == MatchStatus::Matched)
            .and_then(|s| s.side)
    }

    /// Condition shown on a pairwise page (both stimuli share it).
    pub fn pair_condition(&self) -> Option<&str> {
        match self.slots.as_slice() {
            [a, b] if a.condition_id == b.condition_id && a.side.is_some() => Some(&a.condition_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExpectedResponse {
    /// "Move this slider all the way to the left/right."
    SliderExtreme { side: Side },
    /// "Select this answer option."
    Preference { option: PreferenceOption },
}

impl ExpectedResponse {
    pub fn accepts(&self, raw: &RawResponse) -> bool {
        use super::SLIDER_CHECK_TOLERANCE as TOL;
        match (self, raw) {
            (ExpectedResponse::SliderExtreme { side: Side::Left }, RawResponse::Slider(v)) => *v <= TOL,
            (ExpectedResponse::SliderExtreme { side: Side::Right }, RawResponse::Slider(v)) => *v >= 100 - TOL,
            (ExpectedResponse::Preference { option }, RawResponse::Preference(o)) => option == o,
            _ => false,
        }
    }

    /// A response that satisfies the check.
    pub fn passing_response(&self) -> RawResponse {
        match self {
            ExpectedResponse::SliderExtreme { side: Side::Left } => RawResponse::Slider(0),
            ExpectedResponse::SliderExtreme { side: Side::Right } => RawResponse::Slider(100),
            ExpectedResponse::Preference { option } => RawResponse::Preference(*option),
        }
    }

    /// A response that fails the check.
    pub fn failing_response(&self) -> RawResponse {
        match self {
            ExpectedResponse::SliderExtreme { .. } => RawResponse::Slider(50),
            ExpectedResponse::Preference { option } => RawResponse::Preference(if *option == PreferenceOption::Equal {
                PreferenceOption::ClearlyLeft
            } else {
                PreferenceOption::Equal
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionCheck {
    /// 1-based page index.
    pub page_index: u32,
    /// 0-based slot on the page; always 0 on pairwise pages.
    pub slot: u32,
    pub expected: ExpectedResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantPlan {
    pub participant_id: String,
    pub pages: Vec<Page>,
    #[serde(default)]
    pub attention_checks: Vec<AttentionCheck>,
}

impl ParticipantPlan {
    pub fn page(&self, page_index: u32) -> Option<&Page> {
        page_index.checked_sub(1).and_then(|i| self.pages.get(i as usize))
    }

    pub fn check_at(&self, page_index: u32, slot: u32) -> Option<&AttentionCheck> {
        self.attention_checks
            .iter()
            .find(|c| c.page_index == page_index && c.slot == slot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub schema: String,
    pub study_kind: StudyKind,
    pub seed: u64,
    pub pages_per_participant: u32,
    pub slots_per_page: u32,
    pub conditions: Vec<Condition>,
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchAssignment>,
    pub stimuli: Vec<StimulusSpec>,
    pub participants: Vec<ParticipantPlan>,
}

impl StudyPlan {
    pub fn participant(&self, participant_id: &str) -> Option<&ParticipantPlan> {
        self.participants.iter().find(|p| p.participant_id == participant_id)
    }

    pub fn stimulus(&self, stimulus_id: &str) -> Option<&StimulusSpec> {
        self.stimuli
            .binary_search_by(|s| s.stimulus_id.as_str().cmp(stimulus_id))
            .ok()
            .map(|i| &self.stimuli[i])
    }

    /// Expected number of analysed responses per condition if every page were
    /// answered and no attention check replaced a stimulus: one per slot for
    /// parallel-rating plans, one per page for pairwise plans.
    pub fn expected_condition_counts(&self) -> BTreeMap<String, u64> {
        let mut counts: BTreeMap<String, u64> =
            self.conditions.iter().map(|c| (c.id.clone(), 0)).collect();
        for page in self.participants.iter().flat_map(|p| &p.pages) {
            if self.study_kind.is_pairwise() {
                if let Some(c) = page.pair_condition() {
                    *counts.entry(c.to_string()).or_default() += 1;
                }
            } else {
                for slot in &page.slots {
                    *counts.entry(slot.condition_id.clone()).or_default() += 1;
                }
            }
        }
        counts
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("plan line {}, column {}", e.line(), e.column()), e.to_string()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(PLAN_SCHEMA) => {}
            Some(other) => {
                return Err(Error::schema(
                    "plan field `schema`",
                    format!("expected {PLAN_SCHEMA:?}, found {other:?}"),
                ))
            }
            None => return Err(Error::schema("plan", format!("missing `schema` field ({PLAN_SCHEMA})"))),
        }
        serde_json::from_value(value).map_err(|e| Error::schema("plan", e.to_string()))
    }
}

fn stimulus_id(condition: &str, segment: &str, status: MatchStatus) -> String {
    let tag = match status {
        MatchStatus::Matched => "m",
        MatchStatus::Mismatched => "x",
    };
    format!("{condition}_{segment}_{tag}")
}

fn validate_inputs(conditions: &[Condition], segments: &[Segment], n_participants: usize) -> Result<()> {
    if conditions.is_empty() {
        return Err(Error::invalid("no conditions given"));
    }
    let mut seen = HashSet::new();
    for c in conditions {
        c.validate()?;
        if !seen.insert(c.id.as_str()) {
            return Err(Error::invalid(format!("duplicate condition id {:?}", c.id)));
        }
    }
    let mut seen = HashSet::new();
    for s in segments {
        if !(s.duration_s > 0.0) {
            return Err(Error::invalid(format!("segment {:?} has non-positive duration", s.id)));
        }
        if !seen.insert(s.id.as_str()) {
            return Err(Error::invalid(format!("duplicate segment id {:?}", s.id)));
        }
    }
    if n_participants == 0 {
        return Err(Error::invalid("at least one participant is required"));
    }
    Ok(())
}

/// Builds the counterbalanced page assignment for `n_participants` test
/// takers. The result carries no attention checks; see
/// [`inject_attention_checks`] or [`design_study`].
pub fn build_plan(
    study_kind: StudyKind,
    conditions: &[Condition],
    segments: &[Segment],
    n_participants: usize,
    seed: u64,
) -> Result<StudyPlan> {
    validate_inputs(conditions, segments, n_participants)?;
    let pages = study_kind.pages_per_participant() as usize;
    let slots = study_kind.slots_per_page() as usize;
    let (n_seg, n_cond) = (segments.len(), conditions.len());

    if n_seg < pages {
        return Err(Error::Infeasible(format!(
            "each participant sees {pages} pages with distinct segments, but only {n_seg} segment(s) were given"
        )));
    }
    if !study_kind.is_pairwise() && n_cond < slots {
        return Err(Error::Infeasible(format!(
            "parallel-rating pages show {slots} distinct conditions, but only {n_cond} condition(s) were given"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut seg_order: Vec<usize> = (0..n_seg).collect();
    seg_order.shuffle(&mut rng);
    let mut cond_order: Vec<usize> = (0..n_cond).collect();
    cond_order.shuffle(&mut rng);

    let mismatch = if study_kind.is_pairwise() {
        let ids: Vec<String> = segments.iter().map(|s| s.id.clone()).collect();
        Some(make_derangement(&ids, derive_seed(seed, 2))?)
    } else {
        None
    };

    let mut stimuli: BTreeMap<String, StimulusSpec> = BTreeMap::new();
    let mut register = |cond: &str, seg: &str, status: MatchStatus| -> String {
        let id = stimulus_id(cond, seg, status);
        stimuli.entry(id.clone()).or_insert_with(|| {
            let source = match (status, &mismatch) {
                (MatchStatus::Mismatched, Some(m)) => m.source_for(seg).unwrap_or(seg).to_string(),
                _ => seg.to_string(),
            };
            StimulusSpec {
                stimulus_id: id.clone(),
                segment_id: seg.to_string(),
                condition_id: cond.to_string(),
                match_status: status,
                motion_source_segment_id: source,
                media_uri: format!("stimuli/{}/{id}.mp4", study_kind.as_str()),
                audio_layout: study_kind.audio_layout(),
            }
        });
        id
    };

    let width = n_participants.to_string().len().max(4);
    let mut participants = Vec::with_capacity(n_participants);
    for p in 0..n_participants {
        let mut prng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1000 + p as u64));
        let mut plan_pages = Vec::with_capacity(pages);
        for k in 0..pages {
            let segment = &segments[seg_order[(p + k) % n_seg]];
            let global_page = (p * pages + k) as u64;
            let page_slots = if study_kind.is_pairwise() {
                let cond = &conditions[cond_order[(global_page % n_cond as u64) as usize]].id;
                let matched_side = if prng.random_bool(0.5) { Side::Left } else { Side::Right };
                let matched = SlotAssignment {
                    stimulus_id: register(cond, &segment.id, MatchStatus::Matched),
                    condition_id: cond.clone(),
                    match_status: MatchStatus::Matched,
                    side: Some(matched_side),
                };
                let mismatched = SlotAssignment {
                    stimulus_id: register(cond, &segment.id, MatchStatus::Mismatched),
                    condition_id: cond.clone(),
                    match_status: MatchStatus::Mismatched,
                    side: Some(matched_side.other()),
                };
                match matched_side {
                    Side::Left => vec![matched, mismatched],
                    Side::Right => vec![mismatched, matched],
                }
            } else {
                let mut shown: Vec<SlotAssignment> = (0..slots as u64)
                    .map(|i| {
                        let c = cond_order[((global_page * slots as u64 + i) % n_cond as u64) as usize];
                        let cond = &conditions[c].id;
                        SlotAssignment {
                            stimulus_id: register(cond, &segment.id, MatchStatus::Matched),
                            condition_id: cond.clone(),
                            match_status: MatchStatus::Matched,
                            side: None,
                        }
                    })
                    .collect();
                shown.shuffle(&mut prng);
                shown
            };
            plan_pages.push(Page {
                segment_id: segment.id.clone(),
                slots: page_slots,
            });
        }
        participants.push(ParticipantPlan {
            participant_id: format!("P{:0width$}", p + 1),
            pages: plan_pages,
            attention_checks: Vec::new(),
        });
    }

    Ok(StudyPlan {
        schema: PLAN_SCHEMA.to_string(),
        study_kind,
        seed,
        pages_per_participant: pages as u32,
        slots_per_page: slots as u32,
        conditions: conditions.to_vec(),
        segments: segments.to_vec(),
        mismatch,
        stimuli: stimuli.into_values().collect(),
        participants,
    })
}

/// [`build_plan`] followed by [`inject_attention_checks`] on a derived seed.
pub fn design_study(
    study_kind: StudyKind,
    conditions: &[Condition],
    segments: &[Segment],
    n_participants: usize,
    seed: u64,
) -> Result<StudyPlan> {
    let plan = build_plan(study_kind, conditions, segments, n_participants, seed)?;
    inject_attention_checks(plan, derive_seed(seed, 3))
}
