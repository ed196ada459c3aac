//! Response records and their reduction to analysis-ready samples.

mod io;

pub use io::{read_responses, read_responses_csv, read_responses_ndjson, write_responses_csv, write_responses_ndjson, RESPONSES_SCHEMA};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::ResponseCounts;
use crate::design::{Side, StudyPlan};
use crate::{Error, Result};

/// The five answer options of a pairwise page, in screen order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceOption {
    ClearlyLeft,
    SlightlyLeft,
    Equal,
    SlightlyRight,
    ClearlyRight,
}

impl PreferenceOption {
    pub const ALL: [PreferenceOption; 5] = [
        PreferenceOption::ClearlyLeft,
        PreferenceOption::SlightlyLeft,
        PreferenceOption::Equal,
        PreferenceOption::SlightlyRight,
        PreferenceOption::ClearlyRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceOption::ClearlyLeft => "clearly_left",
            PreferenceOption::SlightlyLeft => "slightly_left",
            PreferenceOption::Equal => "equal",
            PreferenceOption::SlightlyRight => "slightly_right",
            PreferenceOption::ClearlyRight => "clearly_right",
        }
    }

    /// Swaps left and right.
    pub fn mirror(self) -> Self {
        match self {
            PreferenceOption::ClearlyLeft => PreferenceOption::ClearlyRight,
            PreferenceOption::SlightlyLeft => PreferenceOption::SlightlyRight,
            PreferenceOption::Equal => PreferenceOption::Equal,
            PreferenceOption::SlightlyRight => PreferenceOption::SlightlyLeft,
            PreferenceOption::ClearlyRight => PreferenceOption::ClearlyLeft,
        }
    }

    /// Signed strength toward the left video: +2 .. -2.
    fn leftward(self) -> i8 {
        match self {
            PreferenceOption::ClearlyLeft => 2,
            PreferenceOption::SlightlyLeft => 1,
            PreferenceOption::Equal => 0,
            PreferenceOption::SlightlyRight => -1,
            PreferenceOption::ClearlyRight => -2,
        }
    }

    /// The option expressing `score` in favour of the video on `matched_side`.
    pub fn from_score(score: PreferenceScore, matched_side: Side) -> Self {
        let leftward = match matched_side {
            Side::Left => score.value(),
            Side::Right => -score.value(),
        };
        match leftward {
            2 => PreferenceOption::ClearlyLeft,
            1 => PreferenceOption::SlightlyLeft,
            0 => PreferenceOption::Equal,
            -1 => PreferenceOption::SlightlyRight,
            _ => PreferenceOption::ClearlyRight,
        }
    }
}

impl fmt::Display for PreferenceOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreferenceOption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PreferenceOption::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preference option {s:?}")))
    }
}

/// The value a participant entered, before validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawResponse {
    Slider(i64),
    Preference(PreferenceOption),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub participant_id: String,
    /// 1-based.
    pub page_index: u32,
    /// 0-based slot; pairwise pages carry a single response at slot 0.
    pub slot: u32,
    /// Rated stimulus; on pairwise pages, the matched stimulus of the pair.
    pub stimulus_id: String,
    pub raw: RawResponse,
    pub timestamp_ms: u64,
    #[serde(default)]
    pub is_attention_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_passed: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub training: bool,
}

/// A pairwise answer on the -2..=2 scale, positive toward the matched video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub struct PreferenceScore(i8);

impl PreferenceScore {
    pub fn new(value: i8) -> Result<Self> {
        if (-2..=2).contains(&value) {
            Ok(PreferenceScore(value))
        } else {
            Err(Error::invalid(format!("preference score {value} outside -2..=2")))
        }
    }

    pub fn value(self) -> i8 {
        self.0
    }
}

impl TryFrom<i8> for PreferenceScore {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        PreferenceScore::new(v)
    }
}

impl From<PreferenceScore> for i8 {
    fn from(s: PreferenceScore) -> i8 {
        s.0
    }
}

pub fn preference_to_score(raw: PreferenceOption, matched_side: Side) -> PreferenceScore {
    let v = raw.leftward();
    PreferenceScore(match matched_side {
        Side::Left => v,
        Side::Right => -v,
    })
}

/// Anchor labels of the rating slider, worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RatingLabel {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub value: u8,
    pub label: RatingLabel,
}

/// Labels a slider value by its fifth of the scale: `[0,20)` Bad up to
/// `[80,100]` Excellent.
pub fn slider_to_rating(raw: i64) -> Result<Rating> {
    if !(0..=100).contains(&raw) {
        return Err(Error::invalid(format!("slider value {raw} outside 0..=100")));
    }
    let label = match raw {
        0..=19 => RatingLabel::Bad,
        20..=39 => RatingLabel::Poor,
        40..=59 => RatingLabel::Fair,
        60..=79 => RatingLabel::Good,
        _ => RatingLabel::Excellent,
    };
    Ok(Rating { value: raw as u8, label })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub checks_failed: u32,
    pub checks_seen: u32,
    pub excluded: bool,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
}

/// Participants failing this many attention checks are removed entirely.
pub const EXCLUSION_THRESHOLD: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    UnknownParticipant,
    UnknownSlot,
    UnknownStimulus,
    MalformedValue,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// Position of the record in the input stream.
    pub record_index: usize,
    pub participant_id: String,
    pub page_index: u32,
    pub slot: u32,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestTally {
    pub total: usize,
    pub retained: usize,
    pub rejected: usize,
    pub excluded_participant_responses: usize,
    pub attention_checks: usize,
    pub training: usize,
}

/// Retained ratings of one parallel-rating page, keyed by condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRatings {
    pub participant_id: String,
    pub page_index: u32,
    pub ratings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub study_kind: crate::design::StudyKind,
    /// Slider ratings (parallel-rating studies) or preference scores
    /// (pairwise studies) per condition, in deterministic merge order.
    pub samples: BTreeMap<String, Vec<f64>>,
    /// Per-condition score histograms; pairwise studies only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, ResponseCounts>,
    /// Page-level view for co-present sampling; parallel-rating studies only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pages: Vec<PageRatings>,
    pub participants: Vec<ParticipantRecord>,
    pub rejects: Vec<Reject>,
    pub tally: IngestTally,
}

impl IngestOutcome {
    /// Copies demographics, keyed by participant id, onto the participant
    /// records; unknown ids are ignored.
    pub fn attach_demographics(&mut self, demographics: &BTreeMap<String, BTreeMap<String, String>>) {
        for p in &mut self.participants {
            if let Some(d) = demographics.get(&p.participant_id) {
                p.demographics = d.clone();
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Retained {
    participant_id: String,
    page_index: u32,
    condition_id: String,
    value: f64,
}

/// Grades attention checks, removes excluded participants and groups the
/// remaining responses by condition.
///
/// Records are processed in `(timestamp, participant, page, slot, input
/// position)` order, so the outcome does not depend on the order in which
/// concurrent producers delivered them. For duplicate `(participant, page,
/// slot)` submissions the earliest wins and later copies are rejected.
pub fn ingest<I>(records: I, plan: &StudyPlan) -> IngestOutcome
where
    I: IntoIterator<Item = ResponseRecord>,
{
    let mut indexed: Vec<(usize, ResponseRecord)> = records.into_iter().enumerate().collect();
    indexed.sort_by(|(ia, a), (ib, b)| {
        (a.timestamp_ms, &a.participant_id, a.page_index, a.slot, ia)
            .cmp(&(b.timestamp_ms, &b.participant_id, b.page_index, b.slot, ib))
    });

    let pairwise = plan.study_kind.is_pairwise();
    let mut tally = IngestTally {
        total: indexed.len(),
        ..Default::default()
    };
    let mut rejects = Vec::new();
    let mut seen: HashSet<(String, u32, u32)> = HashSet::new();
    let mut participants: BTreeMap<String, ParticipantRecord> = BTreeMap::new();
    let mut retained: Vec<Retained> = Vec::new();

    for (record_index, rec) in indexed {
        if rec.training {
            tally.training += 1;
            continue;
        }
        let mut reject = |reason: RejectReason, detail: String| {
            rejects.push(Reject {
                record_index,
                participant_id: rec.participant_id.clone(),
                page_index: rec.page_index,
                slot: rec.slot,
                reason,
                detail,
            });
        };
        let Some(pplan) = plan.participant(&rec.participant_id) else {
            reject(RejectReason::UnknownParticipant, "participant not in plan".into());
            continue;
        };
        let Some(page) = pplan.page(rec.page_index) else {
            reject(RejectReason::UnknownSlot, format!("page {} not in plan", rec.page_index));
            continue;
        };
        let expected_stimulus = if pairwise {
            if rec.slot != 0 {
                reject(RejectReason::UnknownSlot, "pairwise pages carry one response at slot 0".into());
                continue;
            }
            page.slots.iter().find(|s| s.match_status == crate::design::MatchStatus::Matched)
        } else {
            page.slots.get(rec.slot as usize)
        };
        let Some(slot) = expected_stimulus else {
            reject(RejectReason::UnknownSlot, format!("slot {} not on page", rec.slot));
            continue;
        };
        if slot.stimulus_id != rec.stimulus_id {
            reject(
                RejectReason::UnknownStimulus,
                format!("expected stimulus {:?}, got {:?}", slot.stimulus_id, rec.stimulus_id),
            );
            continue;
        }
        let value = match (pairwise, rec.raw) {
            (false, RawResponse::Slider(v)) => match slider_to_rating(v) {
                Ok(r) => f64::from(r.value),
                Err(e) => {
                    reject(RejectReason::MalformedValue, e.to_string());
                    continue;
                }
            },
            (true, RawResponse::Preference(o)) => match page.matched_side() {
                Some(side) => f64::from(preference_to_score(o, side).value()),
                None => {
                    reject(RejectReason::UnknownSlot, "page has no matched side".into());
                    continue;
                }
            },
            (_, raw) => {
                reject(RejectReason::MalformedValue, format!("{raw:?} does not fit a {} study", plan.study_kind.as_str()));
                continue;
            }
        };
        if !seen.insert((rec.participant_id.clone(), rec.page_index, rec.slot)) {
            reject(RejectReason::Duplicate, "earlier submission kept".into());
            continue;
        }

        let entry = participants
            .entry(rec.participant_id.clone())
            .or_insert_with(|| ParticipantRecord {
                participant_id: rec.participant_id.clone(),
                checks_failed: 0,
                checks_seen: 0,
                excluded: false,
                demographics: BTreeMap::new(),
            });
        if let Some(check) = pplan.check_at(rec.page_index, rec.slot) {
            tally.attention_checks += 1;
            entry.checks_seen += 1;
            if !check.expected.accepts(&rec.raw) {
                entry.checks_failed += 1;
            }
            continue;
        }
        retained.push(Retained {
            participant_id: rec.participant_id,
            page_index: rec.page_index,
            condition_id: slot.condition_id.clone(),
            value,
        });
    }

    let mut excluded: BTreeSet<String> = BTreeSet::new();
    for p in participants.values_mut() {
        p.excluded = p.checks_failed >= EXCLUSION_THRESHOLD;
        if p.excluded {
            excluded.insert(p.participant_id.clone());
        }
    }

    let mut samples: BTreeMap<String, Vec<f64>> = plan.conditions.iter().map(|c| (c.id.clone(), Vec::new())).collect();
    let mut pages: BTreeMap<(String, u32), BTreeMap<String, f64>> = BTreeMap::new();
    for r in retained {
        if excluded.contains(&r.participant_id) {
            tally.excluded_participant_responses += 1;
            continue;
        }
        tally.retained += 1;
        if !pairwise {
            pages
                .entry((r.participant_id.clone(), r.page_index))
                .or_default()
                .insert(r.condition_id.clone(), r.value);
        }
        samples.entry(r.condition_id).or_default().push(r.value);
    }
    tally.rejected = rejects.len();

    let counts = if pairwise {
        samples
            .iter()
            .map(|(c, xs)| (c.clone(), ResponseCounts::from_scores(xs)))
            .collect()
    } else {
        BTreeMap::new()
    };

    IngestOutcome {
        study_kind: plan.study_kind,
        samples,
        counts,
        pages: pages
            .into_iter()
            .map(|((participant_id, page_index), ratings)| PageRatings {
                participant_id,
                page_index,
                ratings,
            })
            .collect(),
        participants: participants.into_values().collect(),
        rejects,
        tally,
    }
}
