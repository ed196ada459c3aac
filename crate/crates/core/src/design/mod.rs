//! Evaluation materials: conditions, segments, mismatched stimulus pairing
//! and counterbalanced study plans.

mod attention;
mod derangement;
mod plan;
mod segments;

pub use attention::{inject_attention_checks, ATTENTION_CHECKS_PER_PARTICIPANT, SLIDER_CHECK_TOLERANCE};
pub use derangement::{make_derangement, ExcerptRule, MismatchAssignment, MismatchPair};
pub use plan::{
    build_plan, design_study, AttentionCheck, ExpectedResponse, Page, ParticipantPlan, SlotAssignment,
    StudyPlan, PLAN_SCHEMA,
};
pub use segments::{validate_segments, FindingKind, SegmentFinding};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Natural,
    Baseline,
    Submission,
}

impl ConditionKind {
    fn prefix(self) -> char {
        match self {
            ConditionKind::Natural => 'N',
            ConditionKind::Baseline => 'B',
            ConditionKind::Submission => 'S',
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id.chars().next()? {
            'N' => Some(ConditionKind::Natural),
            'B' => Some(ConditionKind::Baseline),
            'S' => Some(ConditionKind::Submission),
            _ => None,
        }
    }
}

/// A motion source under evaluation, labelled with a two-character id whose
/// first letter encodes its kind (`NA`, `BM`, `SG`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub kind: ConditionKind,
}

impl Condition {
    pub fn new(id: impl Into<String>, kind: ConditionKind) -> Result<Self> {
        let c = Condition { id: id.into(), kind };
        c.validate()?;
        Ok(c)
    }

    /// Infers the kind from the id prefix.
    pub fn from_id(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let kind = ConditionKind::from_id(&id)
            .ok_or_else(|| Error::invalid(format!("condition id {id:?} must start with N, B or S")))?;
        Condition::new(id, kind)
    }

    pub fn validate(&self) -> Result<()> {
        let chars: Vec<char> = self.id.chars().collect();
        if chars.len() != 2 || !chars.iter().all(|c| c.is_ascii_alphanumeric()) {
            return Err(Error::invalid(format!(
                "condition id {:?} must be two alphanumeric characters",
                self.id
            )));
        }
        if chars[0] != self.kind.prefix() {
            return Err(Error::invalid(format!(
                "condition id {:?} does not match kind {:?}",
                self.id, self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Agent,
    Interlocutor,
}

/// An excerpt of a source recording chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub duration_s: f64,
    pub start_s: f64,
    pub chunk_id: String,
    pub active_speaker: Speaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Humanlikeness,
    SpeechApprop,
    InterlocApprop,
}

impl StudyKind {
    pub fn pages_per_participant(self) -> u32 {
        match self {
            StudyKind::Humanlikeness => 10,
            StudyKind::SpeechApprop | StudyKind::InterlocApprop => 40,
        }
    }

    pub fn slots_per_page(self) -> u32 {
        match self {
            StudyKind::Humanlikeness => 8,
            StudyKind::SpeechApprop | StudyKind::InterlocApprop => 2,
        }
    }

    pub fn is_pairwise(self) -> bool {
        !matches!(self, StudyKind::Humanlikeness)
    }

    pub fn audio_layout(self) -> AudioLayout {
        match self {
            StudyKind::Humanlikeness => AudioLayout::MonoMuted,
            StudyKind::SpeechApprop => AudioLayout::Mono,
            StudyKind::InterlocApprop => AudioLayout::StereoInterlocLeftAgentRight,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Humanlikeness => "humanlikeness",
            StudyKind::SpeechApprop => "speech_approp",
            StudyKind::InterlocApprop => "interloc_approp",
        }
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "humanlikeness" => Ok(StudyKind::Humanlikeness),
            "speech_approp" | "speech" => Ok(StudyKind::SpeechApprop),
            "interloc_approp" | "dyadic" => Ok(StudyKind::InterlocApprop),
            other => Err(Error::invalid(format!("unknown study kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Matched,
    Mismatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioLayout {
    MonoMuted,
    Mono,
    StereoInterlocLeftAgentRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A media item bound to a segment, a condition and a match status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub stimulus_id: String,
    pub segment_id: String,
    pub condition_id: String,
    pub match_status: MatchStatus,
    /// Segment whose inputs drove the motion; differs from `segment_id` for
    /// mismatched stimuli.
    pub motion_source_segment_id: String,
    pub media_uri: String,
    pub audio_layout: AudioLayout,
}

/// SplitMix64 step, used to derive independent RNG streams from one seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
