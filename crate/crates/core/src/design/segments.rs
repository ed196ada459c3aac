use serde::{Deserialize, Serialize};

use super::{Segment, Speaker, StudyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    /// A rule that can be checked mechanically and was broken.
    Violation,
    /// A rule that needs a human to look at the material.
    ManualReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFinding {
    pub segment_id: String,
    pub rule: String,
    pub kind: FindingKind,
    pub message: String,
}

fn duration_bounds(kind: StudyKind) -> (f64, f64) {
    match kind {
        StudyKind::Humanlikeness | StudyKind::SpeechApprop => (7.0, 13.0),
        StudyKind::InterlocApprop => (5.5, 15.0),
    }
}

fn required_speaker(kind: StudyKind) -> Speaker {
    match kind {
        StudyKind::Humanlikeness | StudyKind::SpeechApprop => Speaker::Agent,
        StudyKind::InterlocApprop => Speaker::Interlocutor,
    }
}

/// Checks segment selection rules for a study. Duration and active speaker
/// are verified; phrase completeness and motion-capture quality are always
/// emitted as manual-review items and never count as violations.
pub fn validate_segments(segments: &[Segment], study_kind: StudyKind) -> Vec<SegmentFinding> {
    let (lo, hi) = duration_bounds(study_kind);
    let speaker = required_speaker(study_kind);
    let mut findings = Vec::new();
    for s in segments {
        if !(lo..=hi).contains(&s.duration_s) {
            findings.push(SegmentFinding {
                segment_id: s.id.clone(),
                rule: "duration".into(),
                kind: FindingKind::Violation,
                message: format!("duration {} s outside [{lo}, {hi}] s", s.duration_s),
            });
        }
        if s.active_speaker != speaker {
            findings.push(SegmentFinding {
                segment_id: s.id.clone(),
                rule: "active_speaker".into(),
                kind: FindingKind::Violation,
                message: format!("active speaker must be {speaker:?} for {}", study_kind.as_str()),
            });
        }
        for (rule, message) in [
            ("phrase_boundaries", "check that the segment is a more or less complete phrase"),
            ("motion_quality", "check the natural motion for capture artefacts"),
        ] {
            findings.push(SegmentFinding {
                segment_id: s.id.clone(),
                rule: rule.into(),
                kind: FindingKind::ManualReview,
                message: message.into(),
            });
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(duration_s: f64, active_speaker: Speaker) -> Segment {
        Segment {
            id: "x".into(),
            duration_s,
            start_s: 0.0,
            chunk_id: "c".into(),
            active_speaker,
        }
    }

    fn violations(f: &[SegmentFinding]) -> Vec<&str> {
        f.iter().filter(|f| f.kind == FindingKind::Violation).map(|f| f.rule.as_str()).collect()
    }

    #[test]
    fn nine_second_agent_segment_passes() {
        let f = validate_segments(&[seg(9.0, Speaker::Agent)], StudyKind::SpeechApprop);
        assert!(violations(&f).is_empty());
        assert_eq!(f.iter().filter(|f| f.kind == FindingKind::ManualReview).count(), 2);
    }

    #[test]
    fn long_segment_violates_duration() {
        let f = validate_segments(&[seg(20.0, Speaker::Agent)], StudyKind::SpeechApprop);
        assert_eq!(violations(&f), vec!["duration"]);
    }

    #[test]
    fn dyadic_needs_interlocutor() {
        let f = validate_segments(&[seg(9.0, Speaker::Agent)], StudyKind::InterlocApprop);
        assert_eq!(violations(&f), vec!["active_speaker"]);
        let f = validate_segments(&[seg(14.5, Speaker::Interlocutor)], StudyKind::InterlocApprop);
        assert!(violations(&f).is_empty());
    }
}
