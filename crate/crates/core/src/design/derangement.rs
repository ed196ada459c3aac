use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Segment;
use crate::{Error, Result};

/// Where a mismatched excerpt takes its timing from: it starts where the
/// motion source segment starts and lasts as long as the matched segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcerptRule {
    pub start_from: String,
    pub duration_from: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchPair {
    pub matched_segment_id: String,
    pub source_segment_id: String,
    pub excerpt_rule: ExcerptRule,
}

/// A fixed-point-free reassignment of motion between segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchAssignment {
    pub pairs: Vec<MismatchPair>,
}

impl MismatchAssignment {
    pub fn source_for(&self, matched_segment_id: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.matched_segment_id == matched_segment_id)
            .map(|p| p.source_segment_id.as_str())
    }

    /// Resolves the excerpt timing `(start_s, duration_s)` of the mismatched
    /// stimulus shown against `matched_segment_id`.
    pub fn excerpt(&self, matched_segment_id: &str, segments: &[Segment]) -> Option<(f64, f64)> {
        let pair = self.pairs.iter().find(|p| p.matched_segment_id == matched_segment_id)?;
        let start = segments.iter().find(|s| s.id == pair.excerpt_rule.start_from)?;
        let dur = segments.iter().find(|s| s.id == pair.excerpt_rule.duration_from)?;
        Some((start.start_s, dur.duration_s))
    }

    pub fn is_derangement(&self) -> bool {
        let matched: HashSet<&str> = self.pairs.iter().map(|p| p.matched_segment_id.as_str()).collect();
        let sources: HashSet<&str> = self.pairs.iter().map(|p| p.source_segment_id.as_str()).collect();
        matched.len() == self.pairs.len()
            && sources == matched
            && self.pairs.iter().all(|p| p.matched_segment_id != p.source_segment_id)
    }
}

/// Draws a uniformly random derangement of `segment_ids` by rejection
/// sampling over uniform permutations.
pub fn make_derangement(segment_ids: &[String], seed: u64) -> Result<MismatchAssignment> {
    if segment_ids.len() < 2 {
        return Err(Error::invalid("a derangement needs at least two segments"));
    }
    let unique: HashSet<&String> = segment_ids.iter().collect();
    if unique.len() != segment_ids.len() {
        return Err(Error::invalid("segment ids must be unique"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..segment_ids.len()).collect();
    // acceptance probability tends to 1/e, so this terminates quickly
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            break;
        }
    }

    let pairs = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| MismatchPair {
            matched_segment_id: segment_ids[i].clone(),
            source_segment_id: segment_ids[j].clone(),
            excerpt_rule: ExcerptRule {
                start_from: segment_ids[j].clone(),
                duration_from: segment_ids[i].clone(),
            },
        })
        .collect();
    Ok(MismatchAssignment { pairs })
}
