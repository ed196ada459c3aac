//! Synthetic rater population with known ground truth.
//!
//! Slider ratings are the condition's latent quality plus Gaussian noise,
//! rounded and clamped to 0..=100. Pairwise answers come from an ordered
//! logistic model over the latent match advantage
//! `sharpness * quality / 100`, mixed with a point mass on "equal" of weight
//! `tie_propensity`. Each attention check is failed independently with
//! `attention_failure_prob`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{derive_seed, MatchStatus, StudyPlan};
use crate::ingest::{preference_to_score, PreferenceOption, PreferenceScore, RawResponse, ResponseRecord};
use crate::{Error, Result};

/// Cut points of the ordered logistic model between the five score levels.
pub const CUTPOINTS: [f64; 4] = [-1.5, -0.5, 0.5, 1.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterModel {
    /// Latent quality per condition on the 0..=100 rating scale.
    pub latent_quality: BTreeMap<String, f64>,
    pub sharpness: f64,
    pub tie_propensity: f64,
    pub attention_failure_prob: f64,
    pub rating_noise: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl RaterModel {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [0,1], got {v}")))
            }
        };
        prob("tie_propensity", self.tie_propensity)?;
        prob("attention_failure_prob", self.attention_failure_prob)?;
        if !(self.sharpness >= 0.0 && self.sharpness.is_finite()) {
            return Err(Error::invalid(format!("sharpness must be non-negative, got {}", self.sharpness)));
        }
        if !(self.rating_noise > 0.0 && self.rating_noise.is_finite()) {
            return Err(Error::invalid(format!("rating_noise must be positive, got {}", self.rating_noise)));
        }
        if let Some((c, q)) = self.latent_quality.iter().find(|(_, q)| !q.is_finite()) {
            return Err(Error::invalid(format!("latent quality of {c} is not finite: {q}")));
        }
        Ok(())
    }

    fn quality(&self, condition: &str) -> Result<f64> {
        self.latent_quality
            .get(condition)
            .copied()
            .ok_or_else(|| Error::invalid(format!("rater model has no latent quality for condition {condition}")))
    }

    /// Probabilities of the scores -2, -1, 0, 1, 2 for `condition`.
    pub fn score_probabilities(&self, condition: &str) -> Result<[f64; 5]> {
        let advantage = self.sharpness * self.quality(condition)? / 100.0;
        let cdf: Vec<f64> = CUTPOINTS.iter().map(|t| logistic(t - advantage)).collect();
        let mut p = [cdf[0], cdf[1] - cdf[0], cdf[2] - cdf[1], cdf[3] - cdf[2], 1.0 - cdf[3]];
        for v in p.iter_mut() {
            *v *= 1.0 - self.tie_propensity;
        }
        p[2] += self.tie_propensity;
        Ok(p)
    }

    /// Expected preference score for `condition` under the model.
    pub fn expected_score(&self, condition: &str) -> Result<f64> {
        let p = self.score_probabilities(condition)?;
        Ok(p.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]).map(|(p, s)| p * s).sum())
    }

    /// Probability that a participant fails at least two of `checks` checks.
    pub fn exclusion_probability(&self, checks: u32) -> f64 {
        let p = self.attention_failure_prob;
        let q = 1.0 - p;
        1.0 - q.powi(checks as i32) - f64::from(checks) * p * q.powi(checks as i32 - 1)
    }

    fn draw_score<R: Rng>(&self, condition: &str, rng: &mut R) -> Result<PreferenceScore> {
        let probs = self.score_probabilities(condition)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return PreferenceScore::new(i as i8 - 2);
            }
        }
        PreferenceScore::new(2)
    }

    fn draw_rating<R: Rng>(&self, condition: &str, rng: &mut R) -> Result<i64> {
        let z: f64 = StandardNormal.sample(rng);
        Ok((self.quality(condition)? + self.rating_noise * z).round().clamp(0.0, 100.0) as i64)
    }
}

/// Generates one response stream for every participant of `plan`.
///
/// Each participant draws from its own RNG stream derived from `seed`, so the
/// output does not depend on generation order. Timestamps are synthetic: all
/// answers on a page share one, and pages of a participant are a minute apart.
pub fn simulate_responses(plan: &StudyPlan, model: &RaterModel, seed: u64) -> Result<Vec<ResponseRecord>> {
    model.validate()?;
    for c in &plan.conditions {
        model.quality(&c.id)?;
    }
    let mut out = Vec::new();
    for (p, participant) in plan.participants.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, p as u64));
        let base_ms = p as u64 * 10_000_000;
        for (k, page) in participant.pages.iter().enumerate() {
            let page_index = k as u32 + 1;
            let ts = base_ms + k as u64 * 60_000;
            if plan.study_kind.is_pairwise() {
                let matched = page
                    .slots
                    .iter()
                    .find(|s| s.match_status == MatchStatus::Matched)
                    .ok_or_else(|| Error::invalid(format!("page {page_index} of {} has no matched stimulus", participant.participant_id)))?;
                let side = matched
                    .side
                    .ok_or_else(|| Error::invalid("pairwise page without sides"))?;
                let (raw, check) = match participant.check_at(page_index, 0) {
                    Some(check) => {
                        let pass = !rng.random_bool(model.attention_failure_prob);
                        let raw = if pass { check.expected.passing_response() } else { check.expected.failing_response() };
                        (raw, Some(pass))
                    }
                    None => {
                        let score = model.draw_score(&matched.condition_id, &mut rng)?;
                        let option = PreferenceOption::from_score(score, side);
                        debug_assert_eq!(preference_to_score(option, side), score);
                        (RawResponse::Preference(option), None)
                    }
                };
                out.push(ResponseRecord {
                    participant_id: participant.participant_id.clone(),
                    page_index,
                    slot: 0,
                    stimulus_id: matched.stimulus_id.clone(),
                    raw,
                    timestamp_ms: ts,
                    is_attention_check: check.is_some(),
                    attention_passed: check,
                    training: false,
                });
            } else {
                for (s, slot) in page.slots.iter().enumerate() {
                    let (raw, check) = match participant.check_at(page_index, s as u32) {
                        Some(check) => {
                            let pass = !rng.random_bool(model.attention_failure_prob);
                            let raw = if pass { check.expected.passing_response() } else { check.expected.failing_response() };
                            (raw, Some(pass))
                        }
                        None => (RawResponse::Slider(model.draw_rating(&slot.condition_id, &mut rng)?), None),
                    };
                    out.push(ResponseRecord {
                        participant_id: participant.participant_id.clone(),
                        page_index,
                        slot: s as u32,
                        stimulus_id: slot.stimulus_id.clone(),
                        raw,
                        timestamp_ms: ts,
                        is_attention_check: check.is_some(),
                        attention_passed: check,
                        training: false,
                    });
                }
            }
        }
    }
    Ok(out)
}
