use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, AttentionCheck, ExpectedResponse, Side, StudyPlan};
use crate::ingest::PreferenceOption;
use crate::{Error, Result};

pub const ATTENTION_CHECKS_PER_PARTICIPANT: usize = 4;

/// Slider checks pass within this many units of the requested extreme.
pub const SLIDER_CHECK_TOLERANCE: i64 = 5;

/// Places four attention checks on distinct pages of every participant,
/// never on the first page. Pages are chosen least-used-first across the
/// cohort with seeded tie-breaking, which keeps the placement histogram flat.
/// Any checks already present are replaced.
pub fn inject_attention_checks(mut plan: StudyPlan, seed: u64) -> Result<StudyPlan> {
    let pages = plan.pages_per_participant as usize;
    if pages < ATTENTION_CHECKS_PER_PARTICIPANT + 1 {
        return Err(Error::invalid(format!(
            "{ATTENTION_CHECKS_PER_PARTICIPANT} checks off the first page need at least {} pages, plan has {pages}",
            ATTENTION_CHECKS_PER_PARTICIPANT + 1
        )));
    }
    let pairwise = plan.study_kind.is_pairwise();
    let slots = plan.slots_per_page;
    // usage[i] counts checks on page index i + 2
    let mut usage = vec![0u32; pages - 1];

    for (p, participant) in plan.participants.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, p as u64));
        let mut candidates: Vec<(u32, u64, usize)> =
            usage.iter().enumerate().map(|(i, &u)| (u, rng.random::<u64>(), i)).collect();
        candidates.sort_unstable();
        let mut chosen: Vec<usize> = candidates[..ATTENTION_CHECKS_PER_PARTICIPANT].iter().map(|c| c.2).collect();
        chosen.sort_unstable();

        participant.attention_checks = chosen
            .into_iter()
            .map(|i| {
                usage[i] += 1;
                let expected = if pairwise {
                    ExpectedResponse::Preference {
                        option: PreferenceOption::ALL[rng.random_range(0..PreferenceOption::ALL.len())],
                    }
                } else {
                    ExpectedResponse::SliderExtreme {
                        side: if rng.random_bool(0.5) { Side::Left } else { Side::Right },
                    }
                };
                AttentionCheck {
                    page_index: i as u32 + 2,
                    slot: if pairwise { 0 } else { rng.random_range(0..slots) },
                    expected,
                }
            })
            .collect();
    }
    Ok(plan)
}
