//! Statistical primitives used by the analysis pipeline.
//!
//! Every function here is a pure function of its arguments.

mod correction;
mod descriptive;
mod intervals;
mod mann_whitney;
mod special;
mod welch;

pub use correction::{bh_fdr, bonferroni, correct, holm_bonferroni, uncorrected, CorrectionMethod, RejectionSet};
pub use descriptive::{mean, quantile_type7, variance};
pub use intervals::{mean_ci, median_ci, median_ci_ranks, Interval};
pub use mann_whitney::{mann_whitney_u, mann_whitney_u_with_bound, midranks, MwuMode, DEFAULT_EXACT_BOUND};
pub use special::{binomial_cdf, normal_cdf, t_cdf, t_quantile, t_two_sided_p};
pub use welch::welch_t;

use serde::{Deserialize, Serialize};

/// Outcome of a two-sample hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// `U` for Mann-Whitney (counted for the first sample), `t` for Welch.
    pub statistic: f64,
    /// Welch-Satterthwaite degrees of freedom; absent for rank tests.
    pub df: Option<f64>,
    pub p_value: f64,
    pub two_sided: bool,
}

pub(crate) fn check_finite(name: &str, xs: &[f64]) -> crate::Result<()> {
    if xs.is_empty() {
        return Err(crate::Error::invalid(format!("{name} is empty")));
    }
    if let Some(v) = xs.iter().find(|v| !v.is_finite()) {
        return Err(crate::Error::invalid(format!("{name} contains non-finite value {v}")));
    }
    Ok(())
}
