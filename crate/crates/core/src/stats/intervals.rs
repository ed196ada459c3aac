//! Confidence intervals for the median (distribution-free, from order
//! statistics) and the mean (Student's t).

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, variance};
use super::special::{binomial_cdf, t_quantile};
use super::check_finite;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0,1), got {level}")));
    }
    Ok(())
}

/// 1-based order-statistic ranks `(l, u)` with `u = n + 1 - l` and the
/// largest `l` whose coverage `P(l <= K <= n - l)`, `K ~ Binomial(n, 1/2)`,
/// reaches `level`. When even `(1, n)` falls short the full range is returned.
pub fn median_ci_ranks(n: usize, level: f64) -> Result<(usize, usize)> {
    check_level(level)?;
    if n == 0 {
        return Err(Error::invalid("median_ci needs at least one observation"));
    }
    let coverage = |l: usize| -> Result<f64> {
        let upper = binomial_cdf((n - l) as u64, n as u64, 0.5)?;
        let below = if l == 0 { 0.0 } else { binomial_cdf((l - 1) as u64, n as u64, 0.5)? };
        Ok(upper - below)
    };
    // coverage falls as l grows, so search for the last l that still reaches it
    let (mut best, mut hi) = (1, n.div_ceil(2) + 1);
    while hi - best > 1 {
        let mid = (best + hi) / 2;
        if coverage(mid)? >= level {
            best = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best, n + 1 - best))
}

/// Sample median and its order-statistic confidence interval.
pub fn median_ci(x: &[f64], level: f64) -> Result<(f64, Interval)> {
    check_finite("sample", x)?;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let (l, u) = median_ci_ranks(n, level)?;
    Ok((
        median,
        Interval {
            lower: sorted[l - 1],
            upper: sorted[u - 1],
            level,
        },
    ))
}

/// Sample mean with a t interval. With `round_outward_to = Some(g)` the lower
/// bound is floored and the upper bound ceiled to multiples of `g`.
pub fn mean_ci(x: &[f64], level: f64, round_outward_to: Option<f64>) -> Result<(f64, Interval)> {
    check_finite("sample", x)?;
    check_level(level)?;
    if x.len() < 2 {
        return Err(Error::invalid("mean_ci needs at least two observations"));
    }
    if let Some(g) = round_outward_to {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!("rounding granularity must be positive, got {g}")));
        }
    }
    let n = x.len() as f64;
    let m = mean(x);
    let sd = variance(x).sqrt();
    let half = if sd == 0.0 {
        0.0
    } else {
        t_quantile((1.0 + level) / 2.0, n - 1.0)? * sd / n.sqrt()
    };
    let (mut lower, mut upper) = (m - half, m + half);
    if let Some(g) = round_outward_to {
        lower = (lower / g).floor() * g;
        upper = (upper / g).ceil() * g;
    }
    Ok((m, Interval { lower, upper, level }))
}
