//! Two-sided Mann-Whitney U test with midranks.
//!
//! The exact null distribution is built by counting, over all ways of
//! choosing which `|x|` of the pooled observations belong to `x`, the sum of
//! their (doubled, hence integral) midranks. The normal approximation uses the
//! tie-corrected variance and a continuity correction of one half.

use serde::{Deserialize, Serialize};

use super::{check_finite, special::normal_cdf, TestResult};
use crate::{Error, Result};

pub const DEFAULT_EXACT_BOUND: usize = 16;

// u128 arrangement counts stay exact up to C(128, 64).
const HARD_EXACT_LIMIT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MwuMode {
    Exact,
    NormalApprox,
    #[default]
    Auto,
}

/// Midranks (1-based) of `values`, in input order.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn mann_whitney_u(x: &[f64], y: &[f64], mode: MwuMode) -> Result<TestResult> {
    mann_whitney_u_with_bound(x, y, mode, DEFAULT_EXACT_BOUND)
}

/// As [`mann_whitney_u`], with the pooled-size bound for exact enumeration
/// given explicitly.
pub fn mann_whitney_u_with_bound(
    x: &[f64],
    y: &[f64],
    mode: MwuMode,
    exact_bound: usize,
) -> Result<TestResult> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    let n = x.len() + y.len();
    let bound = exact_bound.min(HARD_EXACT_LIMIT);
    let exact = match mode {
        MwuMode::Exact if n > bound => return Err(Error::SizeLimit { n, bound }),
        MwuMode::Exact => true,
        MwuMode::NormalApprox => false,
        MwuMode::Auto => n <= bound,
    };

    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let rank_sum_x: f64 = ranks[..x.len()].iter().sum();
    let u = rank_sum_x - nx * (nx + 1.0) / 2.0;

    let p_value = if exact {
        exact_p(&ranks, x.len())
    } else {
        normal_p(u, nx, ny, &pooled)
    };
    Ok(TestResult {
        statistic: u,
        df: None,
        p_value,
        two_sided: true,
    })
}

fn normal_p(u: f64, nx: f64, ny: f64, pooled: &[f64]) -> f64 {
    let n = nx + ny;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 || !var.is_finite() {
        // every observation tied: U sits at its null mean
        return 1.0;
    }
    let dev = ((u - nx * ny / 2.0).abs() - 0.5).max(0.0);
    (2.0 * normal_cdf(-dev / var.sqrt())).min(1.0)
}

fn exact_p(ranks: &[f64], nx: usize) -> f64 {
    let n = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();

    // ways[j][s]: number of j-subsets of the pooled sample with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum + 1]; nx + 1];
    ways[0][0] = 1;
    for &r in &doubled {
        for j in (1..=nx).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }

    // 2U = R2 - nx(nx+1) and 2E[U] = nx*ny, so compare in doubled units
    let ny = n - nx;
    let offset = (nx * (nx + 1) + nx * ny) as i64;
    let observed: usize = doubled[..nx].iter().sum();
    let dev_obs = (observed as i64 - offset).abs();
    let (mut extreme, mut total) = (0u128, 0u128);
    for (s, &count) in ways[nx].iter().enumerate() {
        total += count;
        if (s as i64 - offset).abs() >= dev_obs {
            extreme += count;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}
