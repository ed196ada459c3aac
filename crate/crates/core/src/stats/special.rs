//! Distribution functions. Normal and t tails go through `statrs` special
//! functions (`erfc`, regularized incomplete beta); the binomial CDF is a
//! direct log-space summation.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::{Error, Result};

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0) || df.is_nan() {
        return Err(Error::invalid(format!("degrees of freedom must be positive, got {df}")));
    }
    Ok(())
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::invalid("t is NaN"));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t));
    Ok(if t < 0.0 { tail } else { 1.0 - tail })
}

/// Two-sided tail probability `P(|T| >= |t|)`, computed without cancellation.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::invalid("t is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0))
}

/// Quantile of Student's t.
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(0.0 < p && p < 1.0) {
        return Err(Error::invalid(format!("probability must lie in (0,1), got {p}")));
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// `P(K <= k)` for `K ~ Binomial(n, p)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("success probability must lie in [0,1], got {p}")));
    }
    if k >= n {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let terms: Vec<f64> = (0..=k)
        .map(|i| ln_binomial(n, i) + i as f64 * lp + (n - i) as f64 * lq)
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    Ok((peak + sum.ln()).exp().min(1.0))
}
