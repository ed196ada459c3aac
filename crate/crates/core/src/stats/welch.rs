use super::descriptive::{mean, variance};
use super::{check_finite, special::t_two_sided_p, TestResult};
use crate::{Error, Result};

/// Welch's unequal-variance t test, two-sided.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid(format!(
            "welch_t needs at least two observations per sample (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (variance(x) / nx, variance(y) / ny);
    if vx == 0.0 && vy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let se2 = vx + vy;
    let t = (mean(x) - mean(y)) / se2.sqrt();
    let df = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    Ok(TestResult {
        statistic: t,
        df: Some(df),
        p_value: t_two_sided_p(t, df)?,
        two_sided: true,
    })
}
