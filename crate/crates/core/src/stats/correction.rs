//! Multiple-comparison procedures returning reject/retain decisions in input
//! order.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMethod {
    HolmBonferroni,
    BhFdr,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSet {
    pub decisions: Vec<bool>,
    pub alpha: f64,
    pub method: CorrectionMethod,
}

impl RejectionSet {
    pub fn rejected(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }
}

fn validate(p_values: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if let Some((i, p)) = p_values.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value at index {i} outside [0,1]: {p}")));
    }
    Ok(())
}

fn ascending(p_values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p_values.len()).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    order
}

/// Holm's step-down procedure (controls the family-wise error rate).
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<RejectionSet> {
    validate(p_values, alpha)?;
    let m = p_values.len();
    let mut decisions = vec![false; m];
    for (i, &idx) in ascending(p_values).iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            decisions[idx] = true;
        } else {
            break;
        }
    }
    Ok(RejectionSet {
        decisions,
        alpha,
        method: CorrectionMethod::HolmBonferroni,
    })
}

/// Benjamini-Hochberg linear step-up procedure (controls the false discovery
/// rate).
pub fn bh_fdr(p_values: &[f64], alpha: f64) -> Result<RejectionSet> {
    validate(p_values, alpha)?;
    let m = p_values.len();
    let order = ascending(p_values);
    let k = order
        .iter()
        .enumerate()
        .rev()
        .find(|(i, &idx)| p_values[idx] <= (i + 1) as f64 * alpha / m as f64)
        .map_or(0, |(i, _)| i + 1);
    let mut decisions = vec![false; m];
    for &idx in &order[..k] {
        decisions[idx] = true;
    }
    Ok(RejectionSet {
        decisions,
        alpha,
        method: CorrectionMethod::BhFdr,
    })
}

/// Plain per-test threshold `p <= alpha`.
pub fn uncorrected(p_values: &[f64], alpha: f64) -> Result<RejectionSet> {
    validate(p_values, alpha)?;
    Ok(RejectionSet {
        decisions: p_values.iter().map(|&p| p <= alpha).collect(),
        alpha,
        method: CorrectionMethod::None,
    })
}

/// Single-step Bonferroni, `p <= alpha / m`. Not one of the configurable
/// methods; kept as the reference that Holm must dominate.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    validate(p_values, alpha)?;
    let m = p_values.len() as f64;
    Ok(p_values.iter().map(|&p| p <= alpha / m).collect())
}

pub fn correct(p_values: &[f64], alpha: f64, method: CorrectionMethod) -> Result<RejectionSet> {
    match method {
        CorrectionMethod::HolmBonferroni => holm_bonferroni(p_values, alpha),
        CorrectionMethod::BhFdr => bh_fdr(p_values, alpha),
        CorrectionMethod::None => uncorrected(p_values, alpha),
    }
}
