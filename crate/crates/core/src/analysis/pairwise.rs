use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisConfig, ResponseCounts, Sampling};
use crate::ingest::PageRatings;
use crate::stats::{self, CorrectionMethod};
use crate::{Error, Result};

/// Outcome for the condition in row `i` against the condition in column `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    /// Row condition rated significantly above the column condition.
    Above,
    /// Row condition rated significantly below the column condition.
    Below,
    None,
}

impl Cell {
    fn flip(self) -> Cell {
        match self {
            Cell::Above => Cell::Below,
            Cell::Below => Cell::Above,
            Cell::None => Cell::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseTest {
    WelchT,
    MannWhitneyU,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub conditions: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
    /// Uncorrected two-sided p-values; `None` on the diagonal and for pairs
    /// that could not be tested.
    pub p_values: Vec<Vec<Option<f64>>>,
    pub alpha: f64,
    pub correction: CorrectionMethod,
    pub test: PairwiseTest,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SignificanceMatrix {
    /// Number of unordered pairs with a significant difference.
    pub fn significant_pairs(&self) -> usize {
        let n = self.conditions.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.cells[i][j] != Cell::None)
            .count()
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.conditions.len();
        (0..n).all(|i| {
            self.cells[i][i] == Cell::None && (0..n).all(|j| self.cells[i][j] == self.cells[j][i].flip())
        })
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<Cell> {
        let i = self.conditions.iter().position(|c| c == row)?;
        let j = self.conditions.iter().position(|c| c == col)?;
        Some(self.cells[i][j])
    }

    /// Same matrix with rows and columns in `order` (which must be a
    /// permutation of the condition ids).
    pub fn reordered(&self, order: &[String]) -> Result<SignificanceMatrix> {
        let idx: Vec<usize> = order
            .iter()
            .map(|id| {
                self.conditions
                    .iter()
                    .position(|c| c == id)
                    .ok_or_else(|| Error::invalid(format!("unknown condition {id:?} in ordering")))
            })
            .collect::<Result<_>>()?;
        if idx.len() != self.conditions.len() {
            return Err(Error::invalid("ordering must list every condition exactly once"));
        }
        Ok(SignificanceMatrix {
            conditions: order.to_vec(),
            cells: idx.iter().map(|&i| idx.iter().map(|&j| self.cells[i][j]).collect()).collect(),
            p_values: idx.iter().map(|&i| idx.iter().map(|&j| self.p_values[i][j]).collect()).collect(),
            ..self.clone()
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.conditions.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.conditions.iter().zip(&self.cells) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|c| {
                match c {
                    Cell::Above => "above",
                    Cell::Below => "below",
                    Cell::None => "none",
                }
                .to_string()
            }));
            w.write_record(&rec)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

struct PairOutcome {
    p: f64,
    /// Positive when the first condition scores higher.
    direction: f64,
    warning: Option<String>,
}

fn assemble(
    conditions: Vec<String>,
    pairs: Vec<((usize, usize), PairOutcome)>,
    cfg: &AnalysisConfig,
    test: PairwiseTest,
) -> Result<SignificanceMatrix> {
    let n = conditions.len();
    let ps: Vec<f64> = pairs.iter().map(|(_, o)| o.p).collect();
    let decisions = stats::correct(&ps, cfg.alpha, cfg.correction)?.decisions;
    let mut cells = vec![vec![Cell::None; n]; n];
    let mut p_values = vec![vec![None; n]; n];
    let mut warnings = Vec::new();
    for (((i, j), outcome), reject) in pairs.into_iter().zip(decisions) {
        if let Some(w) = outcome.warning {
            warnings.push(w);
        } else {
            p_values[i][j] = Some(outcome.p);
            p_values[j][i] = Some(outcome.p);
        }
        let cell = match (reject, outcome.direction.partial_cmp(&0.0)) {
            (true, Some(std::cmp::Ordering::Greater)) => Cell::Above,
            (true, Some(std::cmp::Ordering::Less)) => Cell::Below,
            _ => Cell::None,
        };
        cells[i][j] = cell;
        cells[j][i] = cell.flip();
    }
    Ok(SignificanceMatrix {
        conditions,
        cells,
        p_values,
        alpha: cfg.alpha,
        correction: cfg.correction,
        test,
        warnings,
    })
}

fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Welch's t on the score multisets reconstructed from counts, for every
/// unordered pair, corrected as configured. Pairs whose two samples both have
/// zero variance cannot be tested: they enter the family with p = 1 and a
/// warning.
pub fn pairwise_mas(conditions: &[(String, ResponseCounts)], cfg: &AnalysisConfig) -> Result<SignificanceMatrix> {
    cfg.validate()?;
    if conditions.len() < 2 {
        return Err(Error::invalid("pairwise comparison needs at least two conditions"));
    }
    let scores: Vec<Vec<f64>> = conditions.iter().map(|(_, c)| c.to_scores()).collect();
    let pairs = all_pairs(conditions.len())
        .map(|(i, j)| {
            let outcome = match stats::welch_t(&scores[i], &scores[j]) {
                Ok(r) => PairOutcome {
                    p: r.p_value,
                    direction: r.statistic,
                    warning: None,
                },
                Err(Error::DegenerateVariance) => PairOutcome {
                    p: 1.0,
                    direction: 0.0,
                    warning: Some(format!(
                        "{} vs {}: both score samples have zero variance; pair left untested",
                        conditions[i].0, conditions[j].0
                    )),
                },
                Err(e) => return Err(e),
            };
            Ok(((i, j), outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = conditions.iter().map(|(id, _)| id.clone()).collect();
    assemble(ids, pairs, cfg, PairwiseTest::WelchT)
}

/// Two-sided Mann-Whitney U for every unordered pair of rating samples,
/// corrected as configured. Direction follows the sign of the rank-biserial
/// correlation. With [`Sampling::CopresentPagesOnly`], `pages` must be given
/// and each pair uses only the pages on which both conditions were rated.
pub fn pairwise_humanlikeness(
    samples: &[(String, Vec<f64>)],
    pages: Option<&[PageRatings]>,
    cfg: &AnalysisConfig,
) -> Result<SignificanceMatrix> {
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::invalid("pairwise comparison needs at least two conditions"));
    }
    if let Some((id, _)) = samples.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::invalid(format!("condition {id} has no ratings")));
    }
    let pages = match (cfg.sampling, pages) {
        (Sampling::CopresentPagesOnly, None) => {
            return Err(Error::invalid("co-present sampling needs page-level ratings"))
        }
        (Sampling::CopresentPagesOnly, Some(p)) => Some(p),
        (Sampling::AllRatings, _) => None,
    };
    let index: HashMap<&str, usize> = samples.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();

    let pairs = all_pairs(samples.len())
        .map(|(i, j)| {
            let (x, y) = match pages {
                None => (samples[i].1.clone(), samples[j].1.clone()),
                Some(pages) => {
                    let (a, b) = (&samples[i].0, &samples[j].0);
                    debug_assert!(index.contains_key(a.as_str()));
                    pages
                        .iter()
                        .filter_map(|p| Some((*p.ratings.get(a)?, *p.ratings.get(b)?)))
                        .unzip()
                }
            };
            if x.is_empty() {
                return Err(Error::invalid(format!(
                    "{} and {} never share a page",
                    samples[i].0, samples[j].0
                )));
            }
            let r = stats::mann_whitney_u(&x, &y, cfg.mwu_mode)?;
            let rank_biserial = 2.0 * r.statistic / (x.len() as f64 * y.len() as f64) - 1.0;
            Ok((
                (i, j),
                PairOutcome {
                    p: r.p_value,
                    direction: rank_biserial,
                    warning: None,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = samples.iter().map(|(id, _)| id.clone()).collect();
    assemble(ids, pairs, cfg, PairwiseTest::MannWhitneyU)
}
