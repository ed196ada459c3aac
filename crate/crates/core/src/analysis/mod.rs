//! Per-condition summaries and pairwise significance structures.
//!
//! Preference studies are analysed on the -2..=2 score scale: a mean
//! appropriateness score (MAS) with a t interval per condition, an
//! uncorrected chance test on that interval, and Welch's t between all
//! condition pairs with Benjamini-Hochberg control. Treating the five answer
//! levels as interval-scaled is what the t machinery implies. Rating studies
//! get order-statistic median intervals, t intervals for the mean, and
//! Mann-Whitney U between all pairs with Holm-Bonferroni control.

mod counts;
mod pairwise;

pub use counts::{read_count_table, write_count_table, ResponseCounts, COUNT_TABLE_HEADER};
pub use pairwise::{pairwise_humanlikeness, pairwise_mas, Cell, PairwiseTest, SignificanceMatrix};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::StudyKind;
use crate::ingest::IngestOutcome;
use crate::stats::{self, CorrectionMethod, Interval, MwuMode};
use crate::{Error, Result};

pub const ANALYSIS_SCHEMA: &str = "subjeval/analysis-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every retained rating of each condition.
    #[default]
    AllRatings,
    /// For each pair, only ratings from pages on which both conditions were
    /// rated.
    CopresentPagesOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub correction: CorrectionMethod,
    pub sampling: Sampling,
    /// Confidence level of every interval.
    pub level: f64,
    /// Outward rounding granularity for rating means; MAS is never rounded.
    pub mean_round_outward_to: Option<f64>,
    pub mwu_mode: MwuMode,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig::for_study(StudyKind::SpeechApprop)
    }
}

impl AnalysisConfig {
    pub fn for_study(kind: StudyKind) -> Self {
        AnalysisConfig {
            alpha: 0.05,
            correction: if kind.is_pairwise() {
                CorrectionMethod::BhFdr
            } else {
                CorrectionMethod::HolmBonferroni
            },
            sampling: Sampling::AllRatings,
            level: 0.95,
            mean_round_outward_to: if kind.is_pairwise() { None } else { Some(1.0) },
            mwu_mode: MwuMode::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!("level must lie in (0,1), got {}", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition_id: String,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mas: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pref_matched: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ResponseCounts>,
    /// Rating histogram over slider values 0..=100.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<u64>>,
}

impl ConditionSummary {
    pub fn chance(&self) -> Option<ChanceOutcome> {
        self.mas.map(|m| chance_test(&m.interval))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasSummary {
    pub mas: f64,
    pub interval: Interval,
    pub pref_matched: f64,
}

/// MAS, its t interval over the reconstructed score multiset, and the
/// tie-split share of matched preferences.
pub fn mas_from_counts(c: &ResponseCounts, level: f64) -> Result<MasSummary> {
    if c.total() < 2 {
        return Err(Error::invalid(format!(
            "a MAS interval needs at least two responses, got {}",
            c.total()
        )));
    }
    let (mas, interval) = stats::mean_ci(&c.to_scores(), level, None)?;
    Ok(MasSummary {
        mas,
        interval,
        pref_matched: c.pref_matched(),
    })
}

pub fn summarize_counts(condition_id: &str, counts: &ResponseCounts, level: f64) -> Result<ConditionSummary> {
    let m = mas_from_counts(counts, level)?;
    Ok(ConditionSummary {
        condition_id: condition_id.to_string(),
        n: counts.total(),
        median: None,
        mean: None,
        mas: Some(Estimate {
            value: m.mas,
            interval: m.interval,
        }),
        pref_matched: Some(m.pref_matched),
        counts: Some(*counts),
        histogram: None,
    })
}

pub fn summarize_ratings(condition_id: &str, ratings: &[f64], cfg: &AnalysisConfig) -> Result<ConditionSummary> {
    if ratings.len() < 2 {
        return Err(Error::invalid(format!(
            "condition {condition_id} has {} rating(s); at least two are needed",
            ratings.len()
        )));
    }
    let (median, median_ci) = stats::median_ci(ratings, cfg.level)?;
    let (mean, mean_ci) = stats::mean_ci(ratings, cfg.level, cfg.mean_round_outward_to)?;
    let mut histogram = vec![0u64; 101];
    for &r in ratings {
        if (0.0..=100.0).contains(&r) {
            histogram[r.round() as usize] += 1;
        }
    }
    Ok(ConditionSummary {
        condition_id: condition_id.to_string(),
        n: ratings.len() as u64,
        median: Some(Estimate {
            value: median,
            interval: median_ci,
        }),
        mean: Some(Estimate {
            value: mean,
            interval: mean_ci,
        }),
        mas: None,
        pref_matched: None,
        counts: None,
        histogram: Some(histogram),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChanceOutcome {
    AboveChance,
    BelowChance,
    NotDistinguishable,
}

/// Compares a MAS interval with zero, without multiple-comparison correction.
/// Always pass the unrounded interval.
pub fn chance_test(mas_interval: &Interval) -> ChanceOutcome {
    if mas_interval.lower > 0.0 {
        ChanceOutcome::AboveChance
    } else if mas_interval.upper < 0.0 {
        ChanceOutcome::BelowChance
    } else {
        ChanceOutcome::NotDistinguishable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub mean: f64,
}

/// Box-plot statistics with type-7 quartiles and whiskers at the 2.5th and
/// 97.5th percentiles, so the whiskers span 95% of the ratings.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxplotStats> {
    stats::check_finite("sample", samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p| stats::quantile_type7(&sorted, p);
    Ok(BoxplotStats {
        median: q(0.5),
        q25: q(0.25),
        q75: q(0.75),
        whisker_low: q(0.025),
        whisker_high: q(0.975),
        mean: stats::mean(&sorted),
    })
}

/// Everything `analyze` produces for one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub config: AnalysisConfig,
    pub summaries: Vec<ConditionSummary>,
    #[serde(default)]
    pub chance: BTreeMap<String, ChanceOutcome>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub boxplots: BTreeMap<String, BoxplotStats>,
    /// Absent when fewer than two conditions are available.
    #[serde(default)]
    pub matrix: Option<SignificanceMatrix>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("analysis line {}, column {}", e.line(), e.column()), e.to_string()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(ANALYSIS_SCHEMA) => serde_json::from_value(value).map_err(|e| Error::schema("analysis", e.to_string())),
            other => Err(Error::schema(
                "analysis field `schema`",
                format!("expected {ANALYSIS_SCHEMA:?}, found {other:?}"),
            )),
        }
    }

    pub fn summary(&self, condition_id: &str) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.condition_id == condition_id)
    }
}

/// Analyses a preference study given as per-condition count rows.
pub fn analyze_counts(rows: &[(String, ResponseCounts)], cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    cfg.validate()?;
    let summaries = rows
        .iter()
        .map(|(id, c)| summarize_counts(id, c, cfg.level))
        .collect::<Result<Vec<_>>>()?;
    let chance = summaries
        .iter()
        .filter_map(|s| s.chance().map(|c| (s.condition_id.clone(), c)))
        .collect();
    let matrix = if rows.len() >= 2 { Some(pairwise_mas(rows, cfg)?) } else { None };
    Ok(AnalysisReport {
        schema: ANALYSIS_SCHEMA.to_string(),
        config: *cfg,
        summaries,
        chance,
        boxplots: BTreeMap::new(),
        matrix,
    })
}

/// Analyses ingested responses according to the study kind.
pub fn analyze_outcome(outcome: &IngestOutcome, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    cfg.validate()?;
    let empty: Vec<&String> = outcome.samples.iter().filter(|(_, v)| v.is_empty()).map(|(k, _)| k).collect();
    if !empty.is_empty() {
        return Err(Error::invalid(format!(
            "no retained responses for condition(s) {empty:?} ({} of {} records retained, {} from excluded participants)",
            outcome.tally.retained, outcome.tally.total, outcome.tally.excluded_participant_responses
        )));
    }
    if outcome.study_kind.is_pairwise() {
        let rows: Vec<(String, ResponseCounts)> = outcome.counts.iter().map(|(k, v)| (k.clone(), *v)).collect();
        return analyze_counts(&rows, cfg);
    }
    let summaries = outcome
        .samples
        .iter()
        .map(|(id, xs)| summarize_ratings(id, xs, cfg))
        .collect::<Result<Vec<_>>>()?;
    let boxplots = outcome
        .samples
        .iter()
        .map(|(id, xs)| Ok((id.clone(), boxplot_stats(xs)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let samples: Vec<(String, Vec<f64>)> = outcome.samples.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let matrix = if samples.len() >= 2 {
        Some(pairwise_humanlikeness(&samples, Some(&outcome.pages), cfg)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        schema: ANALYSIS_SCHEMA.to_string(),
        config: *cfg,
        summaries,
        chance: BTreeMap::new(),
        boxplots,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mas_examples_from_appendix_counts() {
        let na = mas_from_counts(&ResponseCounts::new(755, 452, 185, 217, 157), 0.95).unwrap();
        assert!((na.mas - 0.8103).abs() < 5e-5);
        assert!((na.interval.half_width() - 0.062).abs() < 5e-4);
        assert!((na.pref_matched - 0.736).abs() < 5e-4);
        let sc = mas_from_counts(&ResponseCounts::new(72, 284, 1057, 314, 76), 0.95).unwrap();
        assert!((sc.mas + 0.0211).abs() < 5e-5);
        assert!((sc.pref_matched - 0.491).abs() < 5e-4);
    }

    #[test]
    fn all_equal_is_exactly_chance() {
        let m = mas_from_counts(&ResponseCounts::new(0, 0, 40, 0, 0), 0.95).unwrap();
        assert_eq!(m.mas, 0.0);
        assert_eq!(m.pref_matched, 0.5);
        assert_eq!(chance_test(&m.interval), ChanceOutcome::NotDistinguishable);
    }

    #[test]
    fn zero_total_is_invalid() {
        assert!(mas_from_counts(&ResponseCounts::default(), 0.95).is_err());
    }

    #[test]
    fn chance_on_straddling_interval() {
        let i = Interval { lower: -0.01, upper: 0.01, level: 0.95 };
        assert_eq!(chance_test(&i), ChanceOutcome::NotDistinguishable);
        let i = Interval { lower: 0.001, upper: 0.2, level: 0.95 };
        assert_eq!(chance_test(&i), ChanceOutcome::AboveChance);
        let i = Interval { lower: -0.3, upper: -0.2, level: 0.95 };
        assert_eq!(chance_test(&i), ChanceOutcome::BelowChance);
    }

    #[test]
    fn boxplot_examples() {
        let b = boxplot_stats(&[7.0; 9]).unwrap();
        assert_eq!([b.median, b.q25, b.q75, b.whisker_low, b.whisker_high], [7.0; 5]);
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = boxplot_stats(&xs).unwrap();
        assert!((b.q25 - 25.75).abs() < 1e-12 && (b.q75 - 75.25).abs() < 1e-12);
        assert!(boxplot_stats(&[]).is_err());
    }

    #[test]
    fn scaling_counts_keeps_mas_and_shrinks_ci() {
        let c = ResponseCounts::new(30, 50, 40, 45, 20);
        let a = mas_from_counts(&c, 0.95).unwrap();
        let b = mas_from_counts(&c.scaled(16), 0.95).unwrap();
        assert!((a.mas - b.mas).abs() < 1e-12);
        assert!((a.pref_matched - b.pref_matched).abs() < 1e-12);
        let ratio = a.interval.half_width() / b.interval.half_width();
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }
}
