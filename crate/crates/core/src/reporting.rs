//! Publication-style outputs: summary tables, plot-ready data series and
//! significance-matrix rasters. Everything here is deterministic byte for
//! byte given identical inputs; numeric rounding happens only in table text.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{BoxplotStats, Cell, ConditionSummary, ResponseCounts, SignificanceMatrix};
use crate::design::ConditionKind;
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "subjeval/report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Descending median rating.
    ByMedian,
    /// Descending mean appropriateness score.
    ByMas,
    /// Natural motion first, then baselines, then submissions, each by id.
    Alphabetical,
}

impl std::str::FromStr for Ordering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by_median" | "median" => Ok(Ordering::ByMedian),
            "by_mas" | "mas" => Ok(Ordering::ByMas),
            "alphabetical" => Ok(Ordering::Alphabetical),
            other => Err(Error::invalid(format!("unknown ordering {other:?}"))),
        }
    }
}

fn kind_rank(id: &str) -> u8 {
    match ConditionKind::from_id(id) {
        Some(ConditionKind::Natural) => 0,
        Some(ConditionKind::Baseline) => 1,
        Some(ConditionKind::Submission) => 2,
        None => 3,
    }
}

/// Sorts summaries; ties always fall back to ascending condition id.
pub fn order_summaries<'a>(summaries: &'a [ConditionSummary], ordering: Ordering) -> Vec<&'a ConditionSummary> {
    let mut out: Vec<&ConditionSummary> = summaries.iter().collect();
    let key = |s: &ConditionSummary| -> f64 {
        match ordering {
            Ordering::ByMedian => s.median.map_or(f64::NEG_INFINITY, |m| m.value),
            Ordering::ByMas => s.mas.map_or(f64::NEG_INFINITY, |m| m.value),
            Ordering::Alphabetical => 0.0,
        }
    };
    out.sort_by(|a, b| {
        let primary = match ordering {
            Ordering::Alphabetical => kind_rank(&a.condition_id).cmp(&kind_rank(&b.condition_id)),
            _ => key(b).total_cmp(&key(a)),
        };
        primary.then_with(|| a.condition_id.cmp(&b.condition_id))
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| {} |", self.columns.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(self.columns.len()));
        for r in &self.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
        s
    }
}

fn half_width_around(value: f64, lower: f64, upper: f64) -> f64 {
    (value - lower).max(upper - value)
}

/// Formats summaries as a table: medians as integers with their interval,
/// means to one decimal, MAS to two decimals, percentages to one decimal.
/// Columns appear only when at least one summary has the statistic.
pub fn render_summary_table(summaries: &[ConditionSummary], ordering: Ordering) -> SummaryTable {
    let ordered = order_summaries(summaries, ordering);
    let has_median = ordered.iter().any(|s| s.median.is_some());
    let has_mean = ordered.iter().any(|s| s.mean.is_some());
    let has_mas = ordered.iter().any(|s| s.mas.is_some());
    let has_pref = ordered.iter().any(|s| s.pref_matched.is_some());
    let has_counts = ordered.iter().any(|s| s.counts.is_some());

    let mut columns = vec!["Condition".to_string()];
    if has_median {
        columns.push("Median".into());
    }
    if has_mean {
        columns.push("Mean".into());
    }
    if has_mas {
        columns.push("MAS".into());
    }
    if has_pref {
        columns.push("Pref. matched".into());
    }
    if has_counts {
        columns.extend(["2", "1", "0", "-1", "-2", "Sum"].map(String::from));
    }

    let rows = ordered
        .iter()
        .map(|s| {
            let mut row = vec![s.condition_id.clone()];
            if has_median {
                row.push(s.median.map_or(String::new(), |m| {
                    format!("{:.0} ∈ [{:.0}, {:.0}]", m.value, m.interval.lower, m.interval.upper)
                }));
            }
            if has_mean {
                row.push(s.mean.map_or(String::new(), |m| {
                    let hw = half_width_around(m.value, m.interval.lower, m.interval.upper);
                    format!("{:.1}±{:.1}", m.value, hw)
                }));
            }
            if has_mas {
                row.push(s.mas.map_or(String::new(), |m| {
                    format!("{:.2}±{:.2}", m.value, m.interval.half_width())
                }));
            }
            if has_pref {
                row.push(s.pref_matched.map_or(String::new(), |p| format!("{:.1}%", p * 100.0)));
            }
            if has_counts {
                match s.counts {
                    Some(c) => {
                        row.extend(c.as_array().iter().map(u64::to_string));
                        row.push(c.total().to_string());
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), 6)),
                }
            }
            row
        })
        .collect();

    SummaryTable {
        schema: REPORT_SCHEMA.to_string(),
        columns,
        rows,
    }
}

/// Maps a score on [-2, 2] linearly to a percentage on [0, 100].
pub fn scale_score(score: f64) -> f64 {
    (score + 2.0) * 25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub condition_id: String,
    /// Response shares from +2 (clearly matched) down to -2.
    pub proportions: [f64; 5],
    pub counts: ResponseCounts,
    pub total: u64,
    pub scaled_mas: f64,
    pub scaled_lower: f64,
    pub scaled_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarPlotSeries {
    pub schema: String,
    pub chance_line: f64,
    pub rows: Vec<BarRow>,
}

impl BarPlotSeries {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "condition", "p_plus2", "p_plus1", "p_zero", "p_minus1", "p_minus2", "total", "scaled_mas",
            "scaled_lower", "scaled_upper", "chance_line",
        ])?;
        for r in &self.rows {
            let mut rec = vec![r.condition_id.clone()];
            rec.extend(r.proportions.iter().map(|p| p.to_string()));
            rec.push(r.total.to_string());
            rec.extend([r.scaled_mas, r.scaled_lower, r.scaled_upper, self.chance_line].map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

/// Stacked response shares per condition with the MAS interval overlaid on
/// the percentage axis. Summaries without counts or MAS are skipped.
pub fn emit_barplot(summaries: &[ConditionSummary]) -> BarPlotSeries {
    let rows = summaries
        .iter()
        .filter_map(|s| {
            let (counts, mas) = (s.counts?, s.mas?);
            let total = counts.total();
            Some(BarRow {
                condition_id: s.condition_id.clone(),
                proportions: counts.as_array().map(|n| n as f64 / total as f64),
                counts,
                total,
                scaled_mas: scale_score(mas.value),
                scaled_lower: scale_score(mas.interval.lower),
                scaled_upper: scale_score(mas.interval.upper),
            })
        })
        .collect();
    BarPlotSeries {
        schema: REPORT_SCHEMA.to_string(),
        chance_line: 50.0,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterCell {
    /// Row condition significantly above the column condition.
    White,
    /// Row condition significantly below the column condition.
    Black,
    Grey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRaster {
    pub schema: String,
    pub conditions: Vec<String>,
    pub cells: Vec<Vec<RasterCell>>,
}

impl MatrixRaster {
    pub fn to_svg(&self) -> String {
        const CELL: usize = 24;
        const MARGIN: usize = 40;
        let n = self.conditions.len();
        let size = MARGIN + n * CELL + 4;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="11">"#
        );
        for (k, id) in self.conditions.iter().enumerate() {
            let c = MARGIN + k * CELL + CELL / 2;
            let _ = writeln!(s, r#"<text x="{c}" y="{}" text-anchor="middle">{id}</text>"#, MARGIN - 8);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{id}</text>"#, MARGIN - 6, c + 4);
        }
        for (i, row) in self.cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let fill = match cell {
                    RasterCell::White => "#ffffff",
                    RasterCell::Black => "#000000",
                    RasterCell::Grey => "#a0a0a0",
                };
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#606060" stroke-width="0.5"/>"##,
                    MARGIN + j * CELL,
                    MARGIN + i * CELL
                );
            }
        }
        s.push_str("</svg>\n");
        s
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
                    RasterCell::White => "white",
                    RasterCell::Black => "black",
                    RasterCell::Grey => "grey",
                }
                .to_string()
            }));
            w.write_record(&rec)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

pub fn emit_matrix(m: &SignificanceMatrix) -> MatrixRaster {
    MatrixRaster {
        schema: REPORT_SCHEMA.to_string(),
        conditions: m.conditions.clone(),
        cells: m
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Above => RasterCell::White,
                        Cell::Below => RasterCell::Black,
                        Cell::None => RasterCell::Grey,
                    })
                    .collect()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub condition_id: String,
    #[serde(flatten)]
    pub stats: BoxplotStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSeries {
    pub schema: String,
    pub rows: Vec<BoxplotRow>,
}

impl BoxplotSeries {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["condition", "whisker_low", "q25", "median", "q75", "whisker_high", "mean"])?;
        for r in &self.rows {
            let s = r.stats;
            let mut rec = vec![r.condition_id.clone()];
            rec.extend([s.whisker_low, s.q25, s.median, s.q75, s.whisker_high, s.mean].map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

pub fn emit_boxplot<'a, I>(stats: I) -> BoxplotSeries
where
    I: IntoIterator<Item = (&'a String, &'a BoxplotStats)>,
{
    BoxplotSeries {
        schema: REPORT_SCHEMA.to_string(),
        rows: stats
            .into_iter()
            .map(|(id, s)| BoxplotRow {
                condition_id: id.clone(),
                stats: *s,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{summarize_counts, Estimate};
    use crate::stats::Interval;

    fn mas_summary(id: &str, mas: f64) -> ConditionSummary {
        ConditionSummary {
            condition_id: id.into(),
            n: 10,
            median: None,
            mean: None,
            mas: Some(Estimate {
                value: mas,
                interval: Interval { lower: mas - 0.1, upper: mas + 0.1, level: 0.95 },
            }),
            pref_matched: None,
            counts: None,
            histogram: None,
        }
    }

    #[test]
    fn ties_break_by_id() {
        let s = vec![mas_summary("SK", 0.2), mas_summary("SB", 0.2), mas_summary("NA", 0.8)];
        let order: Vec<&str> = order_summaries(&s, Ordering::ByMas).iter().map(|s| s.condition_id.as_str()).collect();
        assert_eq!(order, ["NA", "SB", "SK"]);
    }

    #[test]
    fn alphabetical_groups_kinds() {
        let s: Vec<_> = ["SB", "BM", "SA", "NA", "BD"].iter().map(|id| mas_summary(id, 0.0)).collect();
        let order: Vec<&str> = order_summaries(&s, Ordering::Alphabetical).iter().map(|s| s.condition_id.as_str()).collect();
        assert_eq!(order, ["NA", "BD", "BM", "SA", "SB"]);
    }

    #[test]
    fn single_row_table() {
        let t = render_summary_table(&[mas_summary("SC", -0.0211)], Ordering::ByMas);
        assert_eq!(t.rows, vec![vec!["SC".to_string(), "-0.02±0.10".to_string()]]);
    }

    #[test]
    fn scaled_overlay() {
        assert_eq!(scale_score(0.0), 50.0);
        assert_eq!(scale_score(2.0), 100.0);
        assert_eq!(scale_score(-2.0), 0.0);
        let s = summarize_counts("NA", &ResponseCounts::new(0, 0, 9, 0, 0), 0.95).unwrap();
        let b = emit_barplot(&[s]);
        assert_eq!(b.rows[0].scaled_mas, 50.0);
        assert_eq!(b.rows[0].scaled_lower, 50.0);
        let all_clear = summarize_counts("NA", &ResponseCounts::new(7, 0, 0, 0, 0), 0.95).unwrap();
        assert_eq!(emit_barplot(&[all_clear]).rows[0].scaled_upper, 100.0);
    }

    #[test]
    fn na_overlay_center() {
        let s = summarize_counts("NA", &ResponseCounts::new(755, 452, 185, 217, 157), 0.95).unwrap();
        let b = emit_barplot(&[s]);
        assert!((b.rows[0].scaled_mas - 70.2577).abs() < 1e-3);
        let sum: f64 = b.rows[0].proportions.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
