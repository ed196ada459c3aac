use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Histogram of pairwise answers on the -2..=2 scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResponseCounts {
    pub n_plus2: u64,
    pub n_plus1: u64,
    pub n_zero: u64,
    pub n_minus1: u64,
    pub n_minus2: u64,
}

impl ResponseCounts {
    pub const fn new(n_plus2: u64, n_plus1: u64, n_zero: u64, n_minus1: u64, n_minus2: u64) -> Self {
        ResponseCounts {
            n_plus2,
            n_plus1,
            n_zero,
            n_minus1,
            n_minus2,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_plus2 + self.n_plus1 + self.n_zero + self.n_minus1 + self.n_minus2
    }

    /// Counts ordered from +2 down to -2.
    pub fn as_array(&self) -> [u64; 5] {
        [self.n_plus2, self.n_plus1, self.n_zero, self.n_minus1, self.n_minus2]
    }

    /// Tallies integer scores; non-integer or out-of-range values are ignored.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut c = ResponseCounts::default();
        for &s in scores {
            match s {
                v if v == 2.0 => c.n_plus2 += 1,
                v if v == 1.0 => c.n_plus1 += 1,
                v if v == 0.0 => c.n_zero += 1,
                v if v == -1.0 => c.n_minus1 += 1,
                v if v == -2.0 => c.n_minus2 += 1,
                _ => {}
            }
        }
        c
    }

    /// The score multiset the counts describe, highest scores first.
    pub fn to_scores(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (score, n) in [2.0, 1.0, 0.0, -1.0, -2.0].into_iter().zip(self.as_array()) {
            out.extend(std::iter::repeat_n(score, n as usize));
        }
        out
    }

    /// Mean score (the mean appropriateness score).
    pub fn mean_score(&self) -> f64 {
        let num = 2.0 * self.n_plus2 as f64 + self.n_plus1 as f64 - self.n_minus1 as f64 - 2.0 * self.n_minus2 as f64;
        num / self.total() as f64
    }

    /// Share of answers preferring the matched stimulus, ties split evenly.
    pub fn pref_matched(&self) -> f64 {
        (self.n_plus2 as f64 + self.n_plus1 as f64 + self.n_zero as f64 / 2.0) / self.total() as f64
    }

    pub fn scaled(&self, k: u64) -> Self {
        ResponseCounts::new(
            self.n_plus2 * k,
            self.n_plus1 * k,
            self.n_zero * k,
            self.n_minus1 * k,
            self.n_minus2 * k,
        )
    }
}

pub const COUNT_TABLE_HEADER: [&str; 7] = ["condition", "plus2", "plus1", "zero", "minus1", "minus2", "sum"];

/// Reads a count table laid out like the appendix tables:
/// `condition,plus2,plus1,zero,minus1,minus2[,sum]`. When the `sum` column is
/// present it must equal the row total.
pub fn read_count_table<R: Read>(input: R, source: &str) -> Result<Vec<(String, ResponseCounts)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let with_sum = header == COUNT_TABLE_HEADER;
    if !with_sum && header != COUNT_TABLE_HEADER[..6] {
        return Err(Error::schema(
            format!("{source}:1"),
            format!("count table header must be `{}` (sum optional)", COUNT_TABLE_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let ctx = format!("{source}:{line}");
        if rec.len() != header.len() {
            return Err(Error::schema(ctx, format!("expected {} columns, found {}", header.len(), rec.len())));
        }
        let mut n = [0u64; 6];
        for (i, slot) in n.iter_mut().enumerate().take(header.len() - 1) {
            *slot = rec[i + 1]
                .parse()
                .map_err(|_| Error::schema(ctx.clone(), format!("column {} is not a count: {:?}", header[i + 1], &rec[i + 1])))?;
        }
        let counts = ResponseCounts::new(n[0], n[1], n[2], n[3], n[4]);
        if with_sum && counts.total() != n[5] {
            return Err(Error::schema(ctx, format!("counts add up to {} but sum column says {}", counts.total(), n[5])));
        }
        if counts.total() == 0 {
            return Err(Error::schema(ctx, "row has no responses"));
        }
        rows.push((rec[0].to_string(), counts));
    }
    Ok(rows)
}

pub fn write_count_table<W: std::io::Write>(rows: &[(String, ResponseCounts)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUNT_TABLE_HEADER)?;
    for (id, c) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(c.as_array().iter().map(u64::to_string));
        rec.push(c.total().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
