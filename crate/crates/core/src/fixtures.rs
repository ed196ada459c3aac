//! Published response counts of the two preference studies, bundled as data
//! so the analysis can be checked against the printed tables.

use serde::Deserialize;

use crate::analysis::{read_count_table, ChanceOutcome, ResponseCounts};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct PublishedStudy {
    pub name: &'static str,
    pub counts_csv: &'static str,
    pub expected_csv: &'static str,
    /// Significant condition pairs reported for Welch's t with BH control.
    pub significant_pairs: usize,
    pub total_pairs: usize,
}

pub const SPEECH: PublishedStudy = PublishedStudy {
    name: "speech",
    counts_csv: include_str!("../data/speech_counts.csv"),
    expected_csv: include_str!("../data/speech_expected.csv"),
    significant_pairs: 56,
    total_pairs: 105,
};

pub const DYADIC: PublishedStudy = PublishedStudy {
    name: "dyadic",
    counts_csv: include_str!("../data/dyadic_counts.csv"),
    expected_csv: include_str!("../data/dyadic_expected.csv"),
    significant_pairs: 45,
    total_pairs: 105,
};

pub const ALL: [PublishedStudy; 2] = [SPEECH, DYADIC];

/// A printed table row: MAS and half-width to two decimals, matched-preference
/// share in percent to one decimal, and the reported chance classification.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedRow {
    pub condition: String,
    pub mas: f64,
    pub half_width: f64,
    pub pref_matched_pct: f64,
    pub chance: ChanceOutcome,
}

impl PublishedStudy {
    pub fn counts(&self) -> Result<Vec<(String, ResponseCounts)>> {
        read_count_table(self.counts_csv.as_bytes(), self.name)
    }

    pub fn expected(&self) -> Result<Vec<ExpectedRow>> {
        let mut rdr = csv::Reader::from_reader(self.expected_csv.as_bytes());
        Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}
