//! Toolkit for designing, running and analyzing crowdsourced subjective
//! evaluations of generated motion.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`stats`]: distribution functions, two-sample tests, multiple-comparison
//!   corrections and confidence intervals.
//! * [`design`]: conditions, segments, mismatch derangements and
//!   counterbalanced study plans with attention checks.
//! * [`ingest`]: response records, attention-check grading, participant
//!   exclusion and conversion of raw answers to numeric values.
//! * [`analysis`]: per-condition summaries and pairwise significance matrices.
//! * [`reporting`]: summary tables and plot-ready data series.
//! * [`sim`]: a synthetic rater population with known ground truth.
//! * [`service`]: the HTTP study runner and its append-only event log.
//! * [`fixtures`]: the published appendix response counts.

pub mod analysis;
pub mod design;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod reporting;
pub mod service;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
