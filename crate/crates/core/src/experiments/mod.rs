//! Seeded Monte Carlo harness: resistance and `γ(n, x)` estimation, volume
//! growth, survival ratios, intersection and block-event frequencies, and
//! log-log exponent fits.
//!
//! Replica `r` at size `n` draws from a ChaCha8 stream seeded with
//! [`derive_seed`]`(base, n, r)`, so results do not depend on the thread count.

mod config;
mod fit;
mod report;
mod runs;
mod seeds;
mod studies;

pub use config::{ExperimentConfig, MPolicy};
pub use fit::{fit_exponent, fit_window, slope_sampling_error, Fit, FitReport};
pub use report::{
    mean_stderr, summarize, DimensionComparison, ExperimentReport, InvariantTally, Record, Status, Summary,
    MAX_FAILURE_RATE, RECORD_HEADER, SUMMARY_HEADER,
};
pub use runs::{
    compare_dimensions, estimate_gamma, estimate_resistance, estimate_volume, survival_ratio, GammaRun,
    ResistanceRun, SurvivalRow, VolumeRun,
};
pub use seeds::{derive_seed, replica_rng, splitmix64};
pub use studies::{
    run_blocks, run_intersections, BlockRecord, BlockRun, BlockStudy, BlockSummary, IntersectionRecord,
    IntersectionRun, IntersectionStudy, IntersectionSummary, BLOCK_RECORD_HEADER, BLOCK_SUMMARY_HEADER,
    INTERSECTION_RECORD_HEADER, INTERSECTION_SUMMARY_HEADER,
};

use thiserror::Error;

use crate::branching::BranchingError;
use crate::events::EventError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid {field}: {msg}")]
    Validation { field: String, msg: String },
    #[error("fit needs at least two distinct n, got {0}")]
    TooFewPoints(usize),
    #[error("cannot fit a power law through value {value} at n = {n}")]
    NonPositiveValue { n: f64, value: f64 },
    #[error(transparent)]
    Branching(#[from] BranchingError),
    #[error(transparent)]
    Event(#[from] EventError),
}
