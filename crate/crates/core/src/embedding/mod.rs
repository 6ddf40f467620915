//! Symmetric lattice step laws, exponential tilting, the random-walk mapping
//! of a tree into `Z^d × Z_+`, and the resulting trace multigraph.

mod bridge;
mod lattice;
mod map;
mod oracle;
mod step;
mod tilt;

pub use bridge::{bridge_sample, local_clt_estimate, BridgeSample};
pub use lattice::{pack_site, MAX_COORD, MAX_DIM};
pub use map::{embed, Embedding, Trace, TraceEdge};
pub use oracle::{conditional_marginal, conditional_moment_oracle, transition_probabilities, TransitionGrid};
pub use step::StepDistribution;
pub use tilt::TiltedStep;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("step law has no entries")]
    EmptySupport,
    #[error("step {0:?} has dimension {1}, expected {2}")]
    DimensionMismatch(Vec<i32>, usize, usize),
    #[error("dimension {0} outside supported range 1..={max}", max = MAX_DIM)]
    UnsupportedDimension(usize),
    #[error("step law is not symmetric: p({0:?}) != p(-y)")]
    NotSymmetric(Vec<i32>),
    #[error("step support does not generate Z^d")]
    DegenerateSupport,
    #[error("step probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative or non-finite probability for step {0:?}")]
    NegativeProbability(Vec<i32>),
    #[error("step {0:?} listed more than once")]
    DuplicateStep(Vec<i32>),
    #[error("coordinate {0} exceeds the packed range ±{max}", max = MAX_COORD)]
    CoordinateOverflow(i64),
    #[error("endpoint parity does not match {n} steps of a period-2 walk")]
    ParityMismatch { n: usize },
    #[error("no bridge accepted after {attempts} attempts (estimated acceptance {estimated_rate:.3e})")]
    AttemptsExhausted { attempts: u64, estimated_rate: f64 },
    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),
    #[error("endpoint unreachable in {n} steps")]
    Unreachable { n: usize },
    #[error("tilt solve did not converge")]
    TiltNotConverged,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown step preset '{0}'")]
    UnknownPreset(String),
}
