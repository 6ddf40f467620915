//! Critical Galton-Watson machinery: offspring laws, survival probabilities,
//! and exact samplers for conditioned trees.

mod offspring;
mod pruned;
mod sampler;
mod survival;
mod tree;

pub use offspring::{CriticalityAdjustment, DiscreteLaw, OffspringDistribution};
pub use pruned::ReachSampler;
pub use sampler::{
    conditioned_offspring, sample_conditioned_dying_tree, sample_gw_tree, sample_iibp,
    sample_tnm, IibpSampler, TnmSampler, TreeWindow,
};
pub use survival::SurvivalTable;
pub use tree::{Tree, TreeBuilder, TreeKind, NO_PARENT};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchingError {
    #[error("offspring law has no entries")]
    EmptySupport,
    #[error("offspring count {0} listed more than once")]
    DuplicateCount(usize),
    #[error("negative probability {p} for k = {k}")]
    NegativeProbability { k: usize, p: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("offspring mean is {0}, expected 1 (critical)")]
    NotCritical(f64),
    #[error("offspring variance is zero (p(1) = 1)")]
    DegenerateVariance,
    #[error("conditioning event has probability zero")]
    ImpossibleConditioning,
    #[error("survival table covers n <= {have}, need n = {need}")]
    TableTooShort { have: usize, need: usize },
    #[error("invalid height {0}: must be at least 1")]
    InvalidHeight(usize),
    #[error("invalid backbone parameters n = {n}, m = {m}: need n >= 1 and m >= 2n")]
    InvalidBackbone { n: usize, m: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown offspring preset '{0}'")]
    UnknownPreset(String),
}
