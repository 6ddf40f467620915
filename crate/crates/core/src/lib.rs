//! Simulation laboratory for the trace of the critical oriented branching
//! random walk viewed as an electrical network.
//!
//! The crate is organised bottom-up:
//!
//! * [`branching`]: critical offspring laws, survival tables and exact samplers
//!   for Galton-Watson trees, backbone trees `T(n, m)` and the truncated
//!   incipient infinite branching process.
//! * [`embedding`]: symmetric lattice step laws with their covariance norm,
//!   exponential tilting, the random-walk mapping of a tree and the resulting
//!   trace multigraph.
//! * [`resistance`]: effective resistance on weighted multigraphs (preconditioned
//!   conjugate gradient with dense and flow-space oracles, commute times).
//! * [`events`]: block events along the backbone and intersection counting
//!   between two embedded trees.
//! * [`experiments`]: seeded, parallel Monte Carlo harness producing CSV/JSON
//!   reports and log-log exponent fits.

pub mod branching;
pub mod embedding;
pub mod events;
pub mod experiments;
pub mod resistance;

pub use branching::{
    BranchingError, DiscreteLaw, OffspringDistribution, SurvivalTable, Tree,
};
pub use embedding::{Embedding, EmbeddingError, StepDistribution, TiltedStep, Trace};
pub use events::{BlockClassification, BlockConfig, EventError, IntersectionReport};
pub use experiments::{ExperimentConfig, ExperimentError, ExperimentReport};
pub use resistance::{Network, ResistanceError, ResistanceResult, SolverOptions};
