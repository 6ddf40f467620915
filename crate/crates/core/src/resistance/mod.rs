//! Effective resistance on weighted multigraphs.

mod commute;
mod network;
mod oracle;
mod solve;

pub use commute::commute_time_mc;
pub use network::Network;
pub use oracle::{brute_force_resistance, dense_resistance, flow_resistance, BruteForce};
pub use solve::{effective_resistance, shorted_resistance, Method, ResistanceResult, SolverOptions};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistanceError {
    #[error("node {node} out of range for a network with {nodes} nodes")]
    NodeOutOfRange { node: u32, nodes: usize },
    #[error("conductance must be positive and finite, got {0}")]
    InvalidConductance(f64),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("nodes {a} and {z} are not connected")]
    Disconnected { a: u32, z: u32 },
    #[error("solver stopped after {iterations} iterations with relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("network too large for this oracle: {0}")]
    TooLarge(String),
    #[error("terminal set is empty")]
    EmptyTerminalSet,
    #[error("source node {0} belongs to the terminal set")]
    SourceInTerminalSet(u32),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
