//! Detectors for the block events of a backbone tree and its embedding, and
//! the two-tree intersection counter.

mod block;
mod block_sampler;
mod intersect;
mod intersect_sampler;
mod udp;

pub use block::{classify_block, BlockClassification, BlockConfig};
pub use block_sampler::{BlockSampler, SampledBlock};
pub use intersect::{
    b_event, b_threshold, count_intersection_grid, count_intersections, find_intersections, CandidateTally, IntersectionPair,
    IntersectionReport,
};
pub use intersect_sampler::IntersectionSampler;
pub use udp::{has_udp, typically_spaced, udp_descendant};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("invalid block configuration: {0}")]
    ConfigInvalid(String),
    #[error("node {w} is not a descendant of node {u}")]
    NotDescendant { u: u32, w: u32 },
}

/// Lower cutoff `floor(num/den · δn)`.
#[inline]
pub fn level_floor(num: usize, den: usize, delta_n: usize) -> usize {
    num * delta_n / den
}

/// Upper cutoff `ceil(num/den · δn)`.
#[inline]
pub fn level_ceil(num: usize, den: usize, delta_n: usize) -> usize {
    (num * delta_n).div_ceil(den)
}
