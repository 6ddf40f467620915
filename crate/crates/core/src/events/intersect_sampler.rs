use rand::Rng;

use super::{level_ceil, level_floor};
use crate::branching::{OffspringDistribution, ReachSampler, Tree, TreeBuilder, TreeKind};

/// Exact sampler of the part of `T(δn, 2δn)` that [`count_intersections`]
/// can see.
///
/// Candidates sit at heights `[5δn/6, δn]` in side trees hanging off backbone
/// levels `[δn/2, 4δn/6]`. The sampler keeps the backbone up to `δn`, draws
/// which of those levels carry a side tree reaching `5δn/6`, and grows only
/// the lineages that reach it. Every candidate and all its ancestors survive
/// the pruning, so the intersection count has the same law as on the full
/// tree.
///
/// [`count_intersections`]: super::count_intersections
#[derive(Debug, Clone)]
pub struct IntersectionSampler {
    delta_n: usize,
    reach: ReachSampler,
    junctions: std::ops::RangeInclusive<usize>,
    probs: Vec<f64>,
}

impl IntersectionSampler {
    pub fn new(p: &OffspringDistribution, delta_n: usize) -> Self {
        let reach = ReachSampler::new(p, 2 * delta_n);
        let junctions = level_floor(1, 2, delta_n)..=level_ceil(4, 6, delta_n).min(delta_n.saturating_sub(1));
        let lo = level_floor(5, 6, delta_n);
        let probs = junctions.clone().map(|l| reach.side_reach_probability(l, lo)).collect();
        Self {
            delta_n,
            reach,
            junctions,
            probs,
        }
    }

    pub fn delta_n(&self) -> usize {
        self.delta_n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Tree {
        let dn = self.delta_n;
        let lo = level_floor(5, 6, dn);
        let keep = move |h: usize| h.max(lo);
        // backbone node ids equal their heights
        let mut b = TreeBuilder::new(true);
        for h in 0..dn {
            b.add_child(h as u32, true);
        }
        for (l, &p) in self.junctions.clone().zip(&self.probs) {
            if rng.random::<f64>() < p {
                self.reach.grow_side(&mut b, l as u32, l, lo, dn, &keep, rng);
            }
        }
        b.build(TreeKind::Backbone { n: dn, m: Some(2 * dn) })
            .expect("grown trees are well formed")
    }
}
