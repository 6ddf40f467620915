use rand::Rng;

use super::block::{conditions_one_two, select_ell};
use super::{classify_block, BlockClassification, BlockConfig, EventError};
use crate::branching::{OffspringDistribution, ReachSampler, Tree, TreeBuilder, TreeKind};
use crate::embedding::{Embedding, StepDistribution};

/// Exact sampler of [`classify_block`] on `T(n, m)` with a random-walk
/// embedding from the origin.
///
/// Only side trees that reach the level named in condition (1) or (3) can
/// matter, and of those only lineages reaching the next checkpoint
/// ([`BlockConfig::checkpoint`]). The sampler first draws which backbone
/// levels carry such side trees, stops as soon as (1), (2) or (3) fails, and
/// otherwise grows the two selected side trees with [`ReachSampler`] before
/// classifying the pruned tree.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    cfg: BlockConfig,
    m: usize,
    reach: ReachSampler,
    step: StepDistribution,
    first: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SampledBlock {
    pub classification: BlockClassification,
    /// The pruned tree, when sampling got past condition (3).
    pub tree: Option<Tree>,
}

impl BlockSampler {
    pub fn new(p: &OffspringDistribution, m: usize, step: StepDistribution, cfg: BlockConfig) -> Result<Self, EventError> {
        if m < 2 * cfg.n {
            return Err(EventError::ConfigInvalid(format!("m = {m} must be at least 2n = {}", 2 * cfg.n)));
        }
        let reach = ReachSampler::new(p, m);
        let probs = |first: bool| {
            let (range, target) = cfg.ell_search(first);
            range.map(|l| reach.side_reach_probability(l, target)).collect()
        };
        Ok(Self {
            first: probs(true),
            second: probs(false),
            cfg,
            m,
            reach,
            step,
        })
    }

    pub fn config(&self) -> &BlockConfig {
        &self.cfg
    }

    /// Levels of the first (or second) stretch whose side tree reaches its target.
    fn draw_hits<R: Rng + ?Sized>(&self, first: bool, rng: &mut R) -> Vec<usize> {
        let (range, _) = self.cfg.ell_search(first);
        let probs = if first { &self.first } else { &self.second };
        range.zip(probs).filter(|&(_, &p)| rng.random::<f64>() < p).map(|(l, _)| l).collect()
    }

    fn grow<R: Rng + ?Sized>(&self, b: &mut TreeBuilder, ell: usize, first: bool, rng: &mut R) {
        let (_, target) = self.cfg.ell_search(first);
        let cfg = self.cfg;
        self.reach
            .grow_side(b, ell as u32, ell, target, cfg.top(), &|h| cfg.checkpoint(h), rng);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledBlock {
        let cfg = &self.cfg;
        let mut out = BlockClassification::empty();
        let done = |classification| SampledBlock {
            classification,
            tree: None,
        };
        let (ell1, ok) = select_ell(&self.draw_hits(true, rng), cfg.i * cfg.delta_n, cfg.delta_n);
        if !ok {
            out.ell1 = ell1;
            out.failure = Some(1);
            return done(out);
        }
        let kind = TreeKind::Backbone {
            n: cfg.n,
            m: Some(self.m),
        };
        // backbone node ids equal their heights
        let mut b = TreeBuilder::new(true);
        for h in 0..cfg.n.min(cfg.top()) {
            b.add_child(h as u32, true);
        }
        self.grow(&mut b, ell1.expect("unique"), true, rng);
        let partial = b.clone().build(kind).expect("grown trees are well formed");
        if !conditions_one_two(&partial, cfg, &mut out) {
            return done(out);
        }
        let (ell2, ok) = select_ell(
            &self.draw_hits(false, rng),
            (cfg.i + cfg.k - 1) * cfg.delta_n,
            cfg.delta_n,
        );
        if !ok {
            out.ell2 = ell2;
            out.failure = Some(3);
            return done(out);
        }
        self.grow(&mut b, ell2.expect("unique"), false, rng);
        let tree = b.build(kind).expect("grown trees are well formed");
        let emb = Embedding::random_walk(&tree, &self.step, &vec![0; self.step.dim()], rng);
        let classification = classify_block(&tree, &emb, &self.step, cfg).expect("the pruned tree covers the block");
        SampledBlock {
            classification,
            tree: Some(tree),
        }
    }
}
