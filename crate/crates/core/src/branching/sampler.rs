use std::ops::Range;

use rand::Rng;

use super::tree::{Tree, TreeKind, NO_PARENT};
use super::{BranchingError, DiscreteLaw, OffspringDistribution, SurvivalTable};

/// Law of the offspring count of a node whose subtree is conditioned to have
/// height `< r`: `q_r(k) ∝ p(k) (1 - θ(r-1))^k`.
pub fn conditioned_offspring(
    base: &DiscreteLaw,
    theta: &SurvivalTable,
    r: usize,
) -> Result<DiscreteLaw, BranchingError> {
    if r == 0 {
        return Err(BranchingError::ImpossibleConditioning);
    }
    let t = theta.get(r - 1).ok_or(BranchingError::TableTooShort {
        have: theta.n_max(),
        need: r - 1,
    })?;
    let log_die = (-t).ln_1p();
    let weights = base
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == 0 { p } else { p * (k as f64 * log_die).exp() })
        .collect();
    DiscreteLaw::from_weights(weights)
}

/// Offspring laws that may depend on the height of the parent.
#[derive(Debug, Clone)]
enum LawByHeight {
    Constant(DiscreteLaw),
    PerHeight(Vec<DiscreteLaw>),
}

impl LawByHeight {
    #[inline]
    fn at(&self, h: usize) -> &DiscreteLaw {
        match self {
            Self::Constant(law) => law,
            Self::PerHeight(laws) => &laws[h],
        }
    }
}

/// Restricts which parts of a backbone tree are materialised.
///
/// Side trees hang only off backbone vertices `V_i` with `i` in one of the
/// `attach` ranges, and nodes above `max_height` are dropped. Because offspring
/// laws depend only on height, the materialised part has exactly the law of the
/// corresponding part of the full tree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeWindow {
    pub attach: Option<Vec<Range<usize>>>,
    pub max_height: Option<usize>,
}

impl TreeWindow {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn attach_only(mut self, ranges: Vec<Range<usize>>) -> Self {
        self.attach = Some(ranges);
        self
    }

    pub fn up_to(mut self, max_height: usize) -> Self {
        self.max_height = Some(max_height);
        self
    }

    fn attaches(&self, i: usize) -> bool {
        match &self.attach {
            None => true,
            Some(ranges) => ranges.iter().any(|r| r.contains(&i)),
        }
    }
}

struct GrowthPlan<'a> {
    root_on_backbone: bool,
    backbone_len: usize,
    max_height: usize,
    window: &'a TreeWindow,
    side: &'a LawByHeight,
    inner: &'a LawByHeight,
    /// Draw offspring at the cut to detect truncation.
    detect_truncation: bool,
    /// Whether the last backbone vertex carries a side tree (infinite backbone).
    side_on_tip: bool,
}

/// Level-by-level growth; ids come out in breadth-first order.
fn grow<R: Rng + ?Sized>(plan: &GrowthPlan<'_>, rng: &mut R) -> (Vec<u32>, Vec<bool>, bool) {
    let mut parent = vec![NO_PARENT];
    let mut backbone = vec![plan.root_on_backbone];
    let mut truncated = false;
    let mut level = 0..1usize;
    let mut h = 0usize;
    while !level.is_empty() {
        let at_cut = h >= plan.max_height;
        if at_cut && !plan.detect_truncation {
            break;
        }
        let inner = plan.inner.at(h);
        for v in level.clone() {
            let k = if backbone[v] {
                if h < plan.backbone_len && !at_cut {
                    parent.push(v as u32);
                    backbone.push(true);
                }
                if !plan.window.attaches(h) || (h >= plan.backbone_len && !plan.side_on_tip) {
                    continue;
                }
                plan.side.at(h).sample(rng)
            } else if inner.is_sterile() {
                0
            } else {
                inner.sample(rng)
            };
            if at_cut {
                truncated |= k > 0;
                continue;
            }
            for _ in 0..k {
                parent.push(v as u32);
                backbone.push(false);
            }
        }
        if at_cut {
            break;
        }
        level = level.end..parent.len();
        h += 1;
    }
    (parent, backbone, truncated)
}

fn build(
    parts: (Vec<u32>, Vec<bool>, bool),
    kind: TreeKind,
    cut: Option<usize>,
) -> Tree {
    let (parent, flags, truncated) = parts;
    Tree::from_parents(parent, flags, kind)
        .expect("grown trees are well formed")
        .with_cut(cut.map(|c| c as u32), truncated)
}

/// Unconditioned Galton-Watson tree; nodes at `max_height` are kept but not
/// expanded, and the tree is flagged truncated if one of them has offspring.
pub fn sample_gw_tree<R: Rng + ?Sized>(
    p: &OffspringDistribution,
    max_height: usize,
    rng: &mut R,
) -> Tree {
    let law = LawByHeight::Constant(p.law().clone());
    let plan = GrowthPlan {
        root_on_backbone: false,
        backbone_len: 0,
        max_height,
        window: &TreeWindow::full(),
        side: &law,
        inner: &law,
        detect_truncation: true,
        side_on_tip: false,
    };
    build(grow(&plan, rng), TreeKind::GaltonWatson, Some(max_height))
}

/// Exact sample of a tree whose root reproduces according to `first_gen` and
/// every later node according to `p`, conditioned on height `< m`.
pub fn sample_conditioned_dying_tree<R: Rng + ?Sized>(
    first_gen: &DiscreteLaw,
    p: &OffspringDistribution,
    theta: &SurvivalTable,
    m: usize,
    rng: &mut R,
) -> Result<Tree, BranchingError> {
    if m == 0 {
        return Err(BranchingError::InvalidHeight(0));
    }
    let mut laws = Vec::with_capacity(m);
    laws.push(conditioned_offspring(first_gen, theta, m)?);
    for depth in 1..m {
        laws.push(conditioned_offspring(p.law(), theta, m - depth)?);
    }
    let laws = LawByHeight::PerHeight(laws);
    let plan = GrowthPlan {
        root_on_backbone: false,
        backbone_len: 0,
        max_height: m - 1,
        window: &TreeWindow::full(),
        side: &laws,
        inner: &laws,
        detect_truncation: false,
        side_on_tip: false,
    };
    Ok(build(grow(&plan, rng), TreeKind::GaltonWatson, None))
}

/// Sampler for `T(n, m)`: a backbone `V_0 … V_n` with side trees whose first
/// generation follows `p̃` and later generations `p`, every side tree
/// conditioned to stay below height `m`.
///
/// The per-height laws are precomputed, so one sampler serves many replicas.
#[derive(Debug, Clone)]
pub struct TnmSampler {
    n: usize,
    m: usize,
    side: LawByHeight,
    inner: LawByHeight,
}

impl TnmSampler {
    pub fn new(p: &OffspringDistribution, n: usize, m: usize) -> Result<Self, BranchingError> {
        if n == 0 || m < 2 * n {
            return Err(BranchingError::InvalidBackbone { n, m });
        }
        let theta = SurvivalTable::new(p, m);
        let tilde = p.size_biased_minus_one();
        // the first side generation sits at height i+1 and must die within m-i-1 levels
        let side = (0..n)
            .map(|i| conditioned_offspring(&tilde, &theta, m - i))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = (0..m)
            .map(|h| conditioned_offspring(p.law(), &theta, m - h))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            n,
            m,
            side: LawByHeight::PerHeight(side),
            inner: LawByHeight::PerHeight(inner),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Tree {
        self.sample_window(&TreeWindow::full(), rng)
    }

    pub fn sample_window<R: Rng + ?Sized>(&self, window: &TreeWindow, rng: &mut R) -> Tree {
        let max_height = window.max_height.unwrap_or(self.m - 1).min(self.m - 1);
        let plan = GrowthPlan {
            root_on_backbone: true,
            backbone_len: self.n,
            max_height,
            window,
            side: &self.side,
            inner: &self.inner,
            detect_truncation: false,
            side_on_tip: false,
        };
        let cut = (max_height < self.m - 1).then_some(max_height);
        build(
            grow(&plan, rng),
            TreeKind::Backbone {
                n: self.n,
                m: Some(self.m),
            },
            cut,
        )
    }
}

pub fn sample_tnm<R: Rng + ?Sized>(
    p: &OffspringDistribution,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<Tree, BranchingError> {
    Ok(TnmSampler::new(p, n, m)?.sample(rng))
}

/// Sampler for the incipient infinite branching process truncated at a height:
/// backbone of that length with unconditioned side trees (`p̃` then `p`).
#[derive(Debug, Clone)]
pub struct IibpSampler {
    side: LawByHeight,
    inner: LawByHeight,
}

impl IibpSampler {
    pub fn new(p: &OffspringDistribution) -> Self {
        Self {
            side: LawByHeight::Constant(p.size_biased_minus_one()),
            inner: LawByHeight::Constant(p.law().clone()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, height: usize, rng: &mut R) -> Result<Tree, BranchingError> {
        self.sample_window(height, &TreeWindow::full(), rng)
    }

    /// `window.max_height` is ignored; the cut is always `height`.
    pub fn sample_window<R: Rng + ?Sized>(
        &self,
        height: usize,
        window: &TreeWindow,
        rng: &mut R,
    ) -> Result<Tree, BranchingError> {
        if height == 0 {
            return Err(BranchingError::InvalidHeight(0));
        }
        let plan = GrowthPlan {
            root_on_backbone: true,
            backbone_len: height,
            max_height: height,
            window,
            side: &self.side,
            inner: &self.inner,
            detect_truncation: true,
            side_on_tip: true,
        };
        Ok(build(
            grow(&plan, rng),
            TreeKind::Backbone { n: height, m: None },
            Some(height),
        ))
    }
}

pub fn sample_iibp<R: Rng + ?Sized>(
    p: &OffspringDistribution,
    height: usize,
    rng: &mut R,
) -> Result<Tree, BranchingError> {
    IibpSampler::new(p).sample(height, rng)
}
