use serde::{Deserialize, Serialize};

use super::udp::{ts_unchecked, udp_descendant};
use super::{level_ceil, level_floor, EventError};
use crate::branching::{Tree, TreeWindow};
use crate::embedding::{Embedding, StepDistribution};

/// Block `(i, …, i+K)` of a backbone of length `n`, cut into stretches of
/// `δn` levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub n: usize,
    pub delta: f64,
    pub delta_n: usize,
    pub k: usize,
    pub i: usize,
    pub c0: f64,
}

impl BlockConfig {
    pub fn new(n: usize, delta: f64, k: usize, i: usize, c0: f64) -> Result<Self, EventError> {
        let bad = |msg: String| Err(EventError::ConfigInvalid(msg));
        if !(delta > 0.0 && delta < 1.0) {
            return bad(format!("delta = {delta} must lie in (0, 1)"));
        }
        let dn = delta * n as f64;
        let delta_n = dn.round() as usize;
        if (dn - delta_n as f64).abs() > 1e-9 || delta_n == 0 {
            return bad(format!("delta * n = {dn} must be a positive integer"));
        }
        if k < 2 {
            return bad(format!("K = {k} must be at least 2"));
        }
        if k as f64 * delta > 0.5 + 1e-12 {
            return bad(format!("K * delta = {} exceeds 1/2", k as f64 * delta));
        }
        if delta >= 1.0 / (k + 4) as f64 {
            return bad(format!("delta = {delta} violates delta < 1/(K+4) = {}", 1.0 / (k + 4) as f64));
        }
        if (i + k) * delta_n > n {
            return bad(format!("block i = {i} with K = {k} runs past the backbone end"));
        }
        if !(c0 > 0.0) {
            return bad(format!("c0 = {c0} must be positive"));
        }
        Ok(Self {
            n,
            delta,
            delta_n,
            k,
            i,
            c0,
        })
    }

    /// Level `j·δn`.
    fn level(&self, j: usize) -> usize {
        j * self.delta_n
    }

    /// The part of the tree the classification reads: side trees hanging off
    /// the two attachment stretches, up to height `(i+K+2)δn`.
    pub fn window(&self) -> TreeWindow {
        let (i, k) = (self.i, self.k);
        TreeWindow::full()
            .attach_only(vec![
                self.level(i)..self.level(i + 1),
                self.level(i + k - 1)..self.level(i + k),
            ])
            .up_to(self.level(i + k + 2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockClassification {
    pub tree_good: bool,
    pub spatially_good: bool,
    pub good: bool,
    pub ell1: Option<usize>,
    pub ell2: Option<usize>,
    /// `Y_{i+1}, …, Y_{i+K+1}` as far as they exist.
    pub y_chain: Vec<u32>,
    /// `X'_{i+K}, X'_{i+K+1}` as far as they exist.
    pub x_chain: Vec<u32>,
    /// First failed numbered condition, 1 to 6.
    pub failure: Option<u8>,
}

/// Backbone levels in `range` whose side tree reaches `target`.
fn reaching(tree: &Tree, range: std::ops::Range<usize>, target: u32) -> Vec<usize> {
    let bb = tree.backbone();
    range.filter(|&l| l < bb.len() && tree.side_reach(bb[l]) >= target).collect()
}

/// Conditions (1) and (3): the unique `ℓ` among `hits`, and whether it lies
/// in the middle half of the stretch starting at `stretch`.
pub(crate) fn select_ell(hits: &[usize], stretch: usize, delta_n: usize) -> (Option<usize>, bool) {
    match *hits {
        [l] => (
            Some(l),
            l >= stretch + level_floor(1, 4, delta_n) && l <= stretch + level_ceil(3, 4, delta_n),
        ),
        _ => (None, false),
    }
}

impl BlockConfig {
    /// Stretch, backbone range and reach target of conditions (1) and (3).
    pub(crate) fn ell_search(&self, first: bool) -> (std::ops::Range<usize>, usize) {
        let (i, k) = (self.i, self.k);
        if first {
            (self.level(i)..self.level(i + 1), self.level(i + 2))
        } else {
            (self.level(i + k - 1)..self.level(i + k), self.level(i + k + 1))
        }
    }

    /// Smallest level `j·δn ≥ h`, capped at `(i+K+2)δn`. Reach questions in
    /// the classification only concern these levels.
    pub fn checkpoint(&self, h: usize) -> usize {
        (h.div_ceil(self.delta_n) * self.delta_n).min(self.level(self.i + self.k + 2))
    }

    pub fn top(&self) -> usize {
        self.level(self.i + self.k + 2)
    }
}

impl BlockClassification {
    pub(crate) fn empty() -> Self {
        Self {
            tree_good: false,
            spatially_good: false,
            good: false,
            ell1: None,
            ell2: None,
            y_chain: Vec::new(),
            x_chain: Vec::new(),
            failure: None,
        }
    }
}

fn check_tree(tree: &Tree, cfg: &BlockConfig) -> Result<(), EventError> {
    let top = cfg.top();
    if tree.backbone_len() < cfg.level(cfg.i + cfg.k) || tree.cut_height().is_some_and(|c| (c as usize) < top) {
        return Err(EventError::ConfigInvalid(format!(
            "tree must contain the backbone up to level {} and all nodes up to level {top}",
            cfg.level(cfg.i + cfg.k)
        )));
    }
    Ok(())
}

/// Conditions (1) and (2). These read only the side trees hanging off the
/// first stretch.
pub(crate) fn conditions_one_two(tree: &Tree, cfg: &BlockConfig, out: &mut BlockClassification) -> bool {
    let (i, k, dn) = (cfg.i, cfg.k, cfg.delta_n);
    let lv = |j: usize| cfg.level(j) as u32;
    let (range, target) = cfg.ell_search(true);
    let (ell1, in_window) = select_ell(&reaching(tree, range, target as u32), cfg.level(i), dn);
    out.ell1 = ell1;
    if !in_window {
        out.failure = Some(1);
        return false;
    }
    let ell1 = ell1.expect("window check implies a unique level");
    let Some(y) = udp_descendant(tree, tree.backbone()[ell1], lv(i + 1), lv(i + 2)) else {
        out.failure = Some(2);
        return false;
    };
    out.y_chain.push(y);
    for j in i + 2..=i + k {
        let prev = *out.y_chain.last().expect("chain is nonempty");
        let Some(y) = udp_descendant(tree, prev, lv(j), lv(j + 1)) else {
            out.failure = Some(2);
            return false;
        };
        out.y_chain.push(y);
    }
    true
}

/// Conditions (3) and (4).
fn conditions_three_four(tree: &Tree, cfg: &BlockConfig, out: &mut BlockClassification) -> bool {
    let (i, k, dn) = (cfg.i, cfg.k, cfg.delta_n);
    let lv = |j: usize| cfg.level(j) as u32;
    let (range, target) = cfg.ell_search(false);
    let (ell2, in_window) = select_ell(&reaching(tree, range, target as u32), cfg.level(i + k - 1), dn);
    out.ell2 = ell2;
    if !in_window {
        out.failure = Some(3);
        return false;
    }
    let ell2 = ell2.expect("window check implies a unique level");
    let Some(x1) = udp_descendant(tree, tree.backbone()[ell2], lv(i + k), lv(i + k + 1)) else {
        out.failure = Some(4);
        return false;
    };
    out.x_chain.push(x1);
    let Some(x2) = udp_descendant(tree, x1, lv(i + k + 1), lv(i + k + 2)) else {
        out.failure = Some(4);
        return false;
    };
    out.x_chain.push(x2);
    let y_last = *out.y_chain.last().expect("chain is nonempty");
    let Some(y2) = udp_descendant(tree, y_last, lv(i + k + 1), lv(i + k + 2)) else {
        out.failure = Some(4);
        return false;
    };
    out.y_chain.push(y2);
    true
}

/// Conditions (5) and (6) on a tree-good block.
fn spatial(tree: &Tree, emb: &Embedding, step: &StepDistribution, cfg: &BlockConfig, out: &mut BlockClassification) -> bool {
    let (i, k, dn) = (cfg.i, cfg.k, cfg.delta_n);
    let bb = tree.backbone();
    let (ell1, ell2) = (out.ell1.expect("tree-good"), out.ell2.expect("tree-good"));
    let ts = |u: u32, w: u32| ts_unchecked(step, emb, tree, u, w);
    let x = |j: usize| bb[cfg.level(j)];
    // (5)
    let mut five = ts(x(i), bb[ell1]) && ts(bb[ell1 + 1], x(i + 1)) && ts(x(i + k - 1), bb[ell2]);
    five = five && ts(bb[ell2 + 1], x(i + k));
    five = five && (i + 1..=(i + k).saturating_sub(2)).all(|j| ts(x(j), x(j + 1)));
    if !five {
        out.failure = Some(5);
        return false;
    }
    // (6)
    let x1 = out.x_chain[0];
    let v1_plus = tree.ancestor_at_height(out.y_chain[0], ell1 as u32 + 1);
    let v2_plus = tree.ancestor_at_height(x1, ell2 as u32 + 1);
    let ys = &out.y_chain[..k];
    let mut six = ts(v1_plus, ys[0]) && ts(v2_plus, x1);
    six = six && ys.windows(2).all(|w| ts(w[0], w[1]));
    six = six && step.distance_sq(emb.site(x1), emb.site(ys[k - 1])) <= dn as f64 * (1.0 + 1e-12);
    if !six {
        out.failure = Some(6);
        return false;
    }
    true
}

/// Evaluates the tree conditions (1)–(4), then the spatial conditions (5)–(6)
/// on the embedding.
pub fn classify_block(
    tree: &Tree,
    emb: &Embedding,
    step: &StepDistribution,
    cfg: &BlockConfig,
) -> Result<BlockClassification, EventError> {
    check_tree(tree, cfg)?;
    let mut out = BlockClassification::empty();
    if !conditions_one_two(tree, cfg, &mut out) || !conditions_three_four(tree, cfg, &mut out) {
        return Ok(out);
    }
    out.tree_good = true;
    if spatial(tree, emb, step, cfg, &mut out) {
        out.spatially_good = true;
        out.good = true;
    }
    Ok(out)
}
