use super::EventError;
use crate::branching::Tree;
use crate::embedding::{Embedding, StepDistribution};

/// The unique descendant of `v` at `level_a` whose subtree reaches `level_b`,
/// if there is exactly one. For a backbone vertex only its side subtree is
/// searched.
pub fn udp_descendant(tree: &Tree, v: u32, level_a: u32, level_b: u32) -> Option<u32> {
    let start = tree.height(v);
    if start >= level_a {
        return None;
    }
    let mut found = None;
    let mut stack: Vec<u32> = tree
        .children(v)
        .iter()
        .copied()
        .filter(|&c| !tree.is_backbone(c))
        .collect();
    while let Some(w) = stack.pop() {
        // side subtrees never contain backbone nodes, so side_reach is the full reach
        if tree.side_reach(w) < level_b {
            continue;
        }
        if tree.height(w) == level_a {
            if found.is_some() {
                return None;
            }
            found = Some(w);
        } else {
            stack.extend_from_slice(tree.children(w));
        }
    }
    found
}

pub fn has_udp(tree: &Tree, v: u32, level_a: u32, level_b: u32) -> bool {
    udp_descendant(tree, v, level_a, level_b).is_some()
}

/// `‖w - u‖² ≤ h(W) - h(U)`, assuming `u ≼ w`.
#[inline]
pub(crate) fn ts_unchecked(step: &StepDistribution, emb: &Embedding, tree: &Tree, u: u32, w: u32) -> bool {
    let gap = (tree.height(w) - tree.height(u)) as f64;
    let dist = step.distance_sq(emb.site(w), emb.site(u));
    dist <= gap * (1.0 + 1e-12)
}

/// Whether `u ≼ w` are typically spaced: `‖w - u‖ ≤ sqrt(h(W) - h(U))`.
pub fn typically_spaced(
    tree: &Tree,
    emb: &Embedding,
    step: &StepDistribution,
    u: u32,
    w: u32,
) -> Result<bool, EventError> {
    if u != w && !tree.is_strict_ancestor(u, w) {
        return Err(EventError::NotDescendant { u, w });
    }
    Ok(ts_unchecked(step, emb, tree, u, w))
}
