use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::udp::ts_unchecked;
use super::{level_ceil, level_floor};
use crate::branching::{Tree, NO_PARENT};
use crate::embedding::{pack_site, Embedding, StepDistribution};

/// Per-tree node counts by the first condition that excluded them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTally {
    /// Height outside `[5δn/6, δn]`.
    pub height: u64,
    /// Backbone node, or junction height outside `[δn/2, 4δn/6]`.
    pub junction: u64,
    /// One of the two spacing conditions fails.
    pub spacing: u64,
    /// Passed every single-tree condition.
    pub qualified: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionPair {
    pub u1: u32,
    pub u2: u32,
    pub site: Vec<i32>,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub count: u64,
    /// Filled only by [`find_intersections`].
    pub pairs: Vec<IntersectionPair>,
    pub tallies: [CandidateTally; 2],
    /// Candidates of the second tree whose site no candidate of the first
    /// tree occupies.
    pub unmatched: u64,
}

/// Off-backbone nodes satisfying the height, junction and spacing conditions.
fn candidates(tree: &Tree, emb: &Embedding, step: &StepDistribution, delta_n: usize) -> (Vec<u32>, CandidateTally) {
    let (u_lo, u_hi) = (level_floor(5, 6, delta_n) as u32, delta_n as u32);
    let (z_lo, z_hi) = (level_floor(1, 2, delta_n) as u32, level_ceil(4, 6, delta_n) as u32);
    let mut tally = CandidateTally::default();
    let mut out = Vec::new();
    // branch[v] = first off-backbone ancestor of v (inclusive), i.e. Z⁺
    let mut branch = vec![NO_PARENT; tree.len()];
    let mut junction_ok = vec![0u8; tree.len()];
    let root = tree.root();
    for v in 0..tree.len() as u32 {
        if !tree.is_backbone(v) {
            let p = tree.parent(v).expect("off-backbone nodes have parents");
            branch[v as usize] = if tree.is_backbone(p) { v } else { branch[p as usize] };
        }
        let h = tree.height(v);
        if h < u_lo || h > u_hi {
            tally.height += 1;
            continue;
        }
        let zp = branch[v as usize];
        if zp == NO_PARENT {
            tally.junction += 1;
            continue;
        }
        let z = tree.parent(zp).expect("branch start has a parent");
        let hz = tree.height(z);
        if hz < z_lo || hz > z_hi {
            tally.junction += 1;
            continue;
        }
        // the root-to-junction condition is shared by the whole branch
        let root_ok = match junction_ok[zp as usize] {
            0 => {
                let ok = ts_unchecked(step, emb, tree, root, z);
                junction_ok[zp as usize] = 1 + ok as u8;
                ok
            }
            s => s == 2,
        };
        if !(root_ok && ts_unchecked(step, emb, tree, zp, v)) {
            tally.spacing += 1;
            continue;
        }
        tally.qualified += 1;
        out.push(v);
    }
    (out, tally)
}

fn join(
    t1: (&Tree, &Embedding),
    t2: (&Tree, &Embedding),
    step: &StepDistribution,
    delta_n: usize,
    collect: bool,
) -> IntersectionReport {
    let (c1, tally1) = candidates(t1.0, t1.1, step, delta_n);
    let (c2, tally2) = candidates(t2.0, t2.1, step, delta_n);
    let key = |tree: &Tree, emb: &Embedding, v: u32| {
        (pack_site(emb.site(v)).expect("embedded coordinates fit the packed range"), tree.height(v))
    };
    let mut buckets: FxHashMap<(u128, u32), Vec<u32>> = FxHashMap::default();
    for &v in &c1 {
        buckets.entry(key(t1.0, t1.1, v)).or_default().push(v);
    }
    let mut report = IntersectionReport {
        count: 0,
        pairs: Vec::new(),
        tallies: [tally1, tally2],
        unmatched: 0,
    };
    for &w in &c2 {
        match buckets.get(&key(t2.0, t2.1, w)) {
            None => report.unmatched += 1,
            Some(list) => {
                report.count += list.len() as u64;
                if collect {
                    for &v in list {
                        report.pairs.push(IntersectionPair {
                            u1: v,
                            u2: w,
                            site: t2.1.site(w).to_vec(),
                            height: t2.0.height(w),
                        });
                    }
                }
            }
        }
    }
    report
}

/// `|I|` for two backbone trees of backbone length `δn`, each with its own
/// embedding (the roots may sit at different sites).
pub fn count_intersections(
    t1: (&Tree, &Embedding),
    t2: (&Tree, &Embedding),
    step: &StepDistribution,
    delta_n: usize,
) -> IntersectionReport {
    join(t1, t2, step, delta_n, false)
}

/// As [`count_intersections`], also listing every pair.
pub fn find_intersections(
    t1: (&Tree, &Embedding),
    t2: (&Tree, &Embedding),
    step: &StepDistribution,
    delta_n: usize,
) -> IntersectionReport {
    join(t1, t2, step, delta_n, true)
}

/// Pair counts of [`count_intersections`] for every `(first[i], second[j])`,
/// row-major in `i`, together with the qualified candidates of each tree.
pub fn count_intersection_grid(
    first: &[(&Tree, &Embedding)],
    second: &[(&Tree, &Embedding)],
    step: &StepDistribution,
    delta_n: usize,
) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let key = |tree: &Tree, emb: &Embedding, v: u32| {
        (pack_site(emb.site(v)).expect("embedded coordinates fit the packed range"), tree.height(v))
    };
    // per site and height, a linked list of (tree index, multiplicity)
    // entries threaded through `entries`, one entry per tree
    const END: u32 = u32::MAX;
    let mut heads: FxHashMap<(u128, u32), u32> = FxHashMap::default();
    let mut entries: Vec<(u32, u32, u32)> = Vec::new();
    let mut qualified1 = Vec::with_capacity(first.len());
    for (i, &(tree, emb)) in first.iter().enumerate() {
        let (cands, tally) = candidates(tree, emb, step, delta_n);
        qualified1.push(tally.qualified);
        for v in cands {
            let head = heads.entry(key(tree, emb, v)).or_insert(END);
            if *head != END && entries[*head as usize].0 == i as u32 {
                entries[*head as usize].1 += 1;
            } else {
                entries.push((i as u32, 1, *head));
                *head = (entries.len() - 1) as u32;
            }
        }
    }
    let cols = second.len();
    let mut counts = vec![0u64; first.len() * cols];
    let mut qualified2 = Vec::with_capacity(cols);
    for (j, &(tree, emb)) in second.iter().enumerate() {
        let (cands, tally) = candidates(tree, emb, step, delta_n);
        qualified2.push(tally.qualified);
        for v in cands {
            let mut at = heads.get(&key(tree, emb, v)).copied().unwrap_or(END);
            while at != END {
                let (i, c, next) = entries[at as usize];
                counts[i as usize * cols + j] += c as u64;
                at = next;
            }
        }
    }
    (counts, qualified1, qualified2)
}

/// `c0 σ⁴ D^{-d} (δn)^{(6-d)/2}`.
pub fn b_threshold(c0: f64, sigma2: f64, scale: f64, d: usize, delta_n: usize) -> f64 {
    c0 * sigma2 * sigma2 * scale.powi(-(d as i32)) * (delta_n as f64).powf((6.0 - d as f64) / 2.0)
}

pub fn b_event(report: &IntersectionReport, c0: f64, sigma2: f64, scale: f64, d: usize, delta_n: usize) -> bool {
    report.count > 0 && report.count as f64 >= b_threshold(c0, sigma2, scale, d, delta_n)
}
