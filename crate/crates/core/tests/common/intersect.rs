//! Pair-by-pair intersection oracle.

use brw_core::branching::{TnmSampler, Tree};
use brw_core::embedding::{Embedding, StepDistribution};
use brw_core::events::typically_spaced;
use rand_chacha::ChaCha8Rng;

/// Junction `Z` and first off-backbone node `Z⁺` above `u`, if any.
pub fn junction(tree: &Tree, u: u32) -> Option<(u32, u32)> {
    if tree.is_backbone(u) {
        return None;
    }
    let mut zp = u;
    loop {
        let p = tree.parent(zp)?;
        if tree.is_backbone(p) {
            return Some((p, zp));
        }
        zp = p;
    }
}

pub fn qualifies(tree: &Tree, emb: &Embedding, step: &StepDistribution, dn: usize, u: u32) -> bool {
    let h = tree.height(u) as usize;
    // fractional cutoffs round outwards
    if h < 5 * dn / 6 || h > dn {
        return false;
    }
    let Some((z, zp)) = junction(tree, u) else {
        return false;
    };
    let hz = tree.height(z) as usize;
    if hz < dn / 2 || hz > (4 * dn).div_ceil(6) {
        return false;
    }
    typically_spaced(tree, emb, step, tree.root(), z).unwrap() && typically_spaced(tree, emb, step, zp, u).unwrap()
}

/// Every pair of nodes, checked one by one.
pub fn exhaustive(a: (&Tree, &Embedding), b: (&Tree, &Embedding), step: &StepDistribution, dn: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for u1 in 0..a.0.len() as u32 {
        for u2 in 0..b.0.len() as u32 {
            if a.0.height(u1) == b.0.height(u2)
                && a.1.site(u1) == b.1.site(u2)
                && qualifies(a.0, a.1, step, dn, u1)
                && qualifies(b.0, b.1, step, dn, u2)
            {
                out.push((u1, u2));
            }
        }
    }
    out
}

pub fn small_tree(sampler: &TnmSampler, rng: &mut ChaCha8Rng) -> Tree {
    loop {
        let t = sampler.sample(rng);
        if t.len() <= 200 {
            return t;
        }
    }
}

/// Two small trees from `seed`, compared through the bucket join, the
/// pair list and the grid count.
pub fn join_matches_oracle(seed: u64, dn: usize, d: usize) -> Result<(), String> {
    use brw_core::branching::OffspringDistribution;
    use brw_core::events::{count_intersection_grid, find_intersections};
    use rand::SeedableRng;

    let p = OffspringDistribution::binary();
    let step = StepDistribution::lazy_srw(d).unwrap();
    let sampler = TnmSampler::new(&p, dn, 2 * dn).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t1 = small_tree(&sampler, &mut rng);
    let t2 = small_tree(&sampler, &mut rng);
    let e1 = Embedding::random_walk(&t1, &step, &vec![0; d], &mut rng);
    let e2 = Embedding::random_walk(&t2, &step, &vec![0; d], &mut rng);
    let oracle = exhaustive((&t1, &e1), (&t2, &e2), &step, dn);
    let fast = find_intersections((&t1, &e1), (&t2, &e2), &step, dn);
    let mut found: Vec<(u32, u32)> = fast.pairs.iter().map(|q| (q.u1, q.u2)).collect();
    found.sort_unstable();
    let (grid, _, _) = count_intersection_grid(&[(&t1, &e1)], &[(&t2, &e2)], &step, dn);
    if fast.count as usize != oracle.len() || found != oracle || grid != [fast.count] {
        return Err(format!(
            "seed {seed}, δn {dn}, d {d}: join {} grid {grid:?} oracle {}",
            fast.count,
            oracle.len()
        ));
    }
    Ok(())
}
