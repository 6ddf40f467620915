use rand::Rng;

use super::Network;

/// Monte Carlo estimate of `E_a τ_z + E_z τ_a` for the walk that leaves a
/// node along an edge chosen proportionally to its conductance.
///
/// # Panics
/// If `a` and `z` are not connected or `reps == 0`.
pub fn commute_time_mc<R: Rng + ?Sized>(net: &Network, a: u32, z: u32, rng: &mut R, reps: usize) -> f64 {
    assert!(reps >= 1, "reps must be positive");
    assert!(net.connected(a, z), "terminals must be connected");
    if a == z {
        return 0.0;
    }
    let hit = |from: u32, to: u32, rng: &mut R| -> u64 {
        let mut v = from;
        let mut steps = 0u64;
        while v != to {
            let nbrs = net.neighbors(v);
            let mut u = rng.random::<f64>() * net.weighted_degree(v);
            let mut next = nbrs[nbrs.len() - 1].0;
            for &(w, c) in nbrs {
                if u < c {
                    next = w;
                    break;
                }
                u -= c;
            }
            v = next;
            steps += 1;
        }
        steps
    };
    let total: u64 = (0..reps).map(|_| hit(a, z, rng) + hit(z, a, rng)).sum();
    total as f64 / reps as f64
}
