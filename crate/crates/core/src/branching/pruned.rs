use rand::Rng;

use super::{DiscreteLaw, OffspringDistribution, SurvivalTable, TreeBuilder};

/// Side trees of `T(n, m)` grown only along lineages that reach given levels.
///
/// A node at height `h` is kept when its subtree reaches `keep(h) ≥ h`.
/// `keep` must be non-decreasing and constant on each run `(c', c]` between
/// consecutive values `c` it takes, so every kept node reaches `keep(h)`
/// inside the kept subtree.
/// Each kept node carries the event "reaches `L`, does not reach `U`" and its
/// children are drawn from the offspring law tilted by that event, so the
/// result has exactly the law of the full side tree with the unkept nodes
/// removed.
#[derive(Debug, Clone)]
pub struct ReachSampler {
    inner: DiscreteLaw,
    side: DiscreteLaw,
    table: SurvivalTable,
    m: usize,
    /// Offspring law at each height given only "dies before `m`".
    free: Vec<DiscreteLaw>,
}

struct Pending {
    node: u32,
    height: usize,
    reach: usize,
    below: usize,
    side_root: bool,
}

impl ReachSampler {
    pub fn new(p: &OffspringDistribution, m: usize) -> Self {
        let mut s = Self {
            inner: p.law().clone(),
            side: p.size_biased_minus_one(),
            table: SurvivalTable::new(p, m),
            m,
            free: Vec::new(),
        };
        s.free = (0..m)
            .map(|h| {
                let alive = 1.0 - s.theta(m as isize - h as isize - 1);
                let weights = s.inner.probabilities().iter().enumerate();
                let weights = weights.map(|(k, &pk)| pk * alive.powi(k as i32)).collect();
                DiscreteLaw::from_weights(weights).expect("p(0) > 0 for a critical law")
            })
            .collect();
        s
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `θ(k)`, with `θ(k) = 1` for `k ≤ 0`.
    fn theta(&self, k: isize) -> f64 {
        if k <= 0 {
            1.0
        } else {
            self.table.theta(k as usize)
        }
    }

    /// Probability that the side tree of backbone vertex `V_ell` reaches
    /// height `level`.
    pub fn side_reach_probability(&self, ell: usize, level: usize) -> f64 {
        if level <= ell {
            return 1.0;
        }
        let alive = 1.0 - self.theta(self.m as isize - ell as isize - 1);
        let short = 1.0 - self.theta(level as isize - ell as isize - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for (k, &pk) in self.side.probabilities().iter().enumerate() {
            let k = k as i32;
            num += pk * (alive.powi(k) - short.powi(k));
            den += pk * alive.powi(k);
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// Adds the kept part of the side tree of backbone node `at` (height
    /// `ell`), conditioned on reaching `level`, with nothing above `top`.
    /// `level` must be one of the values of `keep`.
    /// Returns the number of nodes added.
    pub fn grow_side<R: Rng + ?Sized>(
        &self,
        builder: &mut TreeBuilder,
        at: u32,
        ell: usize,
        level: usize,
        top: usize,
        keep: &dyn Fn(usize) -> usize,
        rng: &mut R,
    ) -> usize {
        let mut added = 0;
        let mut stack = vec![Pending {
            node: at,
            height: ell,
            reach: level,
            below: self.m,
            side_root: true,
        }];
        let mut kept: Vec<(usize, usize)> = Vec::new();
        while let Some(v) = stack.pop() {
            if v.height >= top {
                continue;
            }
            let threshold = keep(v.height + 1).min(top);
            if !v.side_root && v.below == self.m && v.reach <= v.height && threshold <= v.height + 1 {
                // nothing left to condition on but dying before `m`
                for _ in 0..self.free[v.height].sample(rng) {
                    let id = builder.add_child(v.node, false);
                    added += 1;
                    stack.push(Pending {
                        node: id,
                        height: v.height + 1,
                        reach: v.height + 1,
                        below: self.m,
                        side_root: false,
                    });
                }
                continue;
            }
            let law = if v.side_root { &self.side } else { &self.inner };
            self.children(law, &v, threshold, rng, &mut kept);
            for &(reach, below) in &kept {
                let id = builder.add_child(v.node, false);
                added += 1;
                stack.push(Pending {
                    node: id,
                    height: v.height + 1,
                    reach,
                    below,
                    side_root: false,
                });
            }
        }
        added
    }

    /// Draws the children of `v` and returns the `(reach, below)` events of
    /// those that reach `threshold`.
    fn children<R: Rng + ?Sized>(
        &self,
        law: &DiscreteLaw,
        v: &Pending,
        threshold: usize,
        rng: &mut R,
        out: &mut Vec<(usize, usize)>,
    ) {
        out.clear();
        let h = v.height;
        let required = v.reach > h;
        let (a, b) = (v.reach.min(threshold), v.reach.max(threshold));
        // classes: 0 misses a, 1 reaches a but not b, 2 reaches b; all avoid `below`
        let t = |lvl: usize| self.theta(lvl as isize - h as isize - 1);
        let tu = t(v.below);
        let c = [
            (1.0 - t(a)).max(0.0),
            (t(a) - t(b.min(v.below))).max(0.0),
            (t(b) - tu).max(0.0),
        ];
        let total = 1.0 - tu;
        // satisfying classes for the requirement on `v`
        let sat_lo = if !required {
            3
        } else if v.reach == b {
            2
        } else {
            1
        };
        let miss: f64 = c[..sat_lo].iter().sum();
        let k = sample_weighted(law, rng, |k| {
            let k = k as i32;
            if required {
                total.powi(k) - miss.powi(k)
            } else {
                total.powi(k)
            }
        });
        let p_sat = if total > 0.0 { (total - miss) / total } else { 0.0 };
        let mut satisfied = !required;
        for j in 0..k {
            let remaining = (k - j) as i32;
            let q = if satisfied {
                p_sat
            } else {
                p_sat / (1.0 - (1.0 - p_sat).powi(remaining))
            };
            let sat = rng.random::<f64>() < q;
            satisfied |= sat;
            let range = if sat { sat_lo..3 } else { 0..sat_lo };
            let mass: f64 = c[range.clone()].iter().sum();
            let mut u = rng.random::<f64>() * mass;
            let mut class = range.clone().rev().find(|&i| c[i] > 0.0).unwrap_or(range.end - 1);
            for i in range {
                if u < c[i] {
                    class = i;
                    break;
                }
                u -= c[i];
            }
            let reaches = match class {
                0 => a.min(h + 1),
                1 => a,
                _ => b,
            };
            if class > 0 && reaches >= threshold {
                out.push(if class == 1 { (a, b.min(v.below)) } else { (b, v.below) });
            }
        }
    }
}

fn sample_weighted<R: Rng + ?Sized>(law: &DiscreteLaw, rng: &mut R, tilt: impl Fn(usize) -> f64) -> usize {
    let weights: Vec<f64> = law
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, &p)| if p > 0.0 { p * tilt(k).max(0.0) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
