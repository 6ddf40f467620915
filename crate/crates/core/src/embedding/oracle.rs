//! Exact walk probabilities on small boxes, used to check the bridge sampler
//! and the conditional second-moment bounds.

use super::{EmbeddingError, StepDistribution};

const MAX_ORACLE_DIM: usize = 2;
const MAX_ORACLE_STEPS: usize = 24;

/// `P(S(k) = z)` for `k = 0..=n` on the box that the walk can reach.
#[derive(Debug, Clone)]
pub struct TransitionGrid {
    dim: usize,
    n: usize,
    radius: Vec<i32>,
    strides: Vec<usize>,
    probs: Vec<Vec<f64>>,
}

impl TransitionGrid {
    pub fn steps(&self) -> usize {
        self.n
    }

    fn cell(&self, z: &[i32]) -> Option<usize> {
        let mut idx = 0;
        for i in 0..self.dim {
            if z[i].abs() > self.radius[i] {
                return None;
            }
            idx += (z[i] + self.radius[i]) as usize * self.strides[i];
        }
        Some(idx)
    }

    fn point(&self, mut idx: usize) -> Vec<i32> {
        let mut z = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            z[i] = (idx / self.strides[i]) as i32 - self.radius[i];
            idx %= self.strides[i];
        }
        z
    }

    pub fn prob(&self, k: usize, z: &[i32]) -> f64 {
        self.cell(z).map_or(0.0, |c| self.probs[k][c])
    }

    /// Points with positive probability after `k` steps.
    pub fn support(&self, k: usize) -> impl Iterator<Item = (Vec<i32>, f64)> + '_ {
        self.probs[k]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(c, &p)| (self.point(c), p))
    }
}

/// Forward transition probabilities for up to `n` steps (`d <= 2`, `n <= 24`).
pub fn transition_probabilities(step: &StepDistribution, n: usize) -> Result<TransitionGrid, EmbeddingError> {
    let d = step.dim();
    if d > MAX_ORACLE_DIM || n > MAX_ORACLE_STEPS {
        return Err(EmbeddingError::TooLarge(format!(
            "d = {d}, n = {n}; the exact oracle handles d <= {MAX_ORACLE_DIM}, n <= {MAX_ORACLE_STEPS}"
        )));
    }
    let mut radius = vec![0i32; d];
    for (y, _) in step.atoms() {
        for i in 0..d {
            radius[i] = radius[i].max(y[i].abs() * n as i32);
        }
    }
    let mut strides = vec![1usize; d];
    for i in 1..d {
        strides[i] = strides[i - 1] * (2 * radius[i - 1] as usize + 1);
    }
    let cells = strides[d - 1] * (2 * radius[d - 1] as usize + 1);
    let mut grid = TransitionGrid {
        dim: d,
        n,
        radius,
        strides,
        probs: Vec::with_capacity(n + 1),
    };
    let mut start = vec![0.0; cells];
    start[grid.cell(&vec![0; d]).expect("origin in box")] = 1.0;
    grid.probs.push(start);
    for k in 1..=n {
        let mut next = vec![0.0; cells];
        for (c, &p) in grid.probs[k - 1].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let z = grid.point(c);
            for (y, q) in step.atoms() {
                let w: Vec<i32> = z.iter().zip(y).map(|(a, b)| a + b).collect();
                if let Some(t) = grid.cell(&w) {
                    next[t] += p * q;
                }
            }
        }
        grid.probs.push(next);
    }
    Ok(grid)
}

/// Law of `S(k)` given `S(n) = x`, as `(z, probability)` pairs.
pub fn conditional_marginal(
    step: &StepDistribution,
    n: usize,
    k: usize,
    x: &[i32],
) -> Result<Vec<(Vec<i32>, f64)>, EmbeddingError> {
    assert!(k <= n, "k must not exceed n");
    if !step.parity_compatible(n, x) {
        return Err(EmbeddingError::ParityMismatch { n });
    }
    let grid = transition_probabilities(step, n)?;
    let total = grid.prob(n, x);
    if total == 0.0 {
        return Err(EmbeddingError::Unreachable { n });
    }
    let mut out = Vec::new();
    for (z, p) in grid.support(k) {
        let rest: Vec<i32> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
        let q = grid.prob(n - k, &rest);
        if q > 0.0 {
            out.push((z, p * q / total));
        }
    }
    Ok(out)
}

/// `E[‖S(k)‖² | S(n) = x]` by exact forward-backward products.
pub fn conditional_moment_oracle(
    step: &StepDistribution,
    n: usize,
    k: usize,
    x: &[i32],
) -> Result<f64, EmbeddingError> {
    Ok(conditional_marginal(step, n, k, x)?
        .iter()
        .map(|(z, p)| p * step.norm_sq(z))
        .sum())
}
