use super::OffspringDistribution;

/// `θ(n) = P(N_n > 0)` for `0 <= n <= n_max`.
///
/// Iterates `θ ← 1 - f(1 - θ)` from `θ(0) = 1`, evaluating
/// `1 - (1-θ)^k` as `-expm1(k · ln(1-θ))` so small survival probabilities keep
/// full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    theta: Vec<f64>,
    sigma2: f64,
}

impl SurvivalTable {
    pub fn new(p: &OffspringDistribution, n_max: usize) -> Self {
        let probs = p.law().probabilities();
        let mut theta: Vec<f64> = Vec::with_capacity(n_max + 1);
        theta.push(1.0);
        for n in 0..n_max {
            let t = theta[n];
            let next = if t >= 1.0 {
                1.0 - probs[0]
            } else {
                let log_extinct = (-t).ln_1p();
                probs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &pk)| pk * -(k as f64 * log_extinct).exp_m1())
                    .sum::<f64>()
            };
            // guard against drift outside [0, 1] from cancellation
            theta.push(next.clamp(0.0, 1.0));
        }
        Self {
            theta,
            sigma2: p.sigma2(),
        }
    }

    /// `θ(n)`; panics if `n` is beyond the table.
    pub fn theta(&self, n: usize) -> f64 {
        self.theta[n]
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.theta.get(n).copied()
    }

    pub fn n_max(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    /// Kolmogorov ratio `θ(n) σ² n / 2`, which tends to 1.
    pub fn kolmogorov_ratio(&self, n: usize) -> f64 {
        self.theta(n) * self.sigma2 * n as f64 / 2.0
    }
}
