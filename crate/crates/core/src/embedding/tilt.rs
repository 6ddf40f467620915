use rand::Rng;

use super::{EmbeddingError, StepDistribution};

/// Step law reweighted by `exp(β·y)`, where `β·y = βᵀ Q⁻¹ y`.
#[derive(Debug, Clone)]
pub struct TiltedStep {
    base: StepDistribution,
    beta: Vec<f64>,
    log_z: f64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: Vec<f64>,
}

impl TiltedStep {
    pub fn new(base: &StepDistribution, beta: &[f64]) -> Result<Self, EmbeddingError> {
        let d = base.dim();
        if beta.len() != d {
            return Err(EmbeddingError::DimensionMismatch(vec![], beta.len(), d));
        }
        let exponents: Vec<f64> = base.atoms().map(|(y, _)| base.q_inner(beta, y)).collect();
        // log-sum-exp for stability at large β
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = base
            .atoms()
            .zip(&exponents)
            .map(|((_, p), e)| p * (e - shift).exp())
            .collect();
        let (log_z, pmf) = if beta.iter().all(|&b| b == 0.0) {
            (0.0, base.atoms().map(|(_, p)| p).collect::<Vec<f64>>())
        } else {
            let total: f64 = weights.iter().sum();
            (shift + total.ln(), weights.iter().map(|w| w / total).collect())
        };
        let mut mean = vec![0.0; d];
        for ((y, _), p) in base.atoms().zip(&pmf) {
            for i in 0..d {
                mean[i] += p * y[i] as f64;
            }
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(Self {
            base: base.clone(),
            beta: beta.to_vec(),
            log_z,
            pmf,
            cdf,
            mean,
        })
    }

    /// `log Z_β` without building the tilted law.
    pub fn log_partition_of(base: &StepDistribution, beta: &[f64]) -> f64 {
        base.atoms()
            .map(|(y, p)| p * base.q_inner(beta, y).exp())
            .sum::<f64>()
            .ln()
    }

    /// Finds `β` with `m_β = v` by damped Newton iteration. `v` must lie in
    /// the interior of the convex hull of the support.
    pub fn solve(base: &StepDistribution, v: &[f64]) -> Result<Self, EmbeddingError> {
        let d = base.dim();
        let q = base.covariance();
        let mut beta = vec![0.0; d];
        let mut current = Self::new(base, &beta)?;
        for _ in 0..200 {
            let resid: Vec<f64> = (0..d).map(|i| current.mean[i] - v[i]).collect();
            let err = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
            if err < 1e-13 {
                return Ok(current);
            }
            // dm/dβ = Σ_β Q⁻¹, so Δβ = Q Σ_β⁻¹ (v - m)
            let sigma = nalgebra::DMatrix::from_row_slice(d, d, &current.covariance());
            let rhs = nalgebra::DVector::from_iterator(d, resid.iter().map(|r| -r));
            let Some(dir) = sigma.lu().solve(&rhs) else {
                return Err(EmbeddingError::TiltNotConverged);
            };
            let step: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| q[i * d + j] * dir[j]).sum())
                .collect();
            let mut scale = 1.0;
            loop {
                let trial: Vec<f64> = (0..d).map(|i| beta[i] + scale * step[i]).collect();
                let next = Self::new(base, &trial)?;
                let next_err = (0..d)
                    .map(|i| (next.mean[i] - v[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if next_err < err || scale < 1e-6 {
                    beta = trial;
                    current = next;
                    break;
                }
                scale *= 0.5;
            }
        }
        Err(EmbeddingError::TiltNotConverged)
    }

    pub fn base(&self) -> &StepDistribution {
        &self.base
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Mean vector `m_β`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance `Σ_β` of the tilted step.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.base.dim();
        let mut s = vec![0.0; d * d];
        for ((y, _), p) in self.base.atoms().zip(&self.pmf) {
            for i in 0..d {
                for j in 0..d {
                    s[i * d + j] += p * (y[i] as f64 - self.mean[i]) * (y[j] as f64 - self.mean[j]);
                }
            }
        }
        s
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.pmf.len() - 1)
    }
}
