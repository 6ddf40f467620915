use rand::Rng;

use super::{EmbeddingError, StepDistribution};

/// A walk path of `n` steps pinned at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeSample {
    dim: usize,
    /// Flat `(n + 1) × d` positions, `S(0) = o`.
    pub path: Vec<i32>,
    /// Number of proposals drawn, including the accepted one.
    pub attempts: u64,
}

impl BridgeSample {
    pub fn steps(&self) -> usize {
        self.path.len() / self.dim - 1
    }

    pub fn position(&self, k: usize) -> &[i32] {
        &self.path[k * self.dim..(k + 1) * self.dim]
    }
}

/// Local-CLT approximation of `P(S(n) = x)`, including the period factor.
pub fn local_clt_estimate(step: &StepDistribution, n: usize, x: &[i32]) -> f64 {
    let d = step.dim() as f64;
    let n = n.max(1) as f64;
    let quad = d * step.norm_sq(x);
    step.period() as f64 * (2.0 * std::f64::consts::PI * n).powf(-d / 2.0)
        / step.det_covariance().sqrt()
        * (-quad / (2.0 * n)).exp()
}

/// Samples `S(0..=n)` conditioned on `S(n) = x` by rejection. Proposals are
/// abandoned as soon as `x` is out of reach, which leaves the accepted law
/// unchanged.
pub fn bridge_sample<R: Rng + ?Sized>(
    step: &StepDistribution,
    n: usize,
    x: &[i32],
    rng: &mut R,
    max_attempts: u64,
) -> Result<BridgeSample, EmbeddingError> {
    let d = step.dim();
    if x.len() != d {
        return Err(EmbeddingError::DimensionMismatch(x.to_vec(), x.len(), d));
    }
    if !step.parity_compatible(n, x) {
        return Err(EmbeddingError::ParityMismatch { n });
    }
    let mut reach = vec![0i64; d];
    for (y, _) in step.atoms() {
        for i in 0..d {
            reach[i] = reach[i].max(y[i].abs() as i64);
        }
    }
    if (0..d).any(|i| (x[i] as i64).abs() > reach[i] * n as i64) {
        return Err(EmbeddingError::Unreachable { n });
    }
    let mut path = vec![0i32; (n + 1) * d];
    let mut attempts = 0u64;
    while attempts < max_attempts {
        attempts += 1;
        let mut ok = true;
        for k in 1..=n {
            let y = step.step(step.sample_index(rng));
            let left = (n - k) as i64;
            for i in 0..d {
                let s = path[(k - 1) * d + i] + y[i];
                path[k * d + i] = s;
                if (x[i] as i64 - s as i64).abs() > reach[i] * left {
                    ok = false;
                }
            }
            if !ok {
                break;
            }
        }
        if ok && &path[n * d..] == x {
            return Ok(BridgeSample { dim: d, path, attempts });
        }
    }
    Err(EmbeddingError::AttemptsExhausted {
        attempts,
        estimated_rate: local_clt_estimate(step, n, x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_step_bridge_frequencies() {
        let s = StepDistribution::srw(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 40_000;
        let mut up_first = 0;
        for _ in 0..trials {
            let b = bridge_sample(&s, 2, &[0], &mut rng, 1000).unwrap();
            assert_eq!(b.position(2), &[0]);
            assert_eq!(b.steps(), 2);
            if b.position(1) == [1] {
                up_first += 1;
            }
        }
        let f = up_first as f64 / trials as f64;
        // 4 standard errors of a fair coin
        assert!((f - 0.5).abs() < 4.0 * 0.5 / (trials as f64).sqrt(), "{f}");
    }

    #[test]
    fn parity_and_reach_errors() {
        let s = StepDistribution::srw(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            bridge_sample(&s, 4, &[1, 0], &mut rng, 10),
            Err(EmbeddingError::ParityMismatch { n: 4 })
        );
        assert_eq!(
            bridge_sample(&s, 2, &[4, 0], &mut rng, 10),
            Err(EmbeddingError::Unreachable { n: 2 })
        );
        let lazy = StepDistribution::lazy_srw(1).unwrap();
        match bridge_sample(&lazy, 40, &[39], &mut rng, 5) {
            Err(EmbeddingError::AttemptsExhausted { attempts, estimated_rate }) => {
                assert_eq!(attempts, 5);
                assert!(estimated_rate < 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clt_estimate_is_close_for_moderate_n() {
        // exact P(S(20) = 0) for the d = 1 walk is C(20,10)/2^20
        let s = StepDistribution::srw(1).unwrap();
        let exact = 184_756.0 / 1_048_576.0;
        let est = local_clt_estimate(&s, 20, &[0]);
        assert!((est / exact - 1.0).abs() < 0.02);
    }
}
