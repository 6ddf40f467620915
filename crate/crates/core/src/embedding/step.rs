use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use super::lattice::{lattice_index, MAX_DIM};
use super::EmbeddingError;

const PROB_TOL: f64 = 1e-12;

/// Finite-support symmetric step law `p¹(o, ·)` on `Z^d`.
///
/// Carries the covariance `Q`, its inverse, `D = det(Q)^{1/(2d)}` and the walk
/// period. The norm is `‖x‖ = sqrt((1/d) xᵀ Q⁻¹ x)`, normalised so that
/// `E‖S(n)‖² = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    dim: usize,
    steps: Vec<i32>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    q: Vec<f64>,
    q_inv: Vec<f64>,
    /// `Q⁻¹ / d`, the quadratic form of the squared norm.
    metric: Vec<f64>,
    det_q: f64,
    period: u8,
    parity: Option<Vec<u8>>,
}

impl StepDistribution {
    pub fn new(support: &[(Vec<i32>, f64)]) -> Result<Self, EmbeddingError> {
        let dim = support.first().ok_or(EmbeddingError::EmptySupport)?.0.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(EmbeddingError::UnsupportedDimension(dim));
        }
        let mut seen = std::collections::HashSet::new();
        for (y, p) in support {
            if y.len() != dim {
                return Err(EmbeddingError::DimensionMismatch(y.clone(), y.len(), dim));
            }
            if !(p.is_finite() && *p >= 0.0) {
                return Err(EmbeddingError::NegativeProbability(y.clone()));
            }
            if !seen.insert(y.clone()) {
                return Err(EmbeddingError::DuplicateStep(y.clone()));
            }
        }
        let total: f64 = support.iter().map(|s| s.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(EmbeddingError::NotNormalized(total));
        }
        let support: Vec<(Vec<i32>, f64)> =
            support.iter().filter(|s| s.1 > 0.0).cloned().collect();
        for (y, p) in &support {
            let neg: Vec<i32> = y.iter().map(|c| -c).collect();
            let q = support.iter().find(|s| s.0 == neg).map_or(0.0, |s| s.1);
            if (q - p).abs() > PROB_TOL {
                return Err(EmbeddingError::NotSymmetric(y.clone()));
            }
        }
        let vectors: Vec<Vec<i32>> = support.iter().map(|s| s.0.clone()).collect();
        if lattice_index(&vectors, dim) != Some(1) {
            return Err(EmbeddingError::DegenerateSupport);
        }

        let mut q = vec![0.0; dim * dim];
        for (y, p) in &support {
            for i in 0..dim {
                for j in 0..dim {
                    q[i * dim + j] += (y[i] as f64) * (y[j] as f64) * p;
                }
            }
        }
        let qm = DMatrix::from_row_slice(dim, dim, &q);
        let det_q = qm.determinant();
        let inv = qm.try_inverse().ok_or(EmbeddingError::DegenerateSupport)?;
        let mut q_inv = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                // symmetrise away rounding asymmetry
                q_inv[i * dim + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        let metric = q_inv.iter().map(|v| v / dim as f64).collect();

        // period 2 iff some character c ∈ (Z/2)^d has c·y odd on every step
        let parity = (0u32..(1 << dim))
            .map(|mask| (0..dim).map(|i| ((mask >> i) & 1) as u8).collect::<Vec<u8>>())
            .find(|c| {
                vectors.iter().all(|y| {
                    y.iter().zip(c).map(|(&yi, &ci)| yi.rem_euclid(2) as u8 & ci).sum::<u8>() % 2 == 1
                })
            });
        let period = if parity.is_some() { 2 } else { 1 };

        let mut acc = 0.0;
        let mut cdf: Vec<f64> = support
            .iter()
            .map(|s| {
                acc += s.1;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(Self {
            dim,
            steps: vectors.concat(),
            probs: support.iter().map(|s| s.1).collect(),
            cdf,
            q,
            q_inv,
            metric,
            det_q,
            period,
            parity,
        })
    }

    /// Nearest-neighbour simple random walk.
    pub fn srw(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(EmbeddingError::UnsupportedDimension(dim));
        }
        let p = 1.0 / (2 * dim) as f64;
        let support: Vec<(Vec<i32>, f64)> = (0..dim)
            .flat_map(|i| {
                [1, -1].map(|s| {
                    let mut y = vec![0; dim];
                    y[i] = s;
                    (y, p)
                })
            })
            .collect();
        Self::new(&support)
    }

    /// Simple random walk that holds with probability 1/2.
    pub fn lazy_srw(dim: usize) -> Result<Self, EmbeddingError> {
        let srw = Self::srw(dim)?;
        let mut support: Vec<(Vec<i32>, f64)> = vec![(vec![0; dim], 0.5)];
        support.extend(srw.atoms().map(|(y, p)| (y.to_vec(), p / 2.0)));
        Self::new(&support)
    }

    /// Presets `srw:d` and `lazy-srw:d`.
    pub fn from_preset(name: &str) -> Result<Self, EmbeddingError> {
        let name = name.trim();
        let unknown = || EmbeddingError::UnknownPreset(name.to_string());
        let (kind, d) = name.split_once(':').ok_or_else(unknown)?;
        let d: usize = d.parse().map_err(|_| unknown())?;
        match kind {
            "srw" => Self::srw(d),
            "lazy-srw" => Self::lazy_srw(d),
            _ => Err(unknown()),
        }
    }

    /// Text format: one step per line, `y_1 … y_d p`, `#` comments.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut support = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| EmbeddingError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let (p, coords) = fields.split_last().ok_or_else(|| err("empty line"))?;
            if coords.is_empty() {
                return Err(err("expected coordinates followed by a probability"));
            }
            let y = coords
                .iter()
                .map(|s| s.parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err("coordinates must be integers"))?;
            let p: f64 = p.parse().map_err(|_| err("probability must be a number"))?;
            support.push((y, p));
        }
        Self::new(&support)
    }

    /// Resolves a preset name or reads a step-law file.
    pub fn resolve(spec: &str) -> Result<Self, EmbeddingError> {
        match Self::from_preset(spec) {
            Err(EmbeddingError::UnknownPreset(_)) if Path::new(spec).is_file() => {
                let text = std::fs::read_to_string(spec).map_err(|e| EmbeddingError::Parse {
                    line: 0,
                    msg: e.to_string(),
                })?;
                Self::parse(&text)
            }
            other => other,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[i32], f64)> + '_ {
        self.steps.chunks_exact(self.dim).zip(self.probs.iter().copied())
    }

    #[inline]
    pub fn step(&self, i: usize) -> &[i32] {
        &self.steps[i * self.dim..(i + 1) * self.dim]
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of a random step.
    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.probs.len() - 1)
    }

    /// Row-major covariance matrix `Q`.
    pub fn covariance(&self) -> &[f64] {
        &self.q
    }

    pub fn covariance_inverse(&self) -> &[f64] {
        &self.q_inv
    }

    pub fn det_covariance(&self) -> f64 {
        self.det_q
    }

    /// `D = det(Q)^{1/(2d)}`.
    pub fn scale(&self) -> f64 {
        self.det_q.powf(1.0 / (2 * self.dim) as f64)
    }

    pub fn period(&self) -> u8 {
        self.period
    }

    /// For period-2 walks, the parity `c·x mod 2` of a point.
    pub fn parity(&self, x: &[i32]) -> Option<u8> {
        self.parity.as_ref().map(|c| {
            x.iter().zip(c).map(|(&xi, &ci)| xi.rem_euclid(2) as u8 & ci).sum::<u8>() % 2
        })
    }

    /// Whether `x` can be reached in exactly `n` steps as far as parity goes.
    pub fn parity_compatible(&self, n: usize, x: &[i32]) -> bool {
        self.parity(x).is_none_or(|par| par as usize == n % 2)
    }

    #[inline]
    pub fn norm_sq(&self, x: &[i32]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let xi = x[i] as f64;
            if xi == 0.0 {
                continue;
            }
            let row = &self.metric[i * d..(i + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * x[j] as f64;
            }
            acc += xi * s;
        }
        acc
    }

    pub fn norm_sq_real(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| x[i] * (0..d).map(|j| self.metric[i * d + j] * x[j]).sum::<f64>())
            .sum()
    }

    pub fn norm(&self, x: &[i32]) -> f64 {
        self.norm_sq(x).max(0.0).sqrt()
    }

    /// `‖x - y‖`.
    pub fn distance_sq(&self, x: &[i32], y: &[i32]) -> f64 {
        let diff: smallvec_like::Diff = smallvec_like::Diff::new(x, y);
        self.norm_sq(diff.as_slice())
    }

    /// The `Q⁻¹` inner product `βᵀ Q⁻¹ y`.
    pub fn q_inner(&self, beta: &[f64], y: &[i32]) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| beta[i] * (0..d).map(|j| self.q_inv[i * d + j] * y[j] as f64).sum::<f64>())
            .sum()
    }
}

mod smallvec_like {
    use super::MAX_DIM;

    /// Stack buffer for a coordinate difference.
    pub(super) struct Diff {
        buf: [i32; MAX_DIM],
        len: usize,
    }

    impl Diff {
        pub(super) fn new(x: &[i32], y: &[i32]) -> Self {
            let mut buf = [0; MAX_DIM];
            for (i, (a, b)) in x.iter().zip(y).enumerate() {
                buf[i] = a - b;
            }
            Self { buf, len: x.len() }
        }

        pub(super) fn as_slice(&self) -> &[i32] {
            &self.buf[..self.len]
        }
    }
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (y, p) in self.atoms() {
            for c in y {
                write!(f, "{c} ")?;
            }
            writeln!(f, "{p:.17}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn srw_covariance_and_scale() {
        let s = StepDistribution::srw(5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 0.2 } else { 0.0 };
                assert!(close(s.covariance()[i * 5 + j], expected));
            }
        }
        assert!(close(s.scale(), 5f64.powf(-0.5)));
        assert_eq!(s.period(), 2);
        // the norm is Euclidean for the simple random walk
        assert!(close(s.norm(&[3, 4, 0, 0, 0]), 5.0));
        assert_eq!(s.norm(&[0; 5]), 0.0);
    }

    #[test]
    fn lazy_walk_has_period_one() {
        let s = StepDistribution::lazy_srw(5).unwrap();
        assert_eq!(s.period(), 1);
        assert!(close(s.covariance()[0], 0.1));
        assert!(close(s.covariance()[1], 0.0));
        let one = StepDistribution::new(&[(vec![1], 0.5), (vec![-1], 0.5)]).unwrap();
        assert_eq!(one.period(), 2);
        assert!(!one.parity_compatible(2, &[1]));
        assert!(one.parity_compatible(3, &[1]));
    }

    #[test]
    fn second_moment_of_walk_is_n() {
        use rand::SeedableRng;
        let s = StepDistribution::parse("1 0 0.2\n-1 0 0.2\n1 1 0.15\n-1 -1 0.15\n0 0 0.3\n").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (walks, n) = (100_000, 100);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..walks {
            let mut x = [0i32; 2];
            for _ in 0..n {
                let y = s.step(s.sample_index(&mut rng));
                x[0] += y[0];
                x[1] += y[1];
            }
            let v = s.norm_sq(&x);
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / walks as f64;
        let se = ((sum2 / walks as f64 - mean * mean) / walks as f64).sqrt();
        assert!((mean - n as f64).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(matches!(
            StepDistribution::new(&[(vec![1], 0.6), (vec![-1], 0.4)]),
            Err(EmbeddingError::NotSymmetric(_))
        ));
        assert_eq!(
            StepDistribution::new(&[(vec![2], 0.5), (vec![-2], 0.5)]),
            Err(EmbeddingError::DegenerateSupport)
        );
        assert_eq!(
            StepDistribution::new(&[(vec![1, 1], 0.5), (vec![-1, -1], 0.5)]),
            Err(EmbeddingError::DegenerateSupport)
        );
        assert!(matches!(
            StepDistribution::new(&[(vec![1], 0.5), (vec![-1], 0.4)]),
            Err(EmbeddingError::NotNormalized(_))
        ));
        assert!(matches!(
            StepDistribution::from_preset("srw:9"),
            Err(EmbeddingError::UnsupportedDimension(9))
        ));
    }

    #[test]
    fn non_diagonal_law_and_parse_round_trip() {
        // steps ±(1,0), ±(1,1): generates Z², correlated coordinates
        let text = "1 0 0.25\n-1 0 0.25\n1 1 0.25\n-1 -1 0.25\n";
        let s = StepDistribution::parse(text).unwrap();
        assert_eq!(s.dim(), 2);
        // Q = [[1/2+1/2, 1/2], [1/2, 1/2]]
        assert!(close(s.covariance()[0], 1.0));
        assert!(close(s.covariance()[1], 0.5));
        assert!(close(s.covariance()[3], 0.5));
        assert!(close(s.det_covariance(), 0.25));
        // E‖X‖² = (1/d) tr(Q⁻¹ Q) = 1
        let second: f64 = s.atoms().map(|(y, p)| p * s.norm_sq(y)).sum();
        assert!(close(second, 1.0));
        let back = StepDistribution::parse(&s.to_string()).unwrap();
        assert_eq!(back.covariance(), s.covariance());
    }
}
