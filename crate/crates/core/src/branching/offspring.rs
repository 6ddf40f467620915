use std::fmt;
use std::path::Path;

use rand::Rng;

use super::BranchingError;

const SUM_TOL: f64 = 1e-12;

/// A probability law on `{0, 1, ..., max_k}` stored densely, with a cumulative
/// table for inverse-CDF sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteLaw {
    /// Builds a law from dense weights, normalising them. Trailing zeros are trimmed.
    pub(crate) fn from_weights(mut weights: Vec<f64>) -> Result<Self, BranchingError> {
        while weights.len() > 1 && weights.last() == Some(&0.0) {
            weights.pop();
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BranchingError::ImpossibleConditioning);
        }
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self::from_pmf_unchecked(pmf))
    }

    fn from_pmf_unchecked(pmf: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // the last atom with positive mass absorbs rounding
        if let Some(last) = pmf.iter().rposition(|&p| p > 0.0) {
            for c in &mut cdf[last..] {
                *c = f64::INFINITY;
            }
        }
        Self { pmf, cdf }
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_k(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `(k, p(k))` for every atom with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().copied().enumerate().filter(|&(_, p)| p > 0.0)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // supports are tiny, a linear scan beats binary search
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.pmf.len() - 1)
    }

    /// True when the law puts all of its mass on `k = 0`.
    pub fn is_sterile(&self) -> bool {
        self.pmf.len() == 1
    }
}

/// Slack applied when a truncated infinite law is made critical again.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityAdjustment {
    /// Mass beyond the truncation point that was removed before renormalising.
    pub discarded_mass: f64,
    /// Mass moved from `p(0)` to `p(1)` to restore mean 1.
    pub mean_shift: f64,
}

/// A critical progeny law with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    law: DiscreteLaw,
    sigma2: f64,
    third_moment: f64,
}

impl OffspringDistribution {
    /// Validates a sparse `(k, p(k))` list.
    pub fn new(entries: &[(usize, f64)]) -> Result<Self, BranchingError> {
        if entries.is_empty() {
            return Err(BranchingError::EmptySupport);
        }
        let max_k = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut pmf = vec![0.0; max_k + 1];
        let mut seen = vec![false; max_k + 1];
        for &(k, p) in entries {
            if seen[k] {
                return Err(BranchingError::DuplicateCount(k));
            }
            seen[k] = true;
            if p < 0.0 || !p.is_finite() {
                return Err(BranchingError::NegativeProbability { k, p });
            }
            pmf[k] = p;
        }
        Self::from_dense(pmf)
    }

    fn from_dense(pmf: Vec<f64>) -> Result<Self, BranchingError> {
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(BranchingError::NotNormalized(total));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (mean - 1.0).abs() > SUM_TOL {
            return Err(BranchingError::NotCritical(mean));
        }
        let sigma2: f64 = pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p)
            .sum();
        if sigma2 <= SUM_TOL {
            return Err(BranchingError::DegenerateVariance);
        }
        let third_moment = pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64).powi(3) * p)
            .sum();
        let mut pmf = pmf;
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        Ok(Self {
            law: DiscreteLaw::from_pmf_unchecked(pmf),
            sigma2,
            third_moment,
        })
    }

    /// `p(0) = p(2) = 1/2`.
    pub fn binary() -> Self {
        Self::new(&[(0, 0.5), (2, 0.5)]).expect("binary law is critical")
    }

    /// `p(k) = 2^{-(k+1)}` truncated at `max_k`, renormalised, then made critical
    /// again by shifting mass from `p(0)` to `p(1)` (which leaves `σ²` unchanged).
    pub fn truncated_geometric(
        max_k: usize,
    ) -> Result<(Self, CriticalityAdjustment), BranchingError> {
        let raw: Vec<f64> = (0..=max_k).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
        let kept: f64 = raw.iter().sum();
        let mut pmf: Vec<f64> = raw.iter().map(|p| p / kept).collect();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let shift = 1.0 - mean;
        if pmf.len() < 2 || shift > pmf[0] {
            return Err(BranchingError::DegenerateVariance);
        }
        pmf[0] -= shift;
        pmf[1] += shift;
        let dist = Self::from_dense(pmf)?;
        Ok((
            dist,
            CriticalityAdjustment {
                discarded_mass: 1.0 - kept,
                mean_shift: shift,
            },
        ))
    }

    /// Named presets: `binary`, `geometric:M`.
    pub fn from_preset(name: &str) -> Result<Self, BranchingError> {
        let name = name.trim();
        if name == "binary" {
            return Ok(Self::binary());
        }
        if let Some(m) = name.strip_prefix("geometric:") {
            let m: usize = m
                .parse()
                .map_err(|_| BranchingError::UnknownPreset(name.to_string()))?;
            return Ok(Self::truncated_geometric(m)?.0);
        }
        Err(BranchingError::UnknownPreset(name.to_string()))
    }

    /// Parses the plain-text format: one `k p` pair per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self, BranchingError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| BranchingError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split_whitespace();
            let k = parts
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| err("expected nonnegative integer k"))?;
            let p = parts
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| err("expected probability"))?;
            if parts.next().is_some() {
                return Err(err("trailing fields"));
            }
            entries.push((k, p));
        }
        Self::new(&entries)
    }

    /// Resolves a preset name or, failing that, reads a law file.
    pub fn resolve(spec: &str) -> Result<Self, BranchingError> {
        match Self::from_preset(spec) {
            Err(BranchingError::UnknownPreset(_)) if Path::new(spec).is_file() => {
                let text = std::fs::read_to_string(spec).map_err(|e| BranchingError::Parse {
                    line: 0,
                    msg: e.to_string(),
                })?;
                Self::parse(&text)
            }
            other => other,
        }
    }

    pub fn law(&self) -> &DiscreteLaw {
        &self.law
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.law.pmf(k)
    }

    pub fn max_k(&self) -> usize {
        self.law.max_k()
    }

    pub fn mean(&self) -> f64 {
        self.law.mean()
    }

    /// `σ² = Σ k(k-1) p(k)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn third_moment(&self) -> f64 {
        self.third_moment
    }

    /// Generating function `f(s) = Σ p(k) s^k`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.law
            .probabilities()
            .iter()
            .rev()
            .fold(0.0, |acc, &p| acc * s + p)
    }

    /// The size-biased law minus one, `p̃(k) = (k+1) p(k+1)`. Its mean is `σ²`.
    pub fn size_biased_minus_one(&self) -> DiscreteLaw {
        let pmf = self.law.probabilities();
        let weights: Vec<f64> = (0..pmf.len().saturating_sub(1).max(1))
            .map(|k| (k + 1) as f64 * pmf.get(k + 1).copied().unwrap_or(0.0))
            .collect();
        DiscreteLaw::from_weights(weights).expect("critical law has positive size-biased mass")
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.law.atoms() {
            writeln!(f, "{k} {p:.17}")?;
        }
        Ok(())
    }
}
