use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::branching::OffspringDistribution;
use crate::embedding::{StepDistribution, MAX_DIM};

/// Level of the conditioning in `T(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MPolicy {
    #[serde(rename = "2n")]
    TwoN,
    #[serde(rename = "4n")]
    FourN,
}

impl MPolicy {
    pub fn m(self, n: usize) -> usize {
        match self {
            Self::TwoN => 2 * n,
            Self::FourN => 4 * n,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::TwoN => "2n",
            Self::FourN => "4n",
        }
    }
}

impl FromStr for MPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "2n" => Ok(Self::TwoN),
            "4n" => Ok(Self::FourN),
            other => Err(format!("m policy must be 2n or 4n, got '{other}'")),
        }
    }
}

/// Flat `key = value` configuration shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Dimensions for cross-dimension comparisons.
    pub dims: Vec<usize>,
    pub offspring: String,
    /// Step preset or file. A bare `srw` or `lazy-srw` takes the dimension
    /// from `d`; `None` means the experiment's default.
    pub step: Option<String>,
    /// `n` grid; `δn` grid for intersection runs.
    pub n_values: Vec<usize>,
    pub m_policy: MPolicy,
    pub replicas: usize,
    pub seed: u64,
    pub tol: f64,
    pub output: Option<String>,
    pub delta: f64,
    pub k: usize,
    pub c0: f64,
    pub block: usize,
    /// Target endpoint for bridges, or the second root for intersections.
    pub x: Vec<i32>,
    pub max_attempts: u64,
    /// Trees per root in one intersection replica; all `grid²` cross pairs
    /// are counted.
    pub grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 5,
            dims: vec![5, 7],
            offspring: "binary".into(),
            step: None,
            n_values: vec![64, 128, 256, 512],
            m_policy: MPolicy::TwoN,
            replicas: 100,
            seed: 1,
            tol: 1e-8,
            output: None,
            delta: 0.1,
            k: 2,
            c0: 0.05,
            block: 0,
            x: Vec::new(),
            max_attempts: 10_000_000,
            grid: 1,
        }
    }
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("bad list entry '{s}'")))
        .collect()
}

fn join_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse '{v}'"))
        }
        match key.trim() {
            "d" => self.d = num(v)?,
            "dims" => self.dims = parse_list(v)?,
            "offspring" => self.offspring = v.to_string(),
            "step" => self.step = (!v.is_empty()).then(|| v.to_string()),
            "n" => self.n_values = parse_list(v)?,
            "m" => self.m_policy = v.parse()?,
            "replicas" => self.replicas = num(v)?,
            "seed" => self.seed = num(v)?,
            "tol" => self.tol = num(v)?,
            "out" => self.output = (!v.is_empty()).then(|| v.to_string()),
            "delta" => self.delta = num(v)?,
            "K" => self.k = num(v)?,
            "c0" => self.c0 = num(v)?,
            "block" => self.block = num(v)?,
            "x" => self.x = parse_list(v)?,
            "max_attempts" => self.max_attempts = num(v)?,
            "grid" => self.grid = num(v)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ExperimentError::Parse {
                line: idx + 1,
                msg: "expected key = value".into(),
            })?;
            cfg.set(k, v).map_err(|msg| ExperimentError::Parse { line: idx + 1, msg })?;
        }
        Ok(cfg)
    }

    /// Inverse of [`ExperimentConfig::parse`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("d", self.d.to_string());
        kv("dims", join_list(&self.dims));
        kv("offspring", self.offspring.clone());
        if let Some(s) = &self.step {
            kv("step", s.clone());
        }
        kv("n", join_list(&self.n_values));
        kv("m", self.m_policy.label().into());
        kv("replicas", self.replicas.to_string());
        kv("seed", self.seed.to_string());
        kv("tol", format!("{:?}", self.tol));
        if let Some(o) = &self.output {
            kv("out", o.clone());
        }
        kv("delta", format!("{:?}", self.delta));
        kv("K", self.k.to_string());
        kv("c0", format!("{:?}", self.c0));
        kv("block", self.block.to_string());
        kv("x", join_list(&self.x));
        kv("max_attempts", self.max_attempts.to_string());
        kv("grid", self.grid.to_string());
        out
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |field: &str, msg: String| {
            Err(ExperimentError::Validation {
                field: field.into(),
                msg,
            })
        };
        if self.d == 0 || self.d > MAX_DIM {
            return bad("d", format!("must be in 1..={MAX_DIM}, got {}", self.d));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d > MAX_DIM) {
            return bad("dims", format!("dimension {d} outside 1..={MAX_DIM}"));
        }
        if self.n_values.is_empty() {
            return bad("n", "at least one value required".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n", "values must be strictly increasing".into());
        }
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol", format!("must lie in (0, 1), got {}", self.tol));
        }
        if self.k < 2 {
            return bad("K", format!("must be at least 2, got {}", self.k));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / (self.k + 4) as f64) {
            return bad(
                "delta",
                format!("must satisfy 0 < delta < 1/(K+4) = {:.6}, got {}", 1.0 / (self.k + 4) as f64, self.delta),
            );
        }
        if self.k as f64 * self.delta > 0.5 {
            return bad("delta", format!("K * delta = {} exceeds 1/2", self.k as f64 * self.delta));
        }
        if !(self.c0 > 0.0) {
            return bad("c0", format!("must be positive, got {}", self.c0));
        }
        if !self.x.is_empty() && self.x.len() != self.d {
            return bad("x", format!("has {} coordinates, expected d = {}", self.x.len(), self.d));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts", "must be at least 1".into());
        }
        if self.grid == 0 {
            return bad("grid", "must be at least 1".into());
        }
        self.offspring_law()?;
        self.step_law(self.d, "srw")?;
        Ok(())
    }

    pub fn offspring_law(&self) -> Result<OffspringDistribution, ExperimentError> {
        OffspringDistribution::resolve(&self.offspring).map_err(|e| ExperimentError::Validation {
            field: "offspring".into(),
            msg: e.to_string(),
        })
    }

    /// Resolves the step law for dimension `d`, using `default_kind` when no
    /// step is configured.
    pub fn step_law(&self, d: usize, default_kind: &str) -> Result<StepDistribution, ExperimentError> {
        let name = self.step.as_deref().unwrap_or(default_kind);
        let resolved = if matches!(name, "srw" | "lazy-srw") {
            format!("{name}:{d}")
        } else {
            name.to_string()
        };
        let step = StepDistribution::resolve(&resolved).map_err(|e| ExperimentError::Validation {
            field: "step".into(),
            msg: e.to_string(),
        })?;
        if step.dim() != d {
            return Err(ExperimentError::Validation {
                field: "step".into(),
                msg: format!("step law has dimension {}, expected {d}", step.dim()),
            });
        }
        Ok(step)
    }

    /// `x`, or the origin when unset.
    pub fn target(&self) -> Vec<i32> {
        if self.x.is_empty() {
            vec![0; self.d]
        } else {
            self.x.clone()
        }
    }
}
