use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::FitReport;

pub const RECORD_HEADER: &str = "d,n,replica,seed,resistance,tree_size,sites,solver_iters,residual,status";
pub const SUMMARY_HEADER: &str = "d,n,mean,stderr,replicas_ok";

/// Largest tolerated share of failed replicas.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NotConverged,
    SolverError,
    AttemptsExhausted,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::NotConverged => "not-converged",
            Self::SolverError => "solver-error",
            Self::AttemptsExhausted => "attempts-exhausted",
        }
    }
}

/// One replica. `value` is the resistance, or `None` for volume runs and
/// failed replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub d: usize,
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub value: Option<f64>,
    pub tree_size: usize,
    pub sites: usize,
    pub solver_iters: usize,
    pub residual: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub d: usize,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub replicas_ok: usize,
}

/// Violations of the per-sample checks, over `traces` checked traces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantTally {
    pub traces: u64,
    /// `R > n`.
    pub bound: u64,
    /// Shorted resistance decreasing in the generation.
    pub monotonicity: u64,
    /// Trace multiplicities not summing to the tree's edge count.
    pub multiplicity: u64,
}

impl InvariantTally {
    pub fn merge(&mut self, other: &Self) {
        self.traces += other.traces;
        self.bound += other.bound;
        self.monotonicity += other.monotonicity;
        self.multiplicity += other.multiplicity;
    }

    pub fn violations(&self) -> u64 {
        self.bound + self.monotonicity + self.multiplicity
    }
}

/// `slope(d_low) - slope(d_high)` with `sqrt(se_low² + se_high²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionComparison {
    pub d_low: usize,
    pub d_high: usize,
    pub slope_low: f64,
    pub slope_high: f64,
    pub difference: f64,
    pub pooled_stderr: f64,
}

impl DimensionComparison {
    /// Whether the low-dimension slope is below by more than `z` pooled errors.
    pub fn separated(&self, z: f64) -> bool {
        self.slope_high - self.slope_low > z * self.pooled_stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub summaries: Vec<Summary>,
    pub fits: Vec<FitReport>,
    pub comparison: Option<DimensionComparison>,
    pub invariants: InvariantTally,
    pub failures: usize,
    pub failure_rate: f64,
    pub valid: bool,
    pub wall_clock_secs: f64,
    pub notes: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn records_csv(&self) -> String {
        let mut out = format!("{RECORD_HEADER}\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.d,
                r.n,
                r.replica,
                r.seed,
                opt(r.value),
                r.tree_size,
                r.sites,
                r.solver_iters,
                r.residual,
                r.status.label()
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for s in &self.summaries {
            let _ = writeln!(out, "{},{},{},{},{}", s.d, s.n, s.mean, s.stderr, s.replicas_ok);
        }
        out
    }

    pub fn summary(&self, d: usize, n: usize) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.d == d && s.n == n)
    }

    pub fn fit(&self, d: usize) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.d == d)
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Per-`(d, n)` means over successful replicas, in record order.
pub fn summarize(records: &[Record]) -> Vec<Summary> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.d, r.n)) {
            keys.push((r.d, r.n));
        }
    }
    keys.into_iter()
        .map(|(d, n)| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.d == d && r.n == n && r.status == Status::Ok)
                .map(|r| r.value.unwrap_or(r.tree_size as f64))
                .collect();
            let (mean, stderr) = mean_stderr(&vals);
            Summary {
                d,
                n,
                mean,
                stderr,
                replicas_ok: vals.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, value: Option<f64>, status: Status) -> Record {
        Record {
            d: 5,
            n,
            replica: 0,
            seed: 9,
            value,
            tree_size: 4,
            sites: 3,
            solver_iters: 2,
            residual: 1e-10,
            status,
        }
    }

    #[test]
    fn summaries_skip_failures() {
        let recs = vec![
            rec(2, Some(1.0), Status::Ok),
            rec(2, Some(3.0), Status::Ok),
            rec(2, None, Status::NotConverged),
            rec(4, None, Status::Ok),
        ];
        let s = summarize(&recs);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].mean, s[0].replicas_ok), (2.0, 2));
        assert!((s[0].stderr - 1.0).abs() < 1e-12);
        // volume records fall back to the tree size
        assert_eq!(s[1].mean, 4.0);
        assert!(s[1].stderr.is_nan());
    }

    #[test]
    fn csv_layout() {
        let report = ExperimentReport {
            kind: "resistance".into(),
            config: ExperimentConfig::default(),
            records: vec![rec(2, Some(0.5), Status::Ok), rec(2, None, Status::AttemptsExhausted)],
            summaries: vec![],
            fits: vec![],
            comparison: None,
            invariants: InvariantTally::default(),
            failures: 1,
            failure_rate: 0.5,
            valid: false,
            wall_clock_secs: 0.0,
            notes: vec![],
        };
        let csv = report.records_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RECORD_HEADER);
        assert_eq!(lines[1], "5,2,0,9,0.5,4,3,2,0.0000000001,ok");
        assert_eq!(lines[2], "5,2,0,9,,4,3,2,0.0000000001,attempts-exhausted");
        assert_eq!(report.summary_csv(), format!("{SUMMARY_HEADER}\n"));
    }
}
