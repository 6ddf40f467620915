use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::FitReport;
use super::report::{
    summarize, DimensionComparison, ExperimentReport, InvariantTally, Record, Status, MAX_FAILURE_RATE,
};
use super::seeds::{derive_seed, replica_rng};
use super::ExperimentError;
use crate::branching::{IibpSampler, OffspringDistribution, SurvivalTable, TnmSampler, Tree};
use crate::embedding::{bridge_sample, local_clt_estimate, Embedding, EmbeddingError, StepDistribution, Trace};
use crate::resistance::{
    effective_resistance, shorted_resistance, ResistanceError, ResistanceResult, SolverOptions,
};

/// Slack allowed on `R ≤ n` and on monotonicity, relative to the solver tolerance.
const INVARIANT_SLACK: f64 = 1e-6;

fn require_positive_n(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if cfg.n_values[0] == 0 {
        return Err(ExperimentError::Validation {
            field: "n".into(),
            msg: "values must be at least 1".into(),
        });
    }
    Ok(())
}

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol,
        ..SolverOptions::default()
    }
}

fn failed_record(d: usize, n: usize, replica: usize, seed: u64, tree: &Tree, sites: usize, err: &ResistanceError) -> Record {
    let (status, iters, residual) = match *err {
        ResistanceError::NotConverged { iterations, residual } => (Status::NotConverged, iterations, residual),
        _ => (Status::SolverError, 0, f64::NAN),
    };
    Record {
        d,
        n,
        replica,
        seed,
        value: None,
        tree_size: tree.len(),
        sites,
        solver_iters: iters,
        residual,
        status,
    }
}

fn ok_record(d: usize, n: usize, replica: usize, seed: u64, tree: &Tree, sites: usize, r: &ResistanceResult) -> Record {
    Record {
        d,
        n,
        replica,
        seed,
        value: Some(r.value),
        tree_size: tree.len(),
        sites,
        solver_iters: r.iterations,
        residual: r.residual,
        status: Status::Ok,
    }
}

fn multiplicity_check(tree: &Tree, trace: &Trace, inv: &mut InvariantTally) {
    inv.traces += 1;
    if trace.total_multiplicity() != tree.len() as u64 - 1 {
        inv.multiplicity += 1;
    }
}

/// Resistance from the root to the shorted generation `n` of a truncated
/// incipient infinite branching process.
#[derive(Debug, Clone)]
pub struct ResistanceRun {
    d: usize,
    sampler: IibpSampler,
    step: StepDistribution,
    opts: SolverOptions,
}

impl ResistanceRun {
    pub fn new(cfg: &ExperimentConfig, d: usize) -> Result<Self, ExperimentError> {
        Ok(Self {
            d,
            sampler: IibpSampler::new(&cfg.offspring_law()?),
            step: cfg.step_law(d, "srw")?,
            opts: solver_options(cfg),
        })
    }

    /// Sample, embed and solve one replica, checking `R ≤ n`, multiplicity
    /// conservation and monotonicity of the shorted resistance over the
    /// generations `n/4, n/2, 3n/4, n`.
    pub fn replica(&self, n: usize, replica: usize, seed: u64) -> (Record, InvariantTally) {
        let d = self.d;
        let mut rng = replica_rng(seed);
        let tree = self.sampler.sample(n, &mut rng).expect("n is at least 1");
        let emb = Embedding::random_walk(&tree, &self.step, &vec![0; d], &mut rng);
        let trace = Trace::build(&tree, &emb).expect("walk coordinates stay within the packed range");
        let mut inv = InvariantTally::default();
        multiplicity_check(&tree, &trace, &mut inv);

        let mut by_height: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        for s in 0..trace.num_sites() as u32 {
            by_height[trace.site_height(s) as usize].push(s);
        }
        let root = trace.node_map()[tree.root() as usize];
        let solve = |k: usize| {
            let net = trace.to_network_up_to(k as u32);
            shorted_resistance(&net, root, &by_height[k], &self.opts)
        };
        let sites = trace.num_sites();
        let main = match solve(n) {
            Ok(r) => r,
            Err(e) => return (failed_record(d, n, replica, seed, &tree, sites, &e), inv),
        };
        if main.value > n as f64 * (1.0 + INVARIANT_SLACK) {
            inv.bound += 1;
        }
        let mut ks: Vec<usize> = [n / 4, n / 2, 3 * n / 4].into_iter().filter(|&k| k >= 1).collect();
        ks.dedup();
        let mut values: Vec<f64> = ks.into_iter().filter(|&k| k < n).filter_map(|k| solve(k).ok().map(|r| r.value)).collect();
        values.push(main.value);
        if values.windows(2).any(|w| w[0] > w[1] * (1.0 + INVARIANT_SLACK)) {
            inv.monotonicity += 1;
        }
        (ok_record(d, n, replica, seed, &tree, sites, &main), inv)
    }
}

/// Resistance between the root and `Φ(V_n)` in `T(n, m)` with the backbone
/// embedded as a bridge to `(x, n)`.
#[derive(Debug, Clone)]
pub struct GammaRun {
    d: usize,
    n: usize,
    x: Vec<i32>,
    sampler: TnmSampler,
    step: StepDistribution,
    opts: SolverOptions,
    max_attempts: u64,
}

impl GammaRun {
    pub fn new(cfg: &ExperimentConfig, n: usize) -> Result<Self, ExperimentError> {
        let d = cfg.d;
        let step = cfg.step_law(d, "srw")?;
        let x = cfg.target();
        let bad = |msg: String| ExperimentError::Validation { field: "x".into(), msg };
        if !step.parity_compatible(n, &x) {
            return Err(bad(format!("{x:?} has the wrong parity for a bridge of {n} steps")));
        }
        let estimate = local_clt_estimate(&step, n, &x);
        if estimate * (cfg.max_attempts as f64) < 1.0 {
            return Err(bad(format!(
                "bridge of {n} steps to {x:?} accepts with probability about {estimate:.3e}; \
                 max_attempts = {} is too small",
                cfg.max_attempts
            )));
        }
        let sampler = TnmSampler::new(&cfg.offspring_law()?, n, cfg.m_policy.m(n))?;
        Ok(Self {
            d,
            n,
            x,
            sampler,
            step,
            opts: solver_options(cfg),
            max_attempts: cfg.max_attempts,
        })
    }

    pub fn replica(&self, replica: usize, seed: u64) -> (Record, InvariantTally) {
        let (d, n) = (self.d, self.n);
        let mut rng = replica_rng(seed);
        let tree = self.sampler.sample(&mut rng);
        let mut inv = InvariantTally::default();
        let bridge = match bridge_sample(&self.step, n, &self.x, &mut rng, self.max_attempts) {
            Ok(b) => b,
            Err(EmbeddingError::AttemptsExhausted { .. }) => {
                let rec = Record {
                    d,
                    n,
                    replica,
                    seed,
                    value: None,
                    tree_size: tree.len(),
                    sites: 0,
                    solver_iters: 0,
                    residual: f64::NAN,
                    status: Status::AttemptsExhausted,
                };
                return (rec, inv);
            }
            Err(e) => panic!("bridge feasibility was checked up front: {e}"),
        };
        let emb = Embedding::with_backbone_path(&tree, &self.step, &bridge.path, &mut rng);
        let trace = Trace::build(&tree, &emb).expect("walk coordinates stay within the packed range");
        multiplicity_check(&tree, &trace, &mut inv);
        let root = trace.node_map()[tree.root() as usize];
        let target = trace.backbone_sites()[n];
        let sites = trace.num_sites();
        match effective_resistance(&trace.to_network(), root, target, &self.opts) {
            Ok(r) => {
                if r.value > n as f64 * (1.0 + INVARIANT_SLACK) {
                    inv.bound += 1;
                }
                (ok_record(d, n, replica, seed, &tree, sites, &r), inv)
            }
            Err(e) => (failed_record(d, n, replica, seed, &tree, sites, &e), inv),
        }
    }
}

/// Size of the truncated incipient infinite branching process.
#[derive(Debug, Clone)]
pub struct VolumeRun {
    d: usize,
    sampler: IibpSampler,
}

impl VolumeRun {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        Ok(Self {
            d: cfg.d,
            sampler: IibpSampler::new(&cfg.offspring_law()?),
        })
    }

    pub fn replica(&self, n: usize, replica: usize, seed: u64) -> Record {
        let size = if n == 0 {
            1
        } else {
            let mut rng = replica_rng(seed);
            self.sampler.sample(n, &mut rng).expect("n is at least 1").len()
        };
        Record {
            d: self.d,
            n,
            replica,
            seed,
            value: None,
            tree_size: size,
            sites: 0,
            solver_iters: 0,
            residual: 0.0,
            status: Status::Ok,
        }
    }
}

fn replicas<T: Send>(cfg: &ExperimentConfig, n: usize, f: impl Fn(usize, u64) -> T + Sync) -> Vec<T> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| f(r, derive_seed(cfg.seed, n, r)))
        .collect()
}

fn fits_for(records: &[Record], dims: &[usize], label: &str) -> (Vec<FitReport>, Vec<String>) {
    let summaries = summarize(records);
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    for &d in dims {
        let pts: Vec<(usize, f64, f64)> = summaries
            .iter()
            .filter(|s| s.d == d && s.n > 0 && s.mean > 0.0)
            .map(|s| (s.n, s.mean, s.stderr))
            .collect();
        if pts.len() >= 4 {
            notes.push(format!("d = {d}: fit drops the smallest n = {}", pts[0].0));
        }
        match FitReport::from_means(label, d, &pts) {
            Ok(f) => fits.push(f),
            Err(e) => notes.push(format!("d = {d}: no fit ({e})")),
        }
    }
    (fits, notes)
}

fn finish(
    kind: &str,
    cfg: &ExperimentConfig,
    dims: &[usize],
    records: Vec<Record>,
    invariants: InvariantTally,
    start: Instant,
) -> ExperimentReport {
    let (fits, notes) = fits_for(&records, dims, kind);
    let failures = records.iter().filter(|r| r.status != Status::Ok).count();
    let failure_rate = failures as f64 / records.len().max(1) as f64;
    ExperimentReport {
        kind: kind.to_string(),
        config: cfg.clone(),
        summaries: summarize(&records),
        records,
        fits,
        comparison: None,
        invariants,
        failures,
        failure_rate,
        valid: failure_rate <= MAX_FAILURE_RATE,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        notes,
    }
}

fn resistance_records(cfg: &ExperimentConfig, d: usize) -> Result<(Vec<Record>, InvariantTally), ExperimentError> {
    let run = ResistanceRun::new(cfg, d)?;
    let mut records = Vec::with_capacity(cfg.n_values.len() * cfg.replicas);
    let mut inv = InvariantTally::default();
    for &n in &cfg.n_values {
        for (rec, t) in replicas(cfg, n, |r, seed| run.replica(n, r, seed)) {
            records.push(rec);
            inv.merge(&t);
        }
    }
    Ok((records, inv))
}

/// Mean resistance to the shorted generation `n` for each `n` in the grid.
pub fn estimate_resistance(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    require_positive_n(cfg)?;
    let start = Instant::now();
    let (records, inv) = resistance_records(cfg, cfg.d)?;
    Ok(finish("resistance", cfg, &[cfg.d], records, inv, start))
}

/// Mean `γ(n, x)` at the configured `m` policy.
pub fn estimate_gamma(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    require_positive_n(cfg)?;
    let start = Instant::now();
    let runs = cfg
        .n_values
        .iter()
        .map(|&n| GammaRun::new(cfg, n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    let mut inv = InvariantTally::default();
    for (run, &n) in runs.iter().zip(&cfg.n_values) {
        for (rec, t) in replicas(cfg, n, |r, seed| run.replica(r, seed)) {
            records.push(rec);
            inv.merge(&t);
        }
    }
    let kind = format!("gamma-m{}", cfg.m_policy.label());
    Ok(finish(&kind, cfg, &[cfg.d], records, inv, start))
}

/// Mean size of the truncated incipient infinite branching process.
pub fn estimate_volume(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let start = Instant::now();
    let run = VolumeRun::new(cfg)?;
    let mut records = Vec::new();
    for &n in &cfg.n_values {
        records.extend(replicas(cfg, n, |r, seed| run.replica(n, r, seed)));
    }
    Ok(finish("volume", cfg, &[cfg.d], records, InvariantTally::default(), start))
}

/// [`estimate_resistance`] for every dimension in `cfg.dims`, with shared
/// seeds, and the slope difference between the highest dimension below 6 and
/// the lowest above 6.
pub fn compare_dimensions(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    require_positive_n(cfg)?;
    let d_low = cfg.dims.iter().copied().filter(|d| (3..=5).contains(d)).max();
    let d_high = cfg.dims.iter().copied().filter(|d| (7..=8).contains(d)).min();
    let (Some(d_low), Some(d_high)) = (d_low, d_high) else {
        return Err(ExperimentError::Validation {
            field: "dims".into(),
            msg: "need one dimension in 3..=5 and one in 7..=8".into(),
        });
    };
    let start = Instant::now();
    let mut records = Vec::new();
    let mut inv = InvariantTally::default();
    for &d in &cfg.dims {
        let (r, t) = resistance_records(cfg, d)?;
        records.extend(r);
        inv.merge(&t);
    }
    let mut report = finish("compare-dims", cfg, &cfg.dims, records, inv, start);
    if let (Some(lo), Some(hi)) = (report.fit(d_low), report.fit(d_high)) {
        report.comparison = Some(DimensionComparison {
            d_low,
            d_high,
            slope_low: lo.slope,
            slope_high: hi.slope,
            difference: lo.slope - hi.slope,
            pooled_stderr: (lo.stderr.powi(2) + hi.stderr.powi(2)).sqrt(),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub n: usize,
    pub theta: f64,
    /// `θ(n) σ² n / 2`.
    pub ratio: f64,
}

pub fn survival_ratio(p: &OffspringDistribution, n_values: &[usize]) -> Vec<SurvivalRow> {
    let n_max = n_values.iter().copied().max().unwrap_or(0);
    let table = SurvivalTable::new(p, n_max);
    n_values
        .iter()
        .map(|&n| SurvivalRow {
            n,
            theta: table.theta(n),
            ratio: table.kolmogorov_ratio(n),
        })
        .collect()
}
