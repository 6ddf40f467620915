use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::FitReport;
use super::report::mean_stderr;
use super::seeds::{derive_seed, replica_rng};
use super::ExperimentError;
use crate::embedding::{Embedding, StepDistribution};
use crate::branching::Tree;
use crate::events::{count_intersection_grid, BlockConfig, BlockSampler, IntersectionSampler};

pub const INTERSECTION_RECORD_HEADER: &str =
    "d,delta_n,replica,seed,pairs,count_sum,square_sum,positive,qualified1,qualified2";
pub const INTERSECTION_SUMMARY_HEADER: &str =
    "d,delta_n,mean,stderr,second_moment,second_moment_stderr,p_positive,replicas,pairs";
pub const BLOCK_RECORD_HEADER: &str = "n,delta_n,k,i,replica,seed,tree_good,spatially_good,good,failure";
pub const BLOCK_SUMMARY_HEADER: &str = "n,delta_n,k,i,samples,good,p_good,stderr,f1,f2,f3,f4,f5,f6";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
/// One replica: `grid` trees per root and every cross pair between them.
pub struct IntersectionRecord {
    pub delta_n: usize,
    pub replica: usize,
    pub seed: u64,
    pub pairs: usize,
    /// Sums of `|I|` and `|I|²` over the pairs.
    pub count_sum: u64,
    pub square_sum: u64,
    /// Pairs with `|I| > 0`.
    pub positive: usize,
    /// Qualified candidates summed over the trees of each root.
    pub qualified: [u64; 2],
}

impl IntersectionRecord {
    pub fn mean(&self) -> f64 {
        self.count_sum as f64 / self.pairs as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.square_sum as f64 / self.pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSummary {
    pub delta_n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    /// Fraction of pairs with `|I| > 0`.
    pub p_positive: f64,
    pub replicas: usize,
    pub pairs: usize,
}

/// `|I|` for independent pairs of `T(δn, 2δn)` trees rooted at the origin
/// and at `x`. Each replica samples `grid` trees per root and averages over
/// all `grid²` cross pairs, which is unbiased for every moment of `|I|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionStudy {
    pub d: usize,
    pub config: ExperimentConfig,
    pub records: Vec<IntersectionRecord>,
    pub summaries: Vec<IntersectionSummary>,
    /// Mean and second-moment slopes against `δn`.
    pub fits: Vec<FitReport>,
    pub wall_clock_secs: f64,
}

impl IntersectionStudy {
    pub fn records_csv(&self) -> String {
        let mut out = format!("{INTERSECTION_RECORD_HEADER}\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.d,
                r.delta_n,
                r.replica,
                r.seed,
                r.pairs,
                r.count_sum,
                r.square_sum,
                r.positive,
                r.qualified[0],
                r.qualified[1]
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{INTERSECTION_SUMMARY_HEADER}\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.d,
                s.delta_n,
                s.mean,
                s.stderr,
                s.second_moment,
                s.second_moment_stderr,
                s.p_positive,
                s.replicas,
                s.pairs
            );
        }
        out
    }

    pub fn fit(&self, label: &str) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.label == label)
    }
}

/// One pair of trees at scale `δn`.
#[derive(Debug, Clone)]
pub struct IntersectionRun {
    sampler: IntersectionSampler,
    grid: usize,
    step: StepDistribution,
    x: Vec<i32>,
}

impl IntersectionRun {
    pub fn new(cfg: &ExperimentConfig, delta_n: usize) -> Result<Self, ExperimentError> {
        Ok(Self {
            sampler: IntersectionSampler::new(&cfg.offspring_law()?, delta_n),
            grid: cfg.grid,
            step: cfg.step_law(cfg.d, "lazy-srw")?,
            x: cfg.target(),
        })
    }

    pub fn replica(&self, replica: usize, seed: u64) -> IntersectionRecord {
        let mut rng = replica_rng(seed);
        let origin = vec![0; self.step.dim()];
        let mut side = |root: &[i32]| -> Vec<(Tree, Embedding)> {
            (0..self.grid)
                .map(|_| {
                    let t = self.sampler.sample(&mut rng);
                    let e = Embedding::random_walk(&t, &self.step, root, &mut rng);
                    (t, e)
                })
                .collect()
        };
        let first = side(&origin);
        let second = side(&self.x);
        let delta_n = self.sampler.delta_n();
        let (counts, q1, q2) = count_intersection_grid(&refs(&first), &refs(&second), &self.step, delta_n);
        IntersectionRecord {
            delta_n,
            replica,
            seed,
            pairs: counts.len(),
            count_sum: counts.iter().sum(),
            square_sum: counts.iter().map(|c| c * c).sum(),
            positive: counts.iter().filter(|&&c| c > 0).count(),
            qualified: [q1.iter().sum(), q2.iter().sum()],
        }
    }
}

fn refs(v: &[(Tree, Embedding)]) -> Vec<(&Tree, &Embedding)> {
    v.iter().map(|(t, e)| (t, e)).collect()
}

/// Intersection counts over the `δn` grid in `cfg.n_values`.
pub fn run_intersections(cfg: &ExperimentConfig) -> Result<IntersectionStudy, ExperimentError> {
    cfg.validate()?;
    if cfg.n_values[0] < 2 {
        return Err(ExperimentError::Validation {
            field: "n".into(),
            msg: "delta_n values must be at least 2".into(),
        });
    }
    let start = Instant::now();
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &dn in &cfg.n_values {
        let run = IntersectionRun::new(cfg, dn)?;
        let recs: Vec<IntersectionRecord> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run.replica(r, derive_seed(cfg.seed, dn, r)))
            .collect();
        let means: Vec<f64> = recs.iter().map(IntersectionRecord::mean).collect();
        let squares: Vec<f64> = recs.iter().map(IntersectionRecord::mean_square).collect();
        let (mean, stderr) = mean_stderr(&means);
        let (second_moment, second_moment_stderr) = mean_stderr(&squares);
        let pairs: usize = recs.iter().map(|r| r.pairs).sum();
        summaries.push(IntersectionSummary {
            delta_n: dn,
            mean,
            stderr,
            second_moment,
            second_moment_stderr,
            p_positive: recs.iter().map(|r| r.positive).sum::<usize>() as f64 / pairs as f64,
            replicas: recs.len(),
            pairs,
        });
        records.extend(recs);
    }
    let mut fits = Vec::new();
    let first: Vec<_> = summaries.iter().map(|s| (s.delta_n, s.mean, s.stderr)).collect();
    let second: Vec<_> = summaries
        .iter()
        .map(|s| (s.delta_n, s.second_moment, s.second_moment_stderr))
        .collect();
    for (label, pts) in [("mean", first), ("second-moment", second)] {
        if let Ok(f) = FitReport::from_means(label, cfg.d, &pts) {
            fits.push(f);
        }
    }
    Ok(IntersectionStudy {
        d: cfg.d,
        config: cfg.clone(),
        records,
        summaries,
        fits,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub tree_good: bool,
    pub spatially_good: bool,
    pub good: bool,
    pub failure: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub block: BlockConfig,
    pub samples: usize,
    pub good: usize,
    pub p_good: f64,
    pub stderr: f64,
    /// Samples failing first at condition `j + 1`.
    pub failures: [usize; 6],
}

/// Frequency of good blocks over the `n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStudy {
    pub d: usize,
    pub config: ExperimentConfig,
    pub records: Vec<BlockRecord>,
    pub summaries: Vec<BlockSummary>,
    pub wall_clock_secs: f64,
}

impl BlockStudy {
    pub fn records_csv(&self) -> String {
        let mut out = format!("{BLOCK_RECORD_HEADER}\n");
        for r in &self.records {
            let b = &self.summary(r.n).expect("every record has a summary").block;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.n,
                b.delta_n,
                b.k,
                b.i,
                r.replica,
                r.seed,
                r.tree_good,
                r.spatially_good,
                r.good,
                r.failure.map(|f| f.to_string()).unwrap_or_default()
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{BLOCK_SUMMARY_HEADER}\n");
        for s in &self.summaries {
            let b = &s.block;
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                b.n, b.delta_n, b.k, b.i, s.samples, s.good, s.p_good, s.stderr
            );
            for f in s.failures {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self, n: usize) -> Option<&BlockSummary> {
        self.summaries.iter().find(|s| s.block.n == n)
    }
}

#[derive(Debug, Clone)]
pub struct BlockRun {
    sampler: BlockSampler,
}

impl BlockRun {
    pub fn new(cfg: &ExperimentConfig, n: usize) -> Result<Self, ExperimentError> {
        let block = BlockConfig::new(n, cfg.delta, cfg.k, cfg.block, cfg.c0)?;
        let step = cfg.step_law(cfg.d, "lazy-srw")?;
        Ok(Self {
            sampler: BlockSampler::new(&cfg.offspring_law()?, cfg.m_policy.m(n), step, block)?,
        })
    }

    pub fn block(&self) -> &BlockConfig {
        self.sampler.config()
    }

    pub fn replica(&self, replica: usize, seed: u64) -> BlockRecord {
        let mut rng = replica_rng(seed);
        let c = self.sampler.sample(&mut rng).classification;
        BlockRecord {
            n: self.block().n,
            replica,
            seed,
            tree_good: c.tree_good,
            spatially_good: c.spatially_good,
            good: c.good,
            failure: c.failure,
        }
    }
}

/// Samples block `cfg.block` of `T(n, m)` for each `n` in the grid.
pub fn run_blocks(cfg: &ExperimentConfig) -> Result<BlockStudy, ExperimentError> {
    cfg.validate()?;
    let start = Instant::now();
    let runs = cfg
        .n_values
        .iter()
        .map(|&n| BlockRun::new(cfg, n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for run in &runs {
        let n = run.block().n;
        let recs: Vec<BlockRecord> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run.replica(r, derive_seed(cfg.seed, n, r)))
            .collect();
        let hits: Vec<f64> = recs.iter().map(|r| if r.good { 1.0 } else { 0.0 }).collect();
        let (p_good, stderr) = mean_stderr(&hits);
        let mut failures = [0usize; 6];
        for f in recs.iter().filter_map(|r| r.failure) {
            failures[f as usize - 1] += 1;
        }
        summaries.push(BlockSummary {
            block: *run.block(),
            samples: recs.len(),
            good: recs.iter().filter(|r| r.good).count(),
            p_good,
            stderr,
            failures,
        });
        records.extend(recs);
    }
    Ok(BlockStudy {
        d: cfg.d,
        config: cfg.clone(),
        records,
        summaries,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}
