//! `brw`: command-line front end for the simulation laboratory.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! run finishes but is flagged invalid (too many failed replicas).

mod output;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use brw_core::experiments::{
    compare_dimensions, estimate_gamma, estimate_resistance, estimate_volume, run_blocks, run_intersections,
    survival_ratio, DimensionComparison, ExperimentConfig, ExperimentReport, FitReport, InvariantTally, MPolicy,
};
use brw_core::resistance::{effective_resistance, shorted_resistance, Network, SolverOptions};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::{unix_now, OutputDir, RunManifest};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "BRW_THREADS";

#[derive(Parser)]
#[command(name = "brw", version, about = "Critical branching random walk traces as electrical networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival probabilities θ(n) and the ratio θ(n)σ²n/2.
    Survival(RunArgs),
    /// Mean shorted resistance R(n) of the embedded incipient process.
    SimulateResistance(RunArgs),
    /// γ(n, x) for m = 2n and m = 4n.
    Gamma(RunArgs),
    /// Mean size of the truncated incipient process.
    Volume(RunArgs),
    /// Intersection counts |I| of two independent trees.
    Intersections(RunArgs),
    /// Frequency of good blocks and the first failing condition.
    Blocks(RunArgs),
    /// Resistance exponents across dimensions with shared seeds.
    CompareDims(RunArgs),
    /// Effective resistance of a network read from a file.
    ResistanceSolve(SolveArgs),
}

/// Every flag overrides the key of the same name from `--config`.
#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    d: Option<String>,
    /// Comma-separated dimensions for compare-dims.
    #[arg(long)]
    dims: Option<String>,
    /// Preset name, `geometric:<cap>`, or a file of `k p` lines.
    #[arg(long)]
    offspring: Option<String>,
    /// Preset name or a file of step lines.
    #[arg(long)]
    step: Option<String>,
    /// Comma-separated sizes (δn values for intersections).
    #[arg(long, visible_alias = "delta-n")]
    n: Option<String>,
    /// Conditioning level policy, `2n` or `4n`.
    #[arg(long)]
    m: Option<String>,
    #[arg(long, visible_alias = "replicas")]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "k", visible_alias = "K")]
    k: Option<String>,
    #[arg(long)]
    c0: Option<String>,
    #[arg(long)]
    block: Option<String>,
    /// Comma-separated lattice point.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    max_attempts: Option<String>,
    /// Trees per root in one intersection replica.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Network file: header `nodes edges`, then `a b conductance` per line.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    source: u32,
    #[arg(long, conflicts_with = "short_set", required_unless_present = "short_set")]
    target: Option<u32>,
    /// File of node ids (whitespace or comma separated) shorted together as the sink.
    #[arg(long)]
    short_set: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<brw_core::experiments::ExperimentError> for Failure {
    fn from(e: brw_core::experiments::ExperimentError) -> Self {
        Self::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let argv: Vec<String> = std::env::args().collect();
    let outcome = match cli.command {
        Command::ResistanceSolve(a) => solve(&a, &argv),
        Command::Survival(a) => run("survival", &a, &argv),
        Command::SimulateResistance(a) => run("simulate-resistance", &a, &argv),
        Command::Gamma(a) => run("gamma", &a, &argv),
        Command::Volume(a) => run("volume", &a, &argv),
        Command::Intersections(a) => run("intersections", &a, &argv),
        Command::Blocks(a) => run("blocks", &a, &argv),
        Command::CompareDims(a) => run("compare-dims", &a, &argv),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: cannot write output: {msg}");
            ExitCode::from(1)
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Config file (or defaults), then flags, then validation.
fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("d", &args.d),
        ("dims", &args.dims),
        ("offspring", &args.offspring),
        ("step", &args.step),
        ("n", &args.n),
        ("m", &args.m),
        ("replicas", &args.reps),
        ("seed", &args.seed),
        ("tol", &args.tol),
        ("delta", &args.delta),
        ("K", &args.k),
        ("c0", &args.c0),
        ("block", &args.block),
        ("x", &args.x),
        ("max_attempts", &args.max_attempts),
        ("grid", &args.grid),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|msg| Failure::Usage(format!("--{key}: {msg}")))?;
        }
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Everything in an [`ExperimentReport`] except the per-replica records and
/// the wall clock, so that reruns give identical bytes.
#[derive(Serialize)]
struct ReportDigest<'a> {
    kind: &'a str,
    fits: &'a [FitReport],
    comparison: Option<&'a DimensionComparison>,
    invariants: &'a InvariantTally,
    failures: usize,
    failure_rate: f64,
    valid: bool,
    notes: &'a [String],
}

fn save_report(out: &mut OutputDir, prefix: &str, r: &ExperimentReport) -> Result<(), Failure> {
    out.write(&format!("{prefix}records.csv"), r.records_csv().as_bytes())?;
    out.write(&format!("{prefix}summary.csv"), r.summary_csv().as_bytes())?;
    out.write_json(
        &format!("{prefix}fits.json"),
        &ReportDigest {
            kind: &r.kind,
            fits: &r.fits,
            comparison: r.comparison.as_ref(),
            invariants: &r.invariants,
            failures: r.failures,
            failure_rate: r.failure_rate,
            valid: r.valid,
            notes: &r.notes,
        },
    )?;
    Ok(())
}

fn describe_fits(fits: &[FitReport]) -> String {
    let mut s = String::new();
    for f in fits {
        let _ = writeln!(
            s,
            "fit {} d={}: slope {:.4} ± {:.4} over n = {:?}",
            f.label, f.d, f.slope, f.stderr, f.n_used
        );
    }
    s
}

fn describe_report(r: &ExperimentReport) -> String {
    let mut s = r.summary_csv();
    s.push_str(&describe_fits(&r.fits));
    if let Some(c) = &r.comparison {
        let _ = writeln!(
            s,
            "slope d={} minus d={}: {:.4} ± {:.4} (pooled)",
            c.d_low, c.d_high, c.difference, c.pooled_stderr
        );
    }
    let inv = &r.invariants;
    if inv.traces > 0 {
        let _ = writeln!(s, "invariants: {} traces, {} violations", inv.traces, inv.violations());
    }
    s
}

fn report_validity(r: &ExperimentReport) -> bool {
    if !r.valid {
        eprintln!(
            "run invalid: {} of {} replicas failed ({:.2}%)",
            r.failures,
            r.records.len(),
            100.0 * r.failure_rate
        );
    }
    for note in &r.notes {
        eprintln!("note: {note}");
    }
    r.valid
}

fn run(command: &str, args: &RunArgs, argv: &[String]) -> Result<bool, Failure> {
    let cfg = load_config(args)?;
    let started = unix_now();
    let dir = cfg
        .output
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("brw-runs").join(command));
    let mut out = OutputDir::new(dir);
    let mut valid = true;
    let mut stdout = String::new();
    match command {
        "survival" => {
            let rows = survival_ratio(&cfg.offspring_law()?, &cfg.n_values);
            let mut csv = String::from("n,theta,ratio\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{}", r.n, r.theta, r.ratio);
            }
            out.write("survival.csv", csv.as_bytes())?;
            stdout = csv;
        }
        "simulate-resistance" | "volume" | "compare-dims" => {
            let r = match command {
                "simulate-resistance" => estimate_resistance(&cfg)?,
                "volume" => estimate_volume(&cfg)?,
                _ => compare_dimensions(&cfg)?,
            };
            save_report(&mut out, "", &r)?;
            stdout = describe_report(&r);
            valid = report_validity(&r);
        }
        "gamma" => {
            for policy in [MPolicy::TwoN, MPolicy::FourN] {
                let c = ExperimentConfig {
                    m_policy: policy,
                    ..cfg.clone()
                };
                let r = estimate_gamma(&c)?;
                save_report(&mut out, &format!("m{}-", policy.label()), &r)?;
                let _ = writeln!(stdout, "# m = {}", policy.label());
                stdout.push_str(&describe_report(&r));
                valid &= report_validity(&r);
            }
        }
        "intersections" => {
            let s = run_intersections(&cfg)?;
            out.write("records.csv", s.records_csv().as_bytes())?;
            out.write("summary.csv", s.summary_csv().as_bytes())?;
            out.write_json("fits.json", &s.fits)?;
            stdout = s.summary_csv();
            stdout.push_str(&describe_fits(&s.fits));
        }
        "blocks" => {
            let s = run_blocks(&cfg)?;
            out.write("records.csv", s.records_csv().as_bytes())?;
            out.write("summary.csv", s.summary_csv().as_bytes())?;
            stdout = s.summary_csv();
        }
        other => unreachable!("unknown command {other}"),
    }
    out.write("config.txt", cfg.serialize().as_bytes())?;
    let dir = out.path().display().to_string();
    out.finish(RunManifest {
        tool: "brw",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        argv: argv.to_vec(),
        config: cfg.serialize(),
        seed: cfg.seed,
        started_unix: started,
        finished_unix: started,
        valid,
        files: Vec::new(),
    })?;
    print!("{stdout}");
    eprintln!("wrote {dir}");
    Ok(valid)
}

#[derive(Serialize)]
struct SolveReport {
    source: u32,
    target: Option<u32>,
    short_set: Option<Vec<u32>>,
    #[serde(flatten)]
    resistance: brw_core::resistance::ResistanceResult,
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn solve(args: &SolveArgs, argv: &[String]) -> Result<bool, Failure> {
    let started = unix_now();
    let net = Network::parse(&read_file(&args.graph)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.graph.display())))?;
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {}", args.tol)));
    }
    let opts = SolverOptions {
        tol: args.tol,
        ..Default::default()
    };
    let short_set = match &args.short_set {
        Some(path) => Some(
            read_file(path)?
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::parse::<u32>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(format!("{}: bad node id: {e}", path.display())))?,
        ),
        None => None,
    };
    let result = match (&short_set, args.target) {
        (Some(t), _) => shorted_resistance(&net, args.source, t, &opts),
        (None, Some(z)) => effective_resistance(&net, args.source, z, &opts),
        (None, None) => unreachable!("clap requires --target or --short-set"),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let report = SolveReport {
        source: args.source,
        target: args.target,
        short_set,
        resistance: result,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.to_string()))?;
    println!("{json}");
    if let Some(dir) = &args.out {
        let mut out = OutputDir::new(dir.clone());
        out.write_json("result.json", &report)?;
        out.finish(RunManifest {
            tool: "brw",
            version: env!("CARGO_PKG_VERSION"),
            command: "resistance-solve".into(),
            argv: argv.to_vec(),
            config: format!("graph = {}\ntol = {:?}\n", args.graph.display(), args.tol),
            seed: 0,
            started_unix: started,
            finished_unix: started,
            valid: true,
            files: Vec::new(),
        })?;
    }
    Ok(true)
}
