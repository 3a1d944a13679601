//! Command-line front end for the verification harness.
//!
//! Exit codes: 0 when every verdict leaves the bound standing, 1 on a
//! violation or failed suite, 2 on malformed input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use ppapprox::carrier::{Carrier, Geometry, GroundDistance};
use ppapprox::harness::{
    read_config, read_sample, remark_model, render_report, resolve_seed, reproduce_counterexample_4_7, reproduce_remark_3_7,
    run_experiment, selftest, ExperimentConfig, Fault, Format, VerificationReport,
};
use ppapprox::metrics::{empirical_d2, rho1, rho1_dd};
use ppapprox::palm::check_palm_identity;
use ppapprox::processes::OccupancyModel;
use ppapprox::rng::{substream, tag};
use ppapprox::Error;

#[derive(Parser)]
#[command(name = "ppapprox", version, about = "Poisson process approximation: bounds and their empirical verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a model and its Poisson approximation and check the bound.
    Experiment(ExperimentArgs),
    /// Monte-Carlo identity checks.
    Check(CheckArgs),
    /// Exact worked examples.
    Reproduce(ReproduceArgs),
    /// Fast invariant suites of every module.
    Selftest(SelftestArgs),
    /// Distances between configuration files.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Matern,
    Occupancy,
    Palindrome,
    MarkedTrials,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Matern => "matern",
            Kind::Occupancy => "occupancy",
            Kind::Palindrome => "palindrome",
            Kind::MarkedTrials => "marked-trials",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Box,
    Torus,
}

impl GeometryArg {
    fn name(self) -> &'static str {
        match self {
            GeometryArg::Box => "box",
            GeometryArg::Torus => "torus",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    MonteCarlo,
}

#[derive(Args)]
struct Output {
    /// Master seed; drawn from the clock when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[command(flatten)]
    output: Output,
    /// Draws per side per replicate.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Draws for Monte-Carlo bound terms.
    #[arg(long)]
    bound_samples: Option<usize>,
    /// JSON experiment config; its values override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// FASTA sequence (palindrome only).
    #[arg(long)]
    fasta: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum)]
    geometry: Option<GeometryArg>,
    /// Urns (occupancy).
    #[arg(long)]
    n: Option<usize>,
    /// Balls (occupancy).
    #[arg(long)]
    s: Option<u64>,
    /// Occupancy threshold.
    #[arg(long)]
    m: Option<u64>,
    /// Sequence length (palindrome).
    #[arg(long)]
    length: Option<usize>,
    /// Half-length L of the palindromes (palindrome).
    #[arg(long)]
    half: Option<usize>,
    /// Bound evaluation (marked-trials).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Stein,
    Palm,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    what: CheckKind,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Poisson intensity (stein).
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Dimension (stein).
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Matérn radius; checks a Matérn process instead of a Poisson one (stein).
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    #[value(name = "remark-3.7")]
    Remark,
    #[value(name = "counterexample-4.7")]
    Counterexample,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    example: ExampleArg,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = 0.01)]
    q: f64,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Deliberately break one suite: inverse-moment-constant | assignment-cost.
    #[arg(long)]
    inject_fault: Option<Fault>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Rho1,
    Rho1dd,
    D2,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroundArg {
    Capped,
    Zero,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(value_enum)]
    which: MetricKind,
    /// Configuration file (a sample file for d2).
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "box")]
    geometry: GeometryArg,
    #[arg(long, value_enum, default_value = "capped")]
    ground: GroundArg,
}

/// Input problems that map to exit code 2.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// `over` merged into `base`, objects recursively, `over` winning.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn put<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(key.into(), json!(v));
    }
}

fn experiment_config(a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut exp = Map::new();
    exp.insert("kind".into(), json!(a.kind.name()));
    put(&mut exp, "mu", a.mu);
    put(&mut exp, "r", a.r);
    put(&mut exp, "d", a.d);
    put(&mut exp, "geometry", a.geometry.map(GeometryArg::name));
    put(&mut exp, "n", a.n);
    put(&mut exp, "s", a.s);
    put(&mut exp, "m", a.m);
    put(&mut exp, "length", a.length);
    put(&mut exp, "half", a.half);
    put(&mut exp, "fasta", a.fasta.as_ref());
    put(
        &mut exp,
        "mode",
        a.mode.map(|m| match m {
            ModeArg::Exact => "exact",
            ModeArg::MonteCarlo => "monte-carlo",
        }),
    );
    let mut top = Map::new();
    top.insert("experiment".into(), Value::Object(exp));
    put(&mut top, "samples", a.samples);
    put(&mut top, "replicates", a.replicates);
    put(&mut top, "bound_samples", a.bound_samples);
    put(&mut top, "seed", a.output.seed);
    put(&mut top, "out", a.output.out.as_ref());
    let mut value = Value::Object(top);
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        let file: Value = serde_json::from_str(&text).map_err(Error::from)?;
        if let Some(kind) = file.pointer("/experiment/kind") {
            if kind != &json!(a.kind.name()) {
                return usage(format!("config kind {kind} does not match subcommand `{}`", a.kind.name()));
            }
        }
        merge(&mut value, file);
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(Error::from)?;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Lib(e.into())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn finish_report(report: &VerificationReport, format: Option<FormatArg>) -> CliResult<ExitCode> {
    let format = format.map(Format::from).unwrap_or_default();
    eprintln!("verdict: {:?}", report.verdict);
    emit(&render_report(report, format), report.config.out.as_ref())?;
    Ok(if report.verdict.acceptable() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_config(mut cfg: ExperimentConfig, format: Option<FormatArg>) -> CliResult<ExitCode> {
    eprintln!("seed: {}", cfg.resolve_seed());
    let report = run_experiment(&cfg)?;
    finish_report(&report, format)
}

fn experiment(a: ExperimentArgs) -> CliResult<ExitCode> {
    let cfg = experiment_config(&a)?;
    run_config(cfg, a.output.format)
}

fn check(a: CheckArgs) -> CliResult<ExitCode> {
    match a.what {
        CheckKind::Stein => {
            let mut exp = json!({ "kind": "stein-check", "lambda": a.lambda, "d": a.d });
            if let Some(r) = a.r {
                exp["matern_r"] = json!(r);
            }
            let cfg: ExperimentConfig = serde_json::from_value(json!({
                "experiment": exp,
                "samples": a.samples,
                "seed": a.output.seed,
                "out": a.output.out,
            }))
            .map_err(Error::from)?;
            cfg.validate()?;
            run_config(cfg, a.output.format)
        }
        CheckKind::Palm => {
            let seed = resolve_seed(a.output.seed);
            eprintln!("seed: {seed}");
            let models = [
                ("remark", remark_model()?),
                ("occupancy", OccupancyModel::uniform(5, 8, 1)?.indicator_model()?),
            ];
            let mut rows = Vec::new();
            let mut ok = true;
            for (name, im) in &models {
                let f = |i: usize, bits: &[bool]| (bits.iter().filter(|b| **b).count() + i) as f64;
                let res = check_palm_identity(im, f, a.samples, &mut substream(seed, &[tag(name)]))?;
                let pass = res.consistent_with_zero(3.0);
                ok &= pass;
                rows.push(json!({ "model": name, "residual": res, "pass": pass }));
            }
            let out = json!({ "check": "palm-identity", "seed": seed, "results": rows, "pass": ok });
            emit(&serde_json::to_string_pretty(&out).expect("values serialize"), a.output.out.as_ref())?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn reproduce(a: ReproduceArgs) -> CliResult<ExitCode> {
    let seed = resolve_seed(a.output.seed);
    if let Some(format) = a.output.format {
        let example = match a.example {
            ExampleArg::Remark => "remark-3.7",
            ExampleArg::Counterexample => "counterexample-4.7",
        };
        let cfg: ExperimentConfig = serde_json::from_value(json!({
            "experiment": { "kind": "reproduce", "example": example, "b": a.b, "q": a.q },
            "seed": seed,
            "out": a.output.out,
        }))
        .map_err(Error::from)?;
        return run_config(cfg, Some(format));
    }
    eprintln!("seed: {seed}");
    let text = match a.example {
        ExampleArg::Remark => {
            let r = reproduce_remark_3_7();
            format!("joint {}\nfactorized {}\ndifference {}\ndiffer {}", r.joint, r.factorized, r.factorized - r.joint, r.differ)
        }
        ExampleArg::Counterexample => {
            let r = reproduce_counterexample_4_7(a.b, a.q)?;
            format!("conditional {}\nunconditional {}\ndirection {:?}", r.conditional, r.unconditional, r.direction)
        }
    };
    emit(&text, a.output.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn run_selftest(a: SelftestArgs) -> CliResult<ExitCode> {
    let seed = resolve_seed(a.seed);
    eprintln!("seed: {seed}");
    let summary = selftest(seed, a.inject_fault);
    emit(&serde_json::to_string_pretty(&summary).expect("summaries serialize"), a.out.as_ref())?;
    Ok(if summary.all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn ground_for(carrier: &Carrier, a: &MetricsArgs) -> GroundDistance {
    let geometry = match a.geometry {
        GeometryArg::Box => Geometry::Box,
        GeometryArg::Torus => Geometry::Torus,
    };
    let base = match a.ground {
        GroundArg::Zero => return GroundDistance::Zero,
        GroundArg::Capped => GroundDistance::capped(geometry),
    };
    match carrier {
        Carrier::Lifted { .. } => GroundDistance::lifted(base),
        _ => base,
    }
}

fn metrics(a: MetricsArgs) -> CliResult<ExitCode> {
    let value = match a.which {
        MetricKind::Rho1 | MetricKind::Rho1dd => {
            let (x, y) = (read_config(&a.a)?, read_config(&a.b)?);
            let g = ground_for(x.carrier(), &a);
            match a.which {
                MetricKind::Rho1 => rho1(&x, &y, &g)?,
                _ => rho1_dd(&x, &y, &g)?,
            }
        }
        MetricKind::D2 => {
            let (x, y) = (read_sample(&a.a)?, read_sample(&a.b)?);
            let Some(first) = x.first() else {
                return usage("sample file a is empty");
            };
            let g = ground_for(first.carrier(), &a);
            empirical_d2(&x, &y, &g)?
        }
    };
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Experiment(a) => experiment(a),
        Command::Check(a) => check(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Selftest(a) => run_selftest(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run `ppapprox --help` for usage");
            ExitCode::from(2)
        }
    }
}
