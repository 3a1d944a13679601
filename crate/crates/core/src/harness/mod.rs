//! Reproducible verification runs.
//!
//! An [`ExperimentConfig`] names a model, sample sizes and a seed.
//! [`run_experiment`] samples the model and its matched Poisson process,
//! estimates the distance between them, evaluates the bound and renders a
//! [`Verdict`]. Every random draw comes from a substream of the seed keyed
//! by role and index, so reports do not depend on the thread count.
//!
//! The two-sample distance estimators are biased upward. Each statistical
//! run therefore also compares two independent samples of the Poisson law
//! (the null baseline) and judges the bound against the excess of the
//! estimate over that baseline.

mod io;
mod reproduce;
mod selftest;

pub use io::{config_from_json, config_to_json, read_config, read_sample};
pub use reproduce::{
    remark_model, reproduce_counterexample_4_7, reproduce_remark_3_7, CounterexampleRecord, Direction, RemarkRecord,
    REMARK_WEIGHTS,
};
pub use selftest::{selftest, Fault, SelftestSummary, SuiteResult};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bounds::{
    d2_bound_marked_trials_with, matern_bound, occupancy_bound, palindrome_bound, tv_count_bound, BoundMode, BoundReport,
    Diagnostic, Term,
};
use crate::carrier::{Carrier, CarrierPoint, Geometry, GroundDistance, PointConfig};
use crate::error::{invalid, misconfigured, Error, Result};
use crate::metrics::{estimate_d2, tv_counts_to_pmf, EstimateWithError};
use crate::palm::{check_stein_identity_with, Functional};
use crate::processes::{
    matern_mean_measure, palindrome_indicators, read_fasta, sample_matern, sample_occupancy, sample_poisson_process,
    grid_config, IndependentLaw, IndicatorModel, JointPmf, MeanMeasure, OccupancyModel, PalindromeModel, PalindromeSample,
};
use crate::rng::{substream, tag, SimRng};
use crate::special::poisson_pmf;

/// Bound totals at or above this are treated as close to vacuous.
pub const NEAR_VACUOUS: f64 = 0.9;

/// Multiple of the standard error used by every statistical verdict.
pub const STDERR_MULTIPLE: f64 = 3.0;

/// How a bound's expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    #[default]
    Exact,
    MonteCarlo,
}

/// A bounded test functional of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type", deny_unknown_fields)]
pub enum FunctionalSpec {
    Constant { value: f64 },
    CappedCount { cap: usize },
    CountAtMost { k: usize },
    ScaledSquare { cap: usize },
    RegionCount { upper: f64, cap: usize },
}

impl FunctionalSpec {
    pub fn functional(&self) -> Functional {
        match *self {
            FunctionalSpec::Constant { value } => Functional::Constant(value),
            FunctionalSpec::CappedCount { cap } => Functional::CappedCount(cap),
            FunctionalSpec::CountAtMost { k } => Functional::CountAtMost(k),
            FunctionalSpec::ScaledSquare { cap } => Functional::ScaledSquare(cap),
            FunctionalSpec::RegionCount { upper, cap } => Functional::RegionCount { upper, cap },
        }
    }
}

fn default_grid() -> usize {
    64
}

fn default_length() -> usize {
    150_000
}

fn default_half() -> usize {
    5
}

fn default_dim() -> usize {
    1
}

fn default_functional() -> FunctionalSpec {
    FunctionalSpec::CappedCount { cap: 5 }
}

fn default_b() -> f64 {
    2.0
}

fn default_q() -> f64 {
    0.01
}

/// Which worked example to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    #[serde(rename = "remark-3.7")]
    Remark,
    #[serde(rename = "counterexample-4.7")]
    Counterexample,
}

/// The model under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Experiment {
    /// Matérn hard-core thinning of a Poisson(`mu`) process.
    Matern {
        mu: f64,
        r: f64,
        d: usize,
        #[serde(default)]
        geometry: Geometry,
        /// Quadrature grid for the mean measure.
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// Urns holding at most `m` of `s` balls; `p` defaults to uniform over `n` urns.
    Occupancy {
        n: usize,
        s: u64,
        #[serde(default)]
        m: u64,
        #[serde(default)]
        p: Option<Vec<f64>>,
    },
    /// Palindromes of length at least `2 half` in i.i.d. or FASTA sequences.
    Palindrome {
        #[serde(default = "default_length")]
        length: usize,
        #[serde(default = "default_half")]
        half: usize,
        /// Base probabilities for `A, C, G, T`; uniform by default, base
        /// frequencies of the sequence when `fasta` is set.
        #[serde(default)]
        probs: Option<[f64; 4]>,
        #[serde(default)]
        fasta: Option<PathBuf>,
    },
    /// Dependent trials with an explicit pmf (`weights` indexed by outcome
    /// mask) or independent marginals `p`, with marks `i / n`.
    MarkedTrials {
        #[serde(default)]
        weights: Option<Vec<u64>>,
        #[serde(default)]
        p: Option<Vec<f64>>,
        /// Defaults to `A_i = {i}`; 0-based.
        #[serde(default)]
        neighborhoods: Option<Vec<Vec<usize>>>,
        #[serde(default)]
        mode: ModeSpec,
        #[serde(default)]
        locally_dependent: bool,
    },
    /// Stein identity residual for a Poisson (or, with `matern_r`, Matérn) process.
    SteinCheck {
        lambda: f64,
        #[serde(default = "default_dim")]
        d: usize,
        #[serde(default = "default_functional")]
        functional: FunctionalSpec,
        #[serde(default)]
        matern_r: Option<f64>,
    },
    /// The metric invariant suites of the selftest.
    MetricsSelftest,
    /// A worked example.
    Reproduce {
        example: Example,
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "default_q")]
        q: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Matern { .. } => "matern",
            Experiment::Occupancy { .. } => "occupancy",
            Experiment::Palindrome { .. } => "palindrome",
            Experiment::MarkedTrials { .. } => "marked-trials",
            Experiment::SteinCheck { .. } => "stein-check",
            Experiment::MetricsSelftest => "metrics-selftest",
            Experiment::Reproduce { .. } => "reproduce",
        }
    }

    fn uses_replicates(&self) -> bool {
        matches!(self, Experiment::Matern { .. } | Experiment::Occupancy { .. } | Experiment::MarkedTrials { .. })
    }

    fn uses_samples(&self) -> bool {
        !matches!(self, Experiment::MetricsSelftest | Experiment::Reproduce { .. })
    }
}

fn default_samples() -> usize {
    200
}

fn default_replicates() -> usize {
    5
}

/// A complete, serializable description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Draws per side per replicate (`N`).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Independent replicates (`R`).
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Draws for Monte-Carlo bound terms; defaults to `samples`.
    #[serde(default)]
    pub bound_samples: Option<usize>,
    /// Master seed; drawn from the clock when absent and recorded in the report.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            samples: default_samples(),
            replicates: default_replicates(),
            bound_samples: None,
            seed: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.uses_samples() && self.samples < 2 {
            return misconfigured(format!("need at least 2 samples, found {}", self.samples));
        }
        if self.experiment.uses_replicates() && self.replicates < 3 {
            return misconfigured(format!("need at least 3 replicates, found {}", self.replicates));
        }
        if self.bound_samples.is_some_and(|b| b < 2) {
            return misconfigured("need at least 2 bound samples");
        }
        Ok(())
    }

    /// The seed, drawing one from the clock if none is set.
    pub fn resolve_seed(&mut self) -> u64 {
        let seed = resolve_seed(self.seed);
        self.seed = Some(seed);
        seed
    }

    fn bound_samples(&self) -> usize {
        self.bound_samples.unwrap_or(self.samples)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn sha256(&self) -> String {
        let text = serde_json::to_string(self).expect("configs serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `seed`, or a fresh one from the clock.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        substream(nanos, &[tag("seed")]).next_u64()
    })
}

/// Outcome of comparing an empirical distance with a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundHolds,
    BoundVacuous,
    Violation,
    Inconclusive,
}

impl Verdict {
    /// Whether this verdict leaves the bound standing.
    pub fn acceptable(self) -> bool {
        self != Verdict::Violation
    }
}

/// Judges a bound against a bias-corrected empirical distance.
///
/// Violation needs `excess - 3 se > total` on a non-vacuous bound whose
/// side conditions hold. Near-vacuous bounds within `3 se` of the excess,
/// bounds with failed side conditions, and runs with no estimate are
/// inconclusive.
pub fn verdict(bound: &BoundReport, excess: Option<&EstimateWithError>) -> Verdict {
    if bound.vacuous {
        return Verdict::BoundVacuous;
    }
    let Some(e) = excess else {
        return Verdict::Inconclusive;
    };
    let band = STDERR_MULTIPLE * e.stderr;
    if !bound.valid() {
        return Verdict::Inconclusive;
    }
    if e.value - band > bound.total {
        return Verdict::Violation;
    }
    if bound.total >= NEAR_VACUOUS && (e.value - bound.total).abs() < band {
        return Verdict::Inconclusive;
    }
    Verdict::BoundHolds
}

/// Where a report was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

/// The result of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub theorem: String,
    /// The effective configuration, seed included.
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub bound: BoundReport,
    /// Further bounds for the same model, not used for the verdict.
    pub extra_bounds: Vec<BoundReport>,
    /// `d2`, count total variation, or an identity residual.
    pub metric: String,
    pub empirical: Option<EstimateWithError>,
    pub null_baseline: Option<EstimateWithError>,
    /// `empirical - null_baseline`, standard errors combined in quadrature.
    pub excess: Option<EstimateWithError>,
    pub verdict: Verdict,
    pub diagnostics: Vec<Diagnostic>,
    /// Example-specific records.
    pub details: Option<Value>,
    pub runtime_seconds: f64,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Flat rows `(report, theorem, quantity, value, stderr)`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["report", "theorem", "quantity", "value", "stderr"]).expect("in-memory write");
        let mut row = |report: &str, theorem: &str, q: &str, v: f64, se: f64| {
            w.write_record([report, theorem, q, &v.to_string(), &se.to_string()]).expect("in-memory write");
        };
        for (k, b) in std::iter::once(&self.bound).chain(&self.extra_bounds).enumerate() {
            let report = if k == 0 { "bound".to_string() } else { format!("extra{k}") };
            for t in &b.terms {
                row(&report, &b.theorem, &t.name, t.value, t.stderr);
            }
            row(&report, &b.theorem, "total", b.total, b.total_stderr);
            for d in &b.diagnostics {
                row(&report, &b.theorem, &d.name, d.value, 0.0);
            }
        }
        for (name, e) in [("empirical", &self.empirical), ("null_baseline", &self.null_baseline), ("excess", &self.excess)] {
            if let Some(e) = e {
                row(name, &self.theorem, &self.metric, e.value, e.stderr);
            }
        }
        for d in &self.diagnostics {
            row("diagnostic", &self.theorem, &d.name, d.value, 0.0);
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is UTF-8")
    }
}

/// Output encoding of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => invalid(format!("unknown format `{other}` (expected json|csv)")),
        }
    }
}

pub fn render_report(report: &VerificationReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

pub fn write_report(report: &VerificationReport, path: impl AsRef<Path>, format: Format) -> Result<()> {
    std::fs::write(path, render_report(report, format))?;
    Ok(())
}

/// Everything a kind-specific runner produces.
struct Outcome {
    bound: BoundReport,
    extra_bounds: Vec<BoundReport>,
    metric: &'static str,
    empirical: Option<EstimateWithError>,
    null_baseline: Option<EstimateWithError>,
    diagnostics: Vec<Diagnostic>,
    details: Option<Value>,
    /// Overrides the statistical verdict.
    verdict: Option<Verdict>,
}

impl Outcome {
    fn new(bound: BoundReport, metric: &'static str) -> Self {
        Self {
            bound,
            extra_bounds: Vec::new(),
            metric,
            empirical: None,
            null_baseline: None,
            diagnostics: Vec::new(),
            details: None,
            verdict: None,
        }
    }

    fn diagnostic(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.push(Diagnostic { name: name.into(), value });
        self
    }
}

fn excess_of(e: &EstimateWithError, null: Option<&EstimateWithError>) -> EstimateWithError {
    match null {
        None => *e,
        Some(n) => EstimateWithError {
            value: e.value - n.value,
            stderr: e.stderr.hypot(n.stderr),
            sample_count: e.sample_count,
        },
    }
}

/// Runs `cfg`, resolving its seed first.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    let seed = cfg.resolve_seed();
    let start = Instant::now();
    let out = match &cfg.experiment {
        Experiment::Matern { mu, r, d, geometry, grid } => run_matern(&cfg, seed, *mu, *r, *d, *geometry, *grid),
        Experiment::Occupancy { n, s, m, p } => run_occupancy(&cfg, seed, *n, *s, *m, p.clone()),
        Experiment::Palindrome { length, half, probs, fasta } => {
            run_palindrome(&cfg, seed, *length, *half, *probs, fasta.as_deref())
        }
        Experiment::MarkedTrials { weights, p, neighborhoods, mode, locally_dependent } => {
            run_marked_trials(&cfg, seed, weights.as_deref(), p.as_deref(), neighborhoods.clone(), *mode, *locally_dependent)
        }
        Experiment::SteinCheck { lambda, d, functional, matern_r } => {
            run_stein(&cfg, seed, *lambda, *d, functional, *matern_r)
        }
        Experiment::MetricsSelftest => Ok(run_metrics_selftest(seed)),
        Experiment::Reproduce { example, b, q } => run_reproduce(*example, *b, *q),
    }?;
    let excess = out.empirical.as_ref().map(|e| excess_of(e, out.null_baseline.as_ref()));
    let v = out.verdict.unwrap_or_else(|| verdict(&out.bound, excess.as_ref()));
    Ok(VerificationReport {
        experiment: cfg.experiment.kind().into(),
        theorem: out.bound.theorem.clone(),
        config_sha256: cfg.sha256(),
        seed,
        config: cfg,
        bound: out.bound,
        extra_bounds: out.extra_bounds,
        metric: out.metric.into(),
        empirical: out.empirical,
        null_baseline: out.null_baseline,
        excess,
        verdict: v,
        diagnostics: out.diagnostics,
        details: out.details,
        runtime_seconds: start.elapsed().as_secs_f64(),
        environment: Environment::current(),
    })
}

/// `count` draws, the `k`-th from substream `(seed, role, replicate, k)`.
fn draws<T, F>(seed: u64, role: &str, replicate: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    let label = tag(role);
    (0..count)
        .into_par_iter()
        .map(|k| f(&mut substream(seed, &[label, replicate as u64, k as u64])))
        .collect()
}

type Sampler<'a> = dyn Fn(&mut SimRng) -> Result<PointConfig> + Sync + 'a;

/// `d2` of target against Poisson, and of Poisson against an independent Poisson sample.
fn d2_with_null(
    cfg: &ExperimentConfig,
    seed: u64,
    target: &Sampler<'_>,
    poisson: &Sampler<'_>,
    g: &GroundDistance,
) -> Result<(EstimateWithError, EstimateWithError)> {
    let (n, r) = (cfg.samples, cfg.replicates);
    let mut a = Vec::with_capacity(r);
    let mut b = Vec::with_capacity(r);
    let mut c = Vec::with_capacity(r);
    for k in 0..r {
        a.push(draws(seed, "target", k, n, target)?);
        b.push(draws(seed, "poisson", k, n, poisson)?);
        c.push(draws(seed, "null", k, n, poisson)?);
    }
    Ok((estimate_d2(&a, &b, g)?, estimate_d2(&b, &c, g)?))
}

fn run_matern(cfg: &ExperimentConfig, seed: u64, mu: f64, r: f64, d: usize, geometry: Geometry, grid: usize) -> Result<Outcome> {
    let bound = matern_bound(mu, r, d, geometry, grid)?;
    let mm = matern_mean_measure(mu, r, d, geometry, grid)?;
    let target = move |rng: &mut SimRng| sample_matern(mu, r, d, geometry, rng).map(|(_, xi)| xi);
    let poisson = |rng: &mut SimRng| sample_poisson_process(&mm, rng);
    let (emp, null) = d2_with_null(cfg, seed, &target, &poisson, &GroundDistance::capped(geometry))?;
    let mut out = Outcome::new(bound, "d2").diagnostic("lambda", mm.total_mass());
    out.empirical = Some(emp);
    out.null_baseline = Some(null);
    Ok(out)
}

fn run_occupancy(cfg: &ExperimentConfig, seed: u64, n: usize, s: u64, m: u64, p: Option<Vec<f64>>) -> Result<Outcome> {
    let om = match p {
        Some(p) if p.len() != n => return misconfigured(format!("{} urn probabilities for n = {n}", p.len())),
        Some(p) => OccupancyModel::new(s, m, p)?,
        None => OccupancyModel::uniform(n, s, m)?,
    };
    let ob = occupancy_bound(&om)?;
    let atoms: Vec<(CarrierPoint, f64)> = om
        .pi()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (CarrierPoint::Real((i + 1) as f64 / n as f64), w))
        .collect();
    let mm = MeanMeasure::discrete(Carrier::Interval, atoms)?;
    let target = |rng: &mut SimRng| Ok(sample_occupancy(&om, rng).xi);
    let poisson = |rng: &mut SimRng| sample_poisson_process(&mm, rng);
    let (emp, null) = d2_with_null(cfg, seed, &target, &poisson, &GroundDistance::capped(Geometry::Box))?;
    let mut out = Outcome::new(ob.exact, "d2")
        .diagnostic("mu", ob.mu)
        .diagnostic("mu_prime", ob.mu_prime)
        .diagnostic("mean_minus_variance", ob.mean_minus_variance);
    out.extra_bounds.push(ob.explicit);
    out.empirical = Some(emp);
    out.null_baseline = Some(null);
    Ok(out)
}

/// Base frequencies of the called bases.
fn base_frequencies(seq: &[u8]) -> Result<[f64; 4]> {
    let mut counts = [0usize; 4];
    for &b in seq.iter().filter(|&&b| b < 4) {
        counts[b as usize] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return invalid("the sequence has no called bases");
    }
    Ok(counts.map(|c| c as f64 / total as f64))
}

fn run_palindrome(
    cfg: &ExperimentConfig,
    seed: u64,
    length: usize,
    half: usize,
    probs: Option<[f64; 4]>,
    fasta: Option<&Path>,
) -> Result<Outcome> {
    let observed = fasta.map(read_fasta).transpose()?;
    let (length, probs) = match &observed {
        Some(seq) => (seq.len(), probs.map_or_else(|| base_frequencies(seq), Ok)?),
        None => (length, probs.unwrap_or([0.25; 4])),
    };
    let pm = PalindromeModel::new(length, half, probs)?;
    let im = pm.indicator_model()?;
    let samples = cfg.bound_samples();
    let bound = tv_count_bound(&im, BoundMode::MonteCarlo(samples), &mut substream(seed, &[tag("bound")]))?;
    let pb = palindrome_bound(&pm, BoundMode::MonteCarlo(samples), &mut substream(seed, &[tag("b2")]))?;
    let lambda = pm.lambda();
    let mut out = Outcome::new(bound, "tv-counts")
        .diagnostic("lambda", lambda)
        .diagnostic("b1", pb.b1)
        .diagnostic("b2", pb.b2.value)
        .diagnostic("b2_stderr", pb.b2.stderr)
        .diagnostic("b2_cap", pb.b2_cap)
        .diagnostic("b2_exact", pb.b2_exact);
    out.extra_bounds.push(pb.main);
    out.extra_bounds.push(pb.crude);

    if let Some(seq) = observed {
        // a single sequence has no empirical law to compare
        let count = palindrome_indicators(&seq, half).iter().filter(|b| **b).count();
        out = out.diagnostic("observed_count", count as f64).diagnostic("z_score", (count as f64 - lambda) / lambda.sqrt());
        return Ok(out);
    }

    let counts = draws(seed, "target", 0, cfg.samples, |rng| {
        Ok(PalindromeSample::draw(&pm, rng).indicators.iter().filter(|b| **b).count())
    })?;
    let pmf = poisson_pmf(lambda);
    let emp = tv_counts_to_pmf(&counts, &pmf)?;
    let null_counts = draws(seed, "null", 0, cfg.samples, |rng| {
        let mm = MeanMeasure::discrete(Carrier::Discrete, vec![(CarrierPoint::Index(1), lambda)])?;
        Ok(sample_poisson_process(&mm, rng)?.len())
    })?;
    let null = tv_counts_to_pmf(&null_counts, &pmf)?;
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mean = EstimateWithError::from_replicates(&as_f64);
    out = out.diagnostic("mean_count", mean.value).diagnostic("mean_count_stderr", mean.stderr);
    out.empirical = Some(emp);
    out.null_baseline = Some(null);
    Ok(out)
}

fn marked_model(
    weights: Option<&[u64]>,
    p: Option<&[f64]>,
    neighborhoods: Option<Vec<Vec<usize>>>,
    locally_dependent: bool,
) -> Result<IndicatorModel> {
    let im = match (weights, p) {
        (Some(_), Some(_)) => return misconfigured("give either `weights` or `p`, not both"),
        (Some(w), None) => {
            let n = w.len().trailing_zeros() as usize;
            if w.len() != 1 << n {
                return misconfigured(format!("{} weights is not a power of two", w.len()));
            }
            let nb = neighborhoods.unwrap_or_else(|| (0..n).map(|i| vec![i]).collect());
            IndicatorModel::from_pmf(JointPmf::from_weights(n, w.to_vec())?, nb)?
        }
        (None, p) => {
            let p = p.map_or_else(|| vec![0.1; 10], <[f64]>::to_vec);
            match neighborhoods {
                None => IndicatorModel::independent(p)?,
                Some(nb) => {
                    let law = std::sync::Arc::new(IndependentLaw::new(p.clone())?);
                    IndicatorModel::new(p, nb, law)?.assume_locally_dependent()
                }
            }
        }
    };
    Ok(if locally_dependent { im.assume_locally_dependent() } else { im })
}

fn run_marked_trials(
    cfg: &ExperimentConfig,
    seed: u64,
    weights: Option<&[u64]>,
    p: Option<&[f64]>,
    neighborhoods: Option<Vec<Vec<usize>>>,
    mode: ModeSpec,
    locally_dependent: bool,
) -> Result<Outcome> {
    let im = marked_model(weights, p, neighborhoods, locally_dependent)?;
    let mode = match mode {
        ModeSpec::Exact => BoundMode::Exact,
        ModeSpec::MonteCarlo => BoundMode::MonteCarlo(cfg.bound_samples()),
    };
    let bound = d2_bound_marked_trials_with(&im, mode, false, &mut substream(seed, &[tag("bound")]))?;
    let n = im.n();
    let atoms: Vec<(CarrierPoint, f64)> = im
        .p()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (CarrierPoint::Real((i + 1) as f64 / n as f64), w))
        .collect();
    let mm = MeanMeasure::discrete(Carrier::Interval, atoms)?;
    let target = |rng: &mut SimRng| Ok(grid_config(&im.sample(rng)));
    let poisson = |rng: &mut SimRng| sample_poisson_process(&mm, rng);
    let (emp, null) = d2_with_null(cfg, seed, &target, &poisson, &GroundDistance::capped(Geometry::Box))?;
    let mut out = Outcome::new(bound, "d2").diagnostic("lambda", im.lambda());
    out.empirical = Some(emp);
    out.null_baseline = Some(null);
    Ok(out)
}

fn run_stein(cfg: &ExperimentConfig, seed: u64, lambda: f64, d: usize, functional: &FunctionalSpec, matern_r: Option<f64>) -> Result<Outcome> {
    let h = functional.functional();
    let mut rng = substream(seed, &[tag("stein")]);
    let (residual, process) = match matern_r {
        None => {
            let mm = MeanMeasure::uniform(d, Geometry::Box, lambda)?;
            let res = check_stein_identity_with(|r: &mut SimRng| sample_poisson_process(&mm, r), &mm, &h, cfg.samples, &mut rng)?;
            (res, "poisson")
        }
        Some(r) => {
            let mm = matern_mean_measure(lambda, r, d, Geometry::Box, default_grid())?;
            let sampler = |rng: &mut SimRng| sample_matern(lambda, r, d, Geometry::Box, rng).map(|(_, xi)| xi);
            (check_stein_identity_with(sampler, &mm, &h, cfg.samples, &mut rng)?, "matern")
        }
    };
    let bound = BoundReport::new("stein-identity", vec![Term::exact("residual", 0.0)], &[]);
    let mut out = Outcome::new(bound, "stein-residual").diagnostic("signed_residual", residual.value);
    out.empirical = Some(EstimateWithError { value: residual.value.abs(), ..residual });
    out.details = Some(serde_json::json!({ "process": process }));
    Ok(out)
}

fn run_metrics_selftest(seed: u64) -> Outcome {
    let summary = selftest(seed, None);
    let metric_suites: Vec<&SuiteResult> =
        summary.suites.iter().filter(|s| s.name == "assignment" || s.name == "metric-axioms").collect();
    let failures = metric_suites.iter().map(|s| s.failures).sum::<usize>();
    let bound = BoundReport::new("metric-axioms", vec![Term::exact("failures", 0.0)], &[]);
    let mut out = Outcome::new(bound, "failures");
    out.empirical = Some(EstimateWithError::exact(failures as f64));
    out.details = Some(serde_json::to_value(&metric_suites).expect("summaries serialize"));
    out.verdict = Some(if failures == 0 { Verdict::BoundHolds } else { Verdict::Violation });
    out
}

fn run_reproduce(example: Example, b: f64, q: f64) -> Result<Outcome> {
    let (bound, details, ok) = match example {
        Example::Remark => {
            let r = reproduce_remark_3_7();
            let bound = BoundReport::new(
                "remark-3.7",
                vec![Term::exact("joint", r.joint), Term::exact("factorized", r.factorized)],
                &["joint", "factorized"],
            );
            let ok = r.differ;
            (bound, serde_json::to_value(&r)?, ok)
        }
        Example::Counterexample => {
            let r = reproduce_counterexample_4_7(b, q)?;
            let bound = BoundReport::new(
                "counterexample-4.7",
                vec![Term::exact("conditional", r.conditional), Term::exact("unconditional", r.unconditional)],
                &["conditional", "unconditional"],
            );
            let expected = (q * q).total_cmp(&(b * q * q)).into();
            let ok = r.direction == expected;
            (bound, serde_json::to_value(&r)?, ok)
        }
    };
    let mut out = Outcome::new(bound, "exact");
    out.details = Some(details);
    out.verdict = Some(if ok { Verdict::BoundHolds } else { Verdict::Violation });
    Ok(out)
}

/// `E[1/(S + 1)]` for the occupancy count by simulation, with its standard error.
pub fn occupancy_inverse_moment<R: RngCore>(om: &OccupancyModel, samples: usize, rng: &mut R) -> Result<EstimateWithError> {
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| 1.0 / (sample_occupancy(om, &mut substream(seed, &[k as u64])).xi.len() as f64 + 1.0))
        .collect();
    Ok(EstimateWithError::from_replicates(&values))
}

/// Total variation between the count law at time `t` of an immigration-death
/// process started empty and `Po(lambda (1 - e^{-t}))`.
pub fn immigration_death_tv(lambda: f64, t: f64, samples: usize, seed: u64) -> Result<EstimateWithError> {
    let mm = MeanMeasure::uniform(1, Geometry::Box, lambda)?;
    let empty = PointConfig::empty(Carrier::Interval);
    let counts: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|k| crate::processes::sample_immigration_death(&empty, &mm, t, &mut substream(seed, &[k as u64])).map(|c| c.len()))
        .collect::<Result<_>>()?;
    tv_counts_to_pmf(&counts, &poisson_pmf(lambda * -(-t).exp_m1()))
}
