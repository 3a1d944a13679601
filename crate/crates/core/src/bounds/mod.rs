//! Error bounds for Poisson process approximation, itemized as [`BoundReport`]s.

mod indicators;
mod models;

pub use indicators::{d2_bound_marked_trials, d2_bound_marked_trials_with, d2_bound_negrel, tv_count_bound, BoundMode};
pub use models::{matern_bound, mu_prime, mu_prime_brute_force, occupancy_bound, palindrome_bound, OccupancyBound, PalindromeBound};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One named nonnegative term of a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    /// Monte-Carlo standard error; 0 for exact terms.
    pub stderr: f64,
}

impl Term {
    pub fn exact(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, stderr: 0.0 }
    }

    pub fn estimated(name: &str, value: f64, stderr: f64) -> Self {
        Self { name: name.into(), value, stderr }
    }
}

/// A named side condition of a bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub holds: bool,
}

/// A named quantity reported alongside a bound but not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

/// An evaluated bound: the terms, how they combine, and its side conditions.
///
/// The total is the sum of the terms outside `min_group` plus the smallest
/// term inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    pub terms: Vec<Term>,
    pub min_group: Vec<String>,
    pub total: f64,
    pub total_stderr: f64,
    pub flags: Vec<Flag>,
    pub vacuous: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl BoundReport {
    pub fn new(theorem: &str, terms: Vec<Term>, min_group: &[&str]) -> Self {
        let mut out = Self {
            theorem: theorem.into(),
            terms,
            min_group: min_group.iter().map(|s| s.to_string()).collect(),
            total: 0.0,
            total_stderr: 0.0,
            flags: Vec::new(),
            vacuous: false,
            diagnostics: Vec::new(),
        };
        let (total, se) = out.combine();
        out.total = total;
        out.total_stderr = se;
        out.vacuous = !(total < 1.0);
        out
    }

    pub fn with_flag(mut self, name: &str, holds: bool) -> Self {
        self.flags.push(Flag { name: name.into(), holds });
        self
    }

    pub fn with_diagnostic(mut self, name: &str, value: f64) -> Self {
        self.diagnostics.push(Diagnostic { name: name.into(), value });
        self
    }

    fn combine(&self) -> (f64, f64) {
        let mut total = 0.0;
        let mut var = 0.0;
        let mut best: Option<&Term> = None;
        for t in &self.terms {
            if self.min_group.contains(&t.name) {
                if best.map_or(true, |b| t.value < b.value) {
                    best = Some(t);
                }
            } else {
                total += t.value;
                var += t.stderr * t.stderr;
            }
        }
        if let Some(b) = best {
            total += b.value;
            var += b.stderr * b.stderr;
        }
        (total, var.sqrt())
    }

    /// The total recomputed from the terms.
    pub fn recombine(&self) -> f64 {
        self.combine().0
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|d| d.name == name).map(|d| d.value)
    }

    /// Whether every side condition holds.
    pub fn valid(&self) -> bool {
        self.flags.iter().all(|f| f.holds)
    }
}

/// Stein factors of `Po(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinFactors {
    pub lambda: f64,
    /// `(1 - e^{-lambda}) / lambda`.
    pub tv: f64,
    /// `1 ∧ sqrt(2 / (e lambda))`.
    pub tv_sup: f64,
    /// `1 ∧ 1.65 lambda^{-1/2}`.
    pub d2_sup: f64,
}

impl SteinFactors {
    /// `5/lambda + 3/(n + 1)`.
    pub fn first_difference(&self, n: f64) -> f64 {
        5.0 / self.lambda + 3.0 / (n + 1.0)
    }
}

pub fn stein_factors(lambda: f64) -> Result<SteinFactors> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return invalid(format!("lambda must be positive, found {lambda}"));
    }
    Ok(SteinFactors {
        lambda,
        tv: negrel_inverse_moment(lambda)?,
        tv_sup: (2.0 / (std::f64::consts::E * lambda)).sqrt().min(1.0),
        d2_sup: (1.65 / lambda.sqrt()).min(1.0),
    })
}

/// `(sqrt(kappa (1 + kappa/4)) + 1 + kappa/2) / E X` with `kappa = Var X / E X`, bounding `E(1/X)` for `X >= 1`.
pub fn inverse_moment_bound(mean: f64, var: f64) -> Result<f64> {
    if !(mean >= 1.0 && mean.is_finite()) {
        return invalid(format!("mean must be at least 1, found {mean}"));
    }
    if !(var >= 0.0 && var.is_finite()) {
        return invalid(format!("variance must be nonnegative, found {var}"));
    }
    let kappa = var / mean;
    Ok(((kappa * (1.0 + kappa / 4.0)).sqrt() + 1.0 + kappa / 2.0) / mean)
}

/// `(1 - e^{-lambda}) / lambda`, bounding `E 1/(S + 1)` for negatively related indicator sums.
pub fn negrel_inverse_moment(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be nonnegative, found {lambda}"));
    }
    if lambda < 1e-8 {
        return Ok(1.0 - lambda / 2.0);
    }
    Ok(-(-lambda).exp_m1() / lambda)
}
