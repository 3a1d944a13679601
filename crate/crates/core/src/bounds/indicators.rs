//! Bounds for dependent indicator families: the `d_2` bound with its two
//! error alternatives, the negatively related form, and the count bound.

use rand::RngCore;
use rayon::prelude::*;

use super::{stein_factors, BoundReport, SteinFactors, Term};
use crate::error::{invalid, misconfigured, Result};
use crate::metrics::EstimateWithError;
use crate::palm::{epsilon1_exact, palm_expectation};
use crate::processes::{IndicatorModel, JointPmf};
use crate::rng::substream;

/// How expectations inside a bound are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Enumeration of the exact pmf (at most 20 trials).
    Exact,
    /// Monte Carlo with the given number of draws (per focal trial for Palm terms).
    MonteCarlo(usize),
}

fn exact_expect<F: Fn(&[bool]) -> f64 + Sync>(pmf: &JointPmf, f: F) -> f64 {
    let total = pmf.total() as f64;
    let parts: Vec<f64> = pmf
        .weights()
        .par_iter()
        .enumerate()
        .filter(|(_, w)| **w > 0)
        .map(|(m, &w)| w as f64 / total * f(&pmf.bits(m)))
        .collect();
    parts.iter().sum()
}

fn mc_expect<R, F>(im: &IndicatorModel, samples: usize, rng: &mut R, f: F) -> Result<EstimateWithError>
where
    R: RngCore,
    F: Fn(&[bool]) -> f64 + Sync,
{
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| f(&im.sample(&mut substream(seed, &[s as u64]))))
        .collect();
    Ok(EstimateWithError::from_replicates(&values))
}

fn expect<R, F>(im: &IndicatorModel, mode: BoundMode, rng: &mut R, name: &str, f: F) -> Result<Term>
where
    R: RngCore,
    F: Fn(&[bool]) -> f64 + Sync,
{
    match mode {
        BoundMode::Exact => {
            let Some(pmf) = im.exact_pmf() else {
                return misconfigured("exact mode needs an exact pmf");
            };
            Ok(Term::exact(name, exact_expect(pmf, f)))
        }
        BoundMode::MonteCarlo(n) => {
            let e = mc_expect(im, n, rng, f)?;
            Ok(Term::estimated(name, e.value, e.stderr))
        }
    }
}

/// `sum_i p_i E f(i, I, J_{.i})`, exactly from the coupling law or by Monte Carlo.
fn palm_term<R, F>(im: &IndicatorModel, mode: BoundMode, rng: &mut R, name: &str, f: F) -> Result<Option<Term>>
where
    R: RngCore,
    F: Fn(usize, &[bool], &[bool]) -> f64 + Sync,
{
    match mode {
        BoundMode::Exact => {
            let mut total = 0.0;
            for i in 0..im.n() {
                let Some(law) = im.coupling_law(i) else {
                    return Ok(None);
                };
                let n = im.n();
                let bits = |m: usize| -> Vec<bool> { (0..n).map(|j| m >> j & 1 == 1).collect() };
                let e: f64 = law.iter().map(|&(x, y, q)| q * f(i, &bits(x), &bits(y))).sum();
                total += im.p()[i] * e;
            }
            Ok(Some(Term::exact(name, total)))
        }
        BoundMode::MonteCarlo(n) => {
            if !im.has_coupler() {
                return Ok(None);
            }
            let e = palm_expectation(im, n, rng, f)?;
            Ok(Some(Term::estimated(name, e.value, e.stderr)))
        }
    }
}

/// `sum_j E g(j, J_{.j})` over Palm laws at each `j`, where `g` already carries the factor `p_j`.
fn conditional_term<R, F>(im: &IndicatorModel, mode: BoundMode, rng: &mut R, name: &str, g: F) -> Result<Term>
where
    R: RngCore,
    F: Fn(usize, &[bool]) -> f64 + Sync,
{
    match mode {
        BoundMode::Exact => {
            let Some(pmf) = im.exact_pmf() else {
                return misconfigured("exact mode needs an exact pmf");
            };
            let total = pmf.total() as f64;
            let mut acc = 0.0;
            for (m, &w) in pmf.weights().iter().enumerate() {
                if w == 0 {
                    continue;
                }
                let bits = pmf.bits(m);
                for j in (0..im.n()).filter(|&j| bits[j]) {
                    // P(mask | I_j = 1) p_j = P(mask)
                    acc += w as f64 / total * g(j, &bits) / im.p()[j];
                }
            }
            Ok(Term::exact(name, acc))
        }
        BoundMode::MonteCarlo(n) => {
            let e = palm_expectation(im, n, rng, |j, _, palm| g(j, palm) / im.p()[j])?;
            Ok(Term::estimated(name, e.value, e.stderr))
        }
    }
}

/// `j -> {i : j ∈ A_i}`.
fn reverse_neighborhoods(im: &IndicatorModel) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); im.n()];
    for i in 0..im.n() {
        for &j in im.neighborhood(i) {
            out[j].push(i);
        }
    }
    out
}

fn require_positive(im: &IndicatorModel) -> Result<SteinFactors> {
    if let Some(j) = im.p().iter().position(|&p| p == 0.0) {
        return invalid(format!("trial {j} has probability 0; conditional terms are undefined"));
    }
    stein_factors(im.lambda())
}

/// `sum_{j ∈ A_i, j != i} I_i I_j` weighted per trial.
fn cluster_sum(im: &IndicatorModel, bits: &[bool], weight: impl Fn(usize, &[bool]) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in (0..bits.len()).filter(|&i| bits[i]) {
        let pairs = im.neighborhood(i).iter().filter(|&&j| j != i && bits[j]).count();
        if pairs > 0 {
            acc += pairs as f64 * weight(i, bits);
        }
    }
    acc
}

/// The `d_2` bound for marked dependent trials.
pub fn d2_bound_marked_trials<R: RngCore>(im: &IndicatorModel, mode: BoundMode, rng: &mut R) -> Result<BoundReport> {
    d2_bound_marked_trials_with(im, mode, false, rng)
}

/// As [`d2_bound_marked_trials`]; with `shortcut` set and a locally dependent
/// model, the conditional expectation in the last term is replaced by
/// `E[1/(V_ij + 1)]`, `V_ij = sum_{k not in A_i ∪ A_j} I_k`.
pub fn d2_bound_marked_trials_with<R: RngCore>(
    im: &IndicatorModel,
    mode: BoundMode,
    shortcut: bool,
    rng: &mut R,
) -> Result<BoundReport> {
    let sf = require_positive(im)?;
    let lambda = sf.lambda;
    let p = im.p();

    let clustering = expect(im, mode, rng, "clustering", |bits| {
        cluster_sum(im, bits, |i, b| sf.first_difference(im.outside_sum(b, i) as f64))
    })?;

    let mut terms = vec![clustering];
    let mut group = Vec::new();
    if im.is_locally_dependent() {
        terms.push(Term::exact("epsilon1", 0.0));
        group.push("epsilon1");
    } else {
        if im.exact_pmf().is_some() {
            terms.push(Term::exact("epsilon1", sf.d2_sup * epsilon1_exact(im)?));
            group.push("epsilon1");
        }
        let eps2 = palm_term(im, mode, rng, "epsilon2", |i, base, palm| {
            let (mut v, mut w, mut diff) = (0usize, 0usize, 0usize);
            for j in (0..base.len()).filter(|&j| !im.in_neighborhood(i, j)) {
                v += usize::from(base[j]);
                w += usize::from(palm[j]);
                diff += usize::from(base[j] != palm[j]);
            }
            if diff == 0 {
                0.0
            } else {
                sf.first_difference(v.min(w) as f64) * diff as f64
            }
        })?;
        if let Some(t) = eps2 {
            terms.push(t);
            group.push("epsilon2");
        }
        if group.is_empty() {
            return misconfigured("neither epsilon term is computable: the model has no exact pmf and no Palm coupler");
        }
    }

    let use_shortcut = shortcut && im.is_locally_dependent();
    let neighbourhood = if use_shortcut {
        expect(im, mode, rng, "neighbourhood", |bits| {
            let mut acc = 0.0;
            for i in 0..im.n() {
                for &j in im.neighborhood(i) {
                    let v_ij = (0..bits.len())
                        .filter(|&k| bits[k] && !im.in_neighborhood(i, k) && !im.in_neighborhood(j, k))
                        .count();
                    acc += sf.first_difference(v_ij as f64) * p[i] * p[j];
                }
            }
            acc
        })?
    } else {
        let reverse = reverse_neighborhoods(im);
        conditional_term(im, mode, rng, "neighbourhood", |j, palm| {
            reverse[j].iter().map(|&i| p[i] * p[j] * sf.first_difference(im.outside_sum(palm, i) as f64)).sum()
        })?
    };
    terms.push(neighbourhood);

    Ok(BoundReport::new("marked-trials-d2", terms, &group)
        .with_flag("locally dependent shortcut", use_shortcut || !shortcut)
        .with_diagnostic("lambda", lambda))
}

/// The `d_2` bound for negatively related indicators with a monotone coupler.
pub fn d2_bound_negrel<R: RngCore>(im: &IndicatorModel, samples: usize, rng: &mut R) -> Result<BoundReport> {
    if !im.relation().is_negative() {
        return misconfigured(format!("the {} law is not declared negatively related", im.law_name()));
    }
    if !im.has_coupler() {
        return misconfigured("the negatively related bound needs a Palm coupler");
    }
    let lambda = im.lambda();
    let sf = stein_factors(lambda)?;
    let p = im.p();
    let seed = rng.next_u64();
    let factor = |i: usize, palm: &[bool]| {
        let w = palm.iter().enumerate().filter(|&(j, &b)| j != i && b).count();
        sf.first_difference(w as f64)
    };
    let squared =
        palm_expectation(im, samples, &mut substream(seed, &[0]), |i, _, palm| factor(i, palm) * p[i])?;
    let coupling = palm_expectation(im, samples, &mut substream(seed, &[0]), |i, base, palm| {
        let gap: i64 = (0..base.len()).filter(|&j| j != i).map(|j| i64::from(base[j]) - i64::from(palm[j])).sum();
        factor(i, palm) * gap as f64
    })?;
    Ok(BoundReport::new(
        "negatively-related-d2",
        vec![
            Term::estimated("squared", squared.value, squared.stderr),
            Term::estimated("coupling", coupling.value, coupling.stderr),
        ],
        &[],
    )
    .with_diagnostic("lambda", lambda))
}

/// Total variation bound between the count `|Xi|` and `Po(lambda)`.
pub fn tv_count_bound<R: RngCore>(im: &IndicatorModel, mode: BoundMode, rng: &mut R) -> Result<BoundReport> {
    let lambda = im.lambda();
    let sf = stein_factors(lambda)?;
    let p = im.p();
    let clustering = expect(im, mode, rng, "clustering", |bits| sf.tv * cluster_sum(im, bits, |_, _| 1.0))?;
    let mut terms = vec![clustering];
    let mut group = Vec::new();
    if im.is_locally_dependent() {
        terms.push(Term::exact("epsilon1", 0.0));
        group.push("epsilon1");
    } else {
        if im.exact_pmf().is_some() {
            terms.push(Term::exact("epsilon1", sf.tv_sup * epsilon1_exact(im)?));
            group.push("epsilon1");
        }
        let eps2 = palm_term(im, mode, rng, "epsilon2", |i, base, palm| {
            sf.tv * (im.outside_sum(base, i) as f64 - im.outside_sum(palm, i) as f64).abs()
        })?;
        if let Some(t) = eps2 {
            terms.push(t);
            group.push("epsilon2");
        }
        if group.is_empty() {
            return misconfigured("neither epsilon term is computable: the model has no exact pmf and no Palm coupler");
        }
    }
    let b1: f64 = (0..im.n()).map(|i| im.neighborhood(i).iter().map(|&j| p[i] * p[j]).sum::<f64>()).sum();
    terms.push(Term::exact("neighbourhood", sf.tv * b1));
    Ok(BoundReport::new("count-tv", terms, &group).with_diagnostic("lambda", lambda).with_diagnostic("b1", b1))
}
