//! Distances between configurations and between laws of point processes.
//!
//! `rho1` and `rho1_dd` compare two configurations through an optimal
//! matching of their points under a ground distance. Laws are compared
//! from samples: the empirical `d2` is the optimal transport cost between
//! two empirical measures with `rho1` as ground cost, which for equal
//! sample counts is again an assignment problem.

mod assignment;

pub use assignment::{assignment_solve, CostMatrix, Matching};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carrier::{CarrierPoint, Geometry, GroundDistance, PointConfig};
use crate::error::{invalid, Result};
use crate::special::{kahan_sum, mean_stderr};

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub stderr: f64,
    pub sample_count: usize,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, sample_count: 1 }
    }

    /// Mean and standard error of replicate values.
    pub fn from_replicates(values: &[f64]) -> Self {
        let (value, stderr) = mean_stderr(values);
        Self { value, stderr, sample_count: values.len() }
    }

    /// `|value| <= k * stderr`.
    pub fn consistent_with_zero(&self, k: f64) -> bool {
        self.value.abs() <= k * self.stderr
    }
}

fn check_pair(a: &PointConfig, b: &PointConfig, g: &GroundDistance) -> Result<()> {
    if a.carrier() != b.carrier() {
        return invalid(format!("carrier mismatch: {:?} vs {:?}", a.carrier(), b.carrier()));
    }
    g.check_carrier(a.carrier())
}

fn is_real_1d(p: &CarrierPoint) -> bool {
    matches!(p, CarrierPoint::Real(_))
}

/// Minimum matching cost of the smaller configuration into the larger.
/// Carriers must already be validated.
fn matching_cost(a: &PointConfig, b: &PointConfig, g: &GroundDistance) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() || matches!(g, GroundDistance::Zero) {
        return 0.0;
    }
    // On the interval with the plain metric, the monotone matching is optimal.
    if small.len() == large.len()
        && matches!(g, GroundDistance::CappedEuclidean { geometry: Geometry::Box })
        && is_real_1d(&small.points()[0])
    {
        let mut xs: Vec<f64> = small.points().iter().map(|p| p.coords()[0]).collect();
        let mut ys: Vec<f64> = large.points().iter().map(|p| p.coords()[0]).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        return kahan_sum(xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()));
    }
    let cost = CostMatrix::from_fn(small.len(), large.len(), |i, j| {
        g.eval_unchecked(&small.points()[i], &large.points()[j])
    })
    .expect("ground distances are finite and nonnegative");
    assignment_solve(&cost).expect("rows never exceed columns").cost
}

/// `rho1`: 1 for different total masses, otherwise the mean matched ground distance.
pub fn rho1(xi1: &PointConfig, xi2: &PointConfig, g: &GroundDistance) -> Result<f64> {
    check_pair(xi1, xi2, g)?;
    Ok(rho1_unchecked(xi1, xi2, g))
}

fn rho1_unchecked(xi1: &PointConfig, xi2: &PointConfig, g: &GroundDistance) -> f64 {
    if xi1.len() != xi2.len() {
        return 1.0;
    }
    if xi1.is_empty() {
        return 0.0;
    }
    (matching_cost(xi1, xi2, g) / xi1.len() as f64).min(1.0)
}

/// `rho1''`: minimum matching cost plus the difference in total mass.
pub fn rho1_dd(xi1: &PointConfig, xi2: &PointConfig, g: &GroundDistance) -> Result<f64> {
    check_pair(xi1, xi2, g)?;
    let extra = xi1.len().abs_diff(xi2.len()) as f64;
    Ok(matching_cost(xi1, xi2, g) + extra)
}

/// Total variation distance `½ Σ |p(k) - q(k)|` between two pmfs on `0, 1, 2, ...`.
///
/// Both inputs must sum to 1 within `1e-9`; mass beyond the listed support
/// is taken as zero.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    for (name, pmf) in [("p", p), ("q", q)] {
        if pmf.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return invalid(format!("pmf {name} has negative or non-finite entries"));
        }
        let total = kahan_sum(pmf.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("pmf {name} sums to {total}, not 1"));
        }
    }
    let len = p.len().max(q.len());
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    Ok((0.5 * kahan_sum((0..len).map(|k| (at(p, k) - at(q, k)).abs()))).min(1.0))
}

/// Empirical pmf of configuration sizes.
pub fn count_pmf(samples: &[PointConfig]) -> Vec<f64> {
    pmf_of_counts(&samples.iter().map(PointConfig::len).collect::<Vec<_>>())
}

pub fn pmf_of_counts(counts: &[usize]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &c in counts {
        hist[c] += 1;
    }
    let n = counts.len().max(1) as f64;
    hist.into_iter().map(|h| h as f64 / n).collect()
}

/// Plug-in total variation between the empirical pmf of `counts` and an exact pmf.
///
/// The reported error is `½ Σ_k sqrt(p̂_k (1 - p̂_k) / N)`, the root-mean-square
/// scale of `½ ||p̂ - p||₁`, which bounds the plug-in's deviation from the
/// true distance by the triangle inequality.
pub fn tv_counts_to_pmf(counts: &[usize], pmf: &[f64]) -> Result<EstimateWithError> {
    if counts.is_empty() {
        return invalid("no samples");
    }
    let empirical = pmf_of_counts(counts);
    let value = tv_distance(&empirical, pmf)?;
    let n = counts.len() as f64;
    let stderr = 0.5 * kahan_sum(empirical.iter().map(|p| (p * (1.0 - p) / n).sqrt()));
    Ok(EstimateWithError { value, stderr, sample_count: counts.len() })
}

/// Optimal-transport cost between two equally sized empirical laws with ground cost `rho1`.
pub fn empirical_d2(samples1: &[PointConfig], samples2: &[PointConfig], g: &GroundDistance) -> Result<f64> {
    if samples1.is_empty() || samples2.is_empty() {
        return invalid("empty sample list");
    }
    if samples1.len() != samples2.len() {
        return invalid(format!(
            "sample counts differ ({} vs {}); pad the smaller side first",
            samples1.len(),
            samples2.len()
        ));
    }
    let carrier = samples1[0].carrier();
    for s in samples1.iter().chain(samples2) {
        if s.carrier() != carrier {
            return invalid("samples live on different carriers");
        }
    }
    g.check_carrier(carrier)?;
    let n = samples1.len();
    let rows: Vec<Vec<f64>> = samples1
        .par_iter()
        .map(|a| samples2.iter().map(|b| rho1_unchecked(a, b, g)).collect())
        .collect();
    let cost = CostMatrix::new(n, n, rows.concat())?;
    Ok((assignment_solve(&cost)?.cost / n as f64).clamp(0.0, 1.0))
}

/// Empirical `d2` averaged over replicate pairs, with the replicate standard error.
pub fn estimate_d2(
    samples1: &[Vec<PointConfig>],
    samples2: &[Vec<PointConfig>],
    g: &GroundDistance,
) -> Result<EstimateWithError> {
    if samples1.is_empty() || samples1.len() != samples2.len() {
        return invalid("need the same positive number of replicates on both sides");
    }
    let values = samples1
        .iter()
        .zip(samples2)
        .map(|(a, b)| empirical_d2(a, b, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateWithError::from_replicates(&values))
}

/// Total variation between the empirical size distributions of two equal-size samples.
fn count_tv_exact(samples1: &[PointConfig], samples2: &[PointConfig]) -> f64 {
    let max = samples1.iter().chain(samples2).map(PointConfig::len).max().unwrap_or(0);
    let mut a = vec![0usize; max + 1];
    let mut b = vec![0usize; max + 1];
    samples1.iter().for_each(|s| a[s.len()] += 1);
    samples2.iter().for_each(|s| b[s.len()] += 1);
    let overlap: usize = a.iter().zip(&b).map(|(x, y)| *x.min(y)).sum();
    (samples1.len() - overlap) as f64 / samples1.len() as f64
}

/// Mean over replicates of the total variation between empirical size laws.
///
/// This is the empirical `d2` under the zero ground distance, and a lower
/// bound for it under any other ground distance.
pub fn d2_lower_bound_counts(samples1: &[Vec<PointConfig>], samples2: &[Vec<PointConfig>]) -> Result<f64> {
    if samples1.is_empty() || samples1.len() != samples2.len() {
        return invalid("need the same positive number of replicates on both sides");
    }
    let mut values = Vec::with_capacity(samples1.len());
    for (a, b) in samples1.iter().zip(samples2) {
        if a.is_empty() || a.len() != b.len() {
            return invalid("replicates must be nonempty and of equal size");
        }
        values.push(count_tv_exact(a, b));
    }
    Ok(mean_stderr(&values).0)
}
