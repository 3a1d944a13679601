//! Palm couplings for indicator models, the conditional intensity `G`, and
//! identity checks that validate samplers against the Poisson generator.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::carrier::{CarrierPoint, PointConfig};
use crate::error::{invalid, Result};
use crate::metrics::EstimateWithError;
use crate::processes::{sample_poisson_process, IndicatorModel, JointPmf, MeanMeasure};
use crate::rng::{substream, SimRng};
use crate::special::RunningStats;

/// Attempts allowed to the rejection fallback for one Palm draw.
pub const REJECTION_CAP: u64 = 1_000_000;

/// How a Palm draw was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PalmMethod {
    Coupling,
    ExactConditional,
    Rejection,
}

/// Base indicators `I` and Palm indicators `J_{.i}` for focal trial `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmSample {
    pub focal: usize,
    pub base: Vec<bool>,
    pub palm: Vec<bool>,
    pub method: PalmMethod,
}

/// Draws `(I, J_{.i})`: through the model's coupler when it has one, else by
/// exact conditioning on the pmf, else by rejection with an independent base.
pub fn palm_sample<R: RngCore>(im: &IndicatorModel, i: usize, rng: &mut R) -> Result<PalmSample> {
    if i >= im.n() {
        return invalid(format!("focal trial {i} out of range for {} trials", im.n()));
    }
    if im.has_coupler() {
        let (base, palm) = im.couple(i, rng)?;
        return Ok(PalmSample { focal: i, base, palm, method: PalmMethod::Coupling });
    }
    let base = im.sample(rng);
    if let Some(pmf) = im.exact_pmf() {
        let palm = conditional_draw(pmf, i, rng)?;
        return Ok(PalmSample { focal: i, base, palm, method: PalmMethod::ExactConditional });
    }
    for _ in 0..REJECTION_CAP {
        let palm = im.sample(rng);
        if palm[i] {
            return Ok(PalmSample { focal: i, base, palm, method: PalmMethod::Rejection });
        }
    }
    Err(crate::Error::Resource(format!(
        "rejection sampler for the Palm law at trial {i} found no draw with I_i = 1 in {REJECTION_CAP} attempts (p_i = {:.3e})",
        im.p()[i]
    )))
}

fn conditional_draw<R: RngCore>(pmf: &JointPmf, i: usize, rng: &mut R) -> Result<Vec<bool>> {
    let total = pmf.weight_of_one(i);
    if total == 0 {
        return invalid(format!("trial {i} has probability 0"));
    }
    let u = rng.random_range(0..total);
    let mut acc = 0u64;
    for (mask, &w) in pmf.weights().iter().enumerate() {
        if mask >> i & 1 == 1 {
            acc += w;
            if u < acc {
                return Ok(pmf.bits(mask));
            }
        }
    }
    unreachable!("weights with bit {i} sum to {total}")
}

/// `V_i = sum_{j not in A_i} I_j` and, for a Palm sample, `sum_{j not in A_i} J_{ji}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedPalm {
    pub base_outside: usize,
    pub palm_outside: Option<usize>,
}

pub fn reduced_palm(im: &IndicatorModel, i: usize, base: &[bool], palm: Option<&[bool]>) -> ReducedPalm {
    ReducedPalm { base_outside: im.outside_sum(base, i), palm_outside: palm.map(|j| im.outside_sum(j, i)) }
}

/// The reduced configuration `xi|_{A_i^c}` of an indicator vector on the grid `{(j+1)/n}`.
pub fn reduced_config(im: &IndicatorModel, i: usize, bits: &[bool]) -> PointConfig {
    let outside: Vec<bool> = bits.iter().enumerate().map(|(j, &b)| b && !im.in_neighborhood(i, j)).collect();
    crate::processes::grid_config(&outside)
}

/// Weights of each outside pattern: `o -> (P(o), P(o, I_i = 1))` in pmf units.
fn outside_table(im: &IndicatorModel, pmf: &JointPmf, i: usize) -> HashMap<usize, (u64, u64)> {
    let out_mask = (0..im.n()).filter(|&j| !im.in_neighborhood(i, j)).fold(0usize, |m, j| m | 1 << j);
    let mut table: HashMap<usize, (u64, u64)> = HashMap::new();
    for (mask, &w) in pmf.weights().iter().enumerate() {
        let e = table.entry(mask & out_mask).or_default();
        e.0 += w;
        if mask >> i & 1 == 1 {
            e.1 += w;
        }
    }
    table
}

fn outside_mask_of(im: &IndicatorModel, i: usize, outside: &[bool]) -> Result<usize> {
    if outside.len() != im.n() {
        return invalid(format!("outside pattern has {} entries, expected {}", outside.len(), im.n()));
    }
    Ok(outside.iter().enumerate().filter(|&(j, &b)| b && !im.in_neighborhood(i, j)).fold(0, |m, (j, _)| m | 1 << j))
}

/// `P(I_i = 1 | I_j = outside_j, j not in A_i)`, exactly. Entries of
/// `outside` inside `A_i` are ignored.
pub fn conditional_intensity_g(im: &IndicatorModel, i: usize, outside: &[bool]) -> Result<f64> {
    let Some(pmf) = im.exact_pmf() else {
        return invalid("conditional intensity needs an exact pmf");
    };
    if i >= im.n() {
        return invalid(format!("focal trial {i} out of range"));
    }
    let key = outside_mask_of(im, i, outside)?;
    match outside_table(im, pmf, i).get(&key) {
        Some(&(all, one)) if all > 0 => Ok(one as f64 / all as f64),
        _ => invalid("conditioning event has probability 0"),
    }
}

/// Per-trial `E|G_i - p_i|`, computed in integer arithmetic.
fn epsilon1_terms(im: &IndicatorModel, pmf: &JointPmf) -> Vec<f64> {
    let total = pmf.total() as u128;
    (0..im.n())
        .map(|i| {
            let wi = pmf.weight_of_one(i) as u128;
            let sum: u128 = outside_table(im, pmf, i)
                .values()
                .map(|&(all, one)| (one as u128 * total).abs_diff(wi * all as u128))
                .sum();
            sum as f64 / (total as f64 * total as f64)
        })
        .collect()
}

/// `sum_i E|E(I_i | I_j, j not in A_i) - p_i|` by enumeration; 0 for models flagged locally dependent.
pub fn epsilon1_exact(im: &IndicatorModel) -> Result<f64> {
    if im.is_locally_dependent() {
        return Ok(0.0);
    }
    let Some(pmf) = im.exact_pmf() else {
        return invalid("epsilon_1 needs an exact pmf");
    };
    Ok(epsilon1_terms(im, pmf).iter().sum())
}

/// `max_{i, o} |G(i, o) - p_i|` over outside patterns of positive probability.
pub fn check_local_dependence(im: &IndicatorModel) -> Result<f64> {
    let Some(pmf) = im.exact_pmf() else {
        return invalid("local-dependence check needs an exact pmf");
    };
    let total = pmf.total() as u128;
    let mut worst = 0.0f64;
    for i in 0..im.n() {
        let wi = pmf.weight_of_one(i) as u128;
        for &(all, one) in outside_table(im, pmf, i).values() {
            if all > 0 {
                let gap = (one as u128 * total).abs_diff(wi * all as u128) as f64 / (all as f64 * total as f64);
                worst = worst.max(gap);
            }
        }
    }
    Ok(worst)
}

/// `sum_i p_i E f(i, I, J_{.i})` from `samples` coupled draws per trial.
///
/// Trials run in parallel on substreams of one seed taken from `rng`, so the
/// result does not depend on the thread count.
pub fn palm_expectation<R, F>(im: &IndicatorModel, samples: usize, rng: &mut R, f: F) -> Result<EstimateWithError>
where
    R: RngCore,
    F: Fn(usize, &[bool], &[bool]) -> f64 + Sync,
{
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let seed = rng.next_u64();
    let per_trial: Vec<(f64, f64)> = (0..im.n())
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let pi = im.p()[i];
            if pi == 0.0 {
                return Ok((0.0, 0.0));
            }
            let mut r = substream(seed, &[i as u64]);
            let mut stats = RunningStats::new();
            for _ in 0..samples {
                let ps = palm_sample(im, i, &mut r)?;
                stats.push(f(i, &ps.base, &ps.palm));
            }
            Ok((pi * stats.mean(), pi * pi * stats.variance() / samples as f64))
        })
        .collect::<Result<_>>()?;
    let value = per_trial.iter().map(|t| t.0).sum();
    let var: f64 = per_trial.iter().map(|t| t.1).sum();
    Ok(EstimateWithError { value, stderr: var.sqrt(), sample_count: samples * im.n() })
}

/// `E sum_i (5/lambda + 3/(V_i ∧ W_i + 1)) sum_{j not in A_i} |J_{ji} - I_j| p_i`
/// with `W_i = sum_{j not in A_i} J_{ji}`.
pub fn epsilon2_mc<R: RngCore>(im: &IndicatorModel, samples: usize, rng: &mut R) -> Result<EstimateWithError> {
    let lambda = im.lambda();
    palm_expectation(im, samples, rng, |i, base, palm| {
        let mut v = 0usize;
        let mut w = 0usize;
        let mut diff = 0usize;
        for j in (0..base.len()).filter(|&j| !im.in_neighborhood(i, j)) {
            v += usize::from(base[j]);
            w += usize::from(palm[j]);
            diff += usize::from(base[j] != palm[j]);
        }
        if diff == 0 {
            return 0.0;
        }
        (5.0 / lambda + 3.0 / (v.min(w) as f64 + 1.0)) * diff as f64
    })
}

/// Residual `E sum_i I_i f(i, I) - sum_i p_i E f(i, J_{.i})`.
///
/// Each draw pairs the base vector with one Palm vector at a focal trial `K`
/// chosen with probability `p_K / lambda`, making the right side `lambda f(K, J_{.K})`.
pub fn check_palm_identity<R, F>(im: &IndicatorModel, f: F, samples: usize, rng: &mut R) -> Result<EstimateWithError>
where
    R: RngCore,
    F: Fn(usize, &[bool]) -> f64 + Sync,
{
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let lambda = im.lambda();
    if lambda == 0.0 {
        return Ok(EstimateWithError::exact(0.0));
    }
    let cumulative: Vec<f64> = im
        .p()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut r = substream(seed, &[s as u64]);
            let u = r.random::<f64>() * lambda;
            let k = cumulative.partition_point(|&c| c <= u).min(im.n() - 1);
            let ps = palm_sample(im, k, &mut r)?;
            let left: f64 = (0..im.n()).filter(|&i| ps.base[i]).map(|i| f(i, &ps.base)).sum();
            Ok(left - lambda * f(k, &ps.palm))
        })
        .collect::<Result<_>>()?;
    Ok(EstimateWithError::from_replicates(&values))
}

/// Residual `E sum_{x in Xi} f(x, Xi) - E int f(a, Xi + delta_a) lambda(da)` for `Xi ~ Po(mm)`.
pub fn check_poisson_palm_identity<R, F>(mm: &MeanMeasure, f: F, samples: usize, rng: &mut R) -> Result<EstimateWithError>
where
    R: RngCore,
    F: Fn(&CarrierPoint, &PointConfig) -> f64 + Sync,
{
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let mass = mm.total_mass();
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut r = substream(seed, &[s as u64]);
            let xi = sample_poisson_process(mm, &mut r)?;
            let left: f64 = xi.points().iter().map(|x| f(x, &xi)).sum();
            if mass == 0.0 {
                return Ok(left);
            }
            let a = mm.sample_location(&mut r)?;
            let with_a = xi.add_point(a.clone())?;
            Ok(left - mass * f(&a, &with_a))
        })
        .collect::<Result<_>>()?;
    Ok(EstimateWithError::from_replicates(&values))
}

/// A bounded functional `h` of a configuration.
pub trait ConfigFunctional: Sync {
    fn eval(&self, xi: &PointConfig) -> f64;

    /// `Some(h(n))` when `h` depends on `xi` only through `|xi| = n`.
    fn of_count(&self, _n: usize) -> Option<f64> {
        None
    }
}

/// Stock test functionals.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Constant(f64),
    /// `min(|xi|, K)`.
    CappedCount(usize),
    /// `1{|xi| <= k}`.
    CountAtMost(usize),
    /// `min(|xi|, K)^2 / K^2`.
    ScaledSquare(usize),
    /// `min(xi(R), K)` for the box `R = [0, upper)^d`.
    RegionCount { upper: f64, cap: usize },
}

impl ConfigFunctional for Functional {
    fn eval(&self, xi: &PointConfig) -> f64 {
        match self {
            Functional::RegionCount { upper, cap } => {
                let inside = xi
                    .points()
                    .iter()
                    .filter(|p| match p {
                        CarrierPoint::Index(_) => true,
                        _ => p.coords().iter().all(|&c| c < *upper),
                    })
                    .count();
                inside.min(*cap) as f64
            }
            _ => self.of_count(xi.len()).expect("count functional"),
        }
    }

    fn of_count(&self, n: usize) -> Option<f64> {
        Some(match *self {
            Functional::Constant(c) => c,
            Functional::CappedCount(k) => n.min(k) as f64,
            Functional::CountAtMost(k) => f64::from(u8::from(n <= k)),
            Functional::ScaledSquare(k) => {
                let m = n.min(k) as f64;
                m * m / (k as f64 * k as f64)
            }
            Functional::RegionCount { .. } => return None,
        })
    }
}

/// Generator `∫(h(xi + delta_x) - h(xi)) lambda(dx) + sum_{x in xi}(h(xi - delta_x) - h(xi))`.
pub fn generator<H: ConfigFunctional + ?Sized>(mm: &MeanMeasure, nodes: &[(CarrierPoint, f64)], h: &H, xi: &PointConfig) -> Result<f64> {
    let n = xi.len();
    if let Some(hn) = h.of_count(n) {
        let up = h.of_count(n + 1).expect("count functional") - hn;
        let down = if n == 0 { 0.0 } else { h.of_count(n - 1).expect("count functional") - hn };
        return Ok(mm.total_mass() * up + n as f64 * down);
    }
    let hx = h.eval(xi);
    let mut birth = 0.0;
    for (x, w) in nodes {
        birth += w * (h.eval(&xi.add_point(x.clone())?) - hx);
    }
    let mut death = 0.0;
    for (k, _) in xi.points().iter().enumerate() {
        let mut pts = xi.points().to_vec();
        pts.remove(k);
        death += h.eval(&PointConfig::from_trusted(xi.carrier().clone(), pts)) - hx;
    }
    Ok(birth + death)
}

/// `E A h(Xi)` for `Xi ~ Po(mm)`; zero up to noise.
pub fn check_stein_identity<R, H>(mm: &MeanMeasure, h: &H, samples: usize, rng: &mut R) -> Result<EstimateWithError>
where
    R: RngCore,
    H: ConfigFunctional + ?Sized,
{
    check_stein_identity_with(|r: &mut SimRng| sample_poisson_process(mm, r), mm, h, samples, rng)
}

/// `E A h(Xi)` for `Xi` drawn by `sampler`; clearly nonzero when the sampler is not `Po(mm)`.
pub fn check_stein_identity_with<R, H, S>(sampler: S, mm: &MeanMeasure, h: &H, samples: usize, rng: &mut R) -> Result<EstimateWithError>
where
    R: RngCore,
    H: ConfigFunctional + ?Sized,
    S: Fn(&mut SimRng) -> Result<PointConfig> + Sync,
{
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let nodes = if h.of_count(0).is_some() { Vec::new() } else { mm.quadrature() };
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut r = substream(seed, &[s as u64]);
            generator(mm, &nodes, h, &sampler(&mut r)?)
        })
        .collect::<Result<_>>()?;
    Ok(EstimateWithError::from_replicates(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::{Carrier, Geometry};
    use crate::metrics::tv_distance;
    use crate::processes::{mask_of, sample_matern, JointPmf, OccupancyModel, PalindromeModel};

    fn remark_model() -> IndicatorModel {
        // triple 2, each pair alone 8, each single alone 82, none 728 (per 1000)
        let mut w = vec![0u64; 8];
        w[0] = 728;
        for m in [1, 2, 4] {
            w[m] = 82;
        }
        for m in [3, 5, 6] {
            w[m] = 8;
        }
        w[7] = 2;
        let pmf = JointPmf::from_weights(3, w).unwrap();
        IndicatorModel::from_pmf(pmf, vec![vec![0, 1], vec![0, 1], vec![0, 2]]).unwrap()
    }

    #[test]
    fn reduced_palm_examples() {
        let pmf = JointPmf::from_probs(4, &[1.0 / 16.0; 16]).unwrap();
        let hoods = vec![vec![0, 1], vec![0, 1, 2], vec![1, 2, 3], vec![2, 3]];
        let im = IndicatorModel::from_pmf(pmf, hoods).unwrap();
        let bits = [true, false, true, true];
        assert_eq!(reduced_palm(&im, 1, &bits, None).base_outside, 1);
        assert_eq!(reduced_config(&im, 1, &bits).len(), 1);

        let full = IndicatorModel::from_pmf(JointPmf::from_probs(2, &[0.25; 4]).unwrap(), vec![vec![0, 1]; 2]).unwrap();
        assert_eq!(reduced_palm(&full, 0, &[true, true], Some(&[true, true])), ReducedPalm { base_outside: 0, palm_outside: Some(0) });
        let ind = IndicatorModel::independent(vec![0.5; 3]).unwrap();
        assert_eq!(reduced_palm(&ind, 0, &[true, true, true], None).base_outside, 2);
    }

    #[test]
    fn independent_palm_draws() {
        let im = IndicatorModel::independent(vec![0.3, 0.6, 0.2]).unwrap();
        let mut rng = substream(1, &[]);
        for _ in 0..100 {
            let ps = palm_sample(&im, 1, &mut rng).unwrap();
            assert!(ps.palm[1]);
            assert_eq!((ps.base[0], ps.base[2]), (ps.palm[0], ps.palm[2]));
        }
        assert_eq!(epsilon1_exact(&im).unwrap(), 0.0);
        assert_eq!(check_local_dependence(&im).unwrap(), 0.0);
        assert_eq!(conditional_intensity_g(&im, 0, &[false, true, true]).unwrap(), 0.3);
        assert_eq!(epsilon2_mc(&im, 50, &mut rng).unwrap().value, 0.0);
    }

    #[test]
    fn remark_model_conditional_intensity() {
        let im = remark_model();
        // brute force: P(I_i = 1 | outside) over the 8 outcomes
        let w = im.exact_pmf().unwrap().weights().to_vec();
        for i in 0..3 {
            for o in 0..8usize {
                let outside: Vec<bool> = (0..3).map(|j| o >> j & 1 == 1).collect();
                let agrees = |m: usize| (0..3).all(|j| im.in_neighborhood(i, j) || (m >> j & 1 == 1) == outside[j]);
                let all: u64 = (0..8).filter(|&m| agrees(m)).map(|m| w[m]).sum();
                let one: u64 = (0..8).filter(|&m| agrees(m) && m >> i & 1 == 1).map(|m| w[m]).sum();
                let g = conditional_intensity_g(&im, i, &outside).unwrap();
                assert!((g - one as f64 / all as f64).abs() < 1e-15);
                assert!((g - 0.1).abs() < 1e-15);
            }
        }
        assert_eq!(check_local_dependence(&im).unwrap(), 0.0);
        assert_eq!(epsilon1_terms(&im, im.exact_pmf().unwrap()).iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn epsilon1_against_brute_force() {
        // a chain whose neighbourhoods are too small
        let mut w = vec![0u64; 8];
        w[0b000] = 40;
        w[0b111] = 30;
        w[0b001] = 10;
        w[0b100] = 20;
        let pmf = JointPmf::from_weights(3, w.clone()).unwrap();
        let im = IndicatorModel::from_pmf(pmf.clone(), vec![vec![0], vec![1], vec![2]]).unwrap();
        let mut brute = 0.0;
        for i in 0..3 {
            let p = pmf.marginal(i);
            for o in 0..8usize {
                let outside = |m: usize| (0..3).filter(|&j| j != i).all(|j| (m >> j & 1) == (o >> j & 1));
                if o >> i & 1 == 1 {
                    continue;
                }
                let all: u64 = (0..8).filter(|&m| outside(m)).map(|m| w[m]).sum();
                let one: u64 = (0..8).filter(|&m| outside(m) && m >> i & 1 == 1).map(|m| w[m]).sum();
                if all > 0 {
                    brute += all as f64 / 100.0 * (one as f64 / all as f64 - p).abs();
                }
            }
        }
        assert!((epsilon1_exact(&im).unwrap() - brute).abs() < 1e-12);
        assert!(check_local_dependence(&im).unwrap() > 0.1);
    }

    #[test]
    fn palindrome_model_is_locally_dependent() {
        let pm = PalindromeModel::new(16, 2, [0.3, 0.2, 0.2, 0.3]).unwrap();
        let im = pm.indicator_model().unwrap();
        assert!(check_local_dependence(&im).unwrap() < 1e-12);
    }

    #[test]
    fn explicit_palm_law_matches_conditioning() {
        let im = remark_model();
        let pmf = im.exact_pmf().unwrap().clone();
        let mut rng = substream(3, &[]);
        for i in 0..3 {
            let exact: Vec<f64> =
                (0..8).map(|m| if m >> i & 1 == 1 { pmf.weights()[m] as f64 / pmf.weight_of_one(i) as f64 } else { 0.0 }).collect();
            let draws = 100_000;
            let mut counts = vec![0.0; 8];
            for _ in 0..draws {
                counts[mask_of(&palm_sample(&im, i, &mut rng).unwrap().palm)] += 1.0 / draws as f64;
            }
            assert!(tv_distance(&counts, &exact).unwrap() < 0.01);
            let cond: Vec<f64> = (0..draws / 10)
                .map(|_| conditional_draw(&pmf, i, &mut rng).unwrap())
                .fold(vec![0.0; 8], |mut acc, b| {
                    acc[mask_of(&b)] += 10.0 / draws as f64;
                    acc
                });
            assert!(tv_distance(&cond, &exact).unwrap() < 0.03);
        }
    }

    #[test]
    fn occupancy_epsilon2_against_enumeration() {
        // 3 urns, 2 balls, m = 0: enumerate base placements, X~ = 0, and the redistribution
        let om = OccupancyModel::uniform(3, 2, 0).unwrap();
        let im = om.indicator_model().unwrap();
        let lambda = im.lambda();
        let mut exact = 0.0;
        for i in 0..3 {
            let pi = im.p()[i];
            let mut e = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let mut x = [0u32; 3];
                    x[a] += 1;
                    x[b] += 1;
                    let pr = 1.0 / 9.0;
                    // redistribute x[i] balls uniformly over the other two urns
                    let k = x[i];
                    let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
                    for moves in 0..(1u32 << k) {
                        let mut y = x;
                        y[i] = 0;
                        for t in 0..k {
                            y[others[(moves >> t & 1) as usize]] += 1;
                        }
                        let q = pr / f64::from(1u32 << k);
                        let (mut v, mut w, mut diff) = (0, 0, 0);
                        for &j in &others {
                            let (ij, jj) = (x[j] == 0, y[j] == 0);
                            v += usize::from(ij);
                            w += usize::from(jj);
                            diff += usize::from(ij != jj);
                        }
                        e += q * (5.0 / lambda + 3.0 / (v.min(w) as f64 + 1.0)) * diff as f64;
                    }
                }
            }
            exact += pi * e;
        }
        let mut rng = substream(4, &[]);
        let est = epsilon2_mc(&im, 40_000, &mut rng).unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.stderr + 1e-12, "{est:?} vs {exact}");
    }

    #[test]
    fn palm_identity_checks() {
        let mut rng = substream(5, &[]);
        let im = IndicatorModel::independent(vec![0.2, 0.5, 0.7, 0.1]).unwrap();
        let r = check_palm_identity(&im, |_, _| 1.0, 20_000, &mut rng).unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");
        let r = check_palm_identity(&im, |i, bits| f64::from(u8::from(bits[(i + 1) % 4])), 20_000, &mut rng).unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");
        let occ = OccupancyModel::uniform(6, 8, 1).unwrap().indicator_model().unwrap();
        let r = check_palm_identity(&occ, |i, bits| bits.iter().filter(|b| **b).count() as f64 * (i + 1) as f64, 20_000, &mut rng)
            .unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");

        let mm = MeanMeasure::uniform(2, Geometry::Box, 4.0).unwrap();
        let r = check_poisson_palm_identity(&mm, |_, xi| xi.len() as f64, 20_000, &mut rng).unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");
    }

    #[test]
    fn stein_identity_on_poisson() {
        let mut rng = substream(6, &[]);
        let mm = MeanMeasure::uniform(2, Geometry::Box, 3.0).unwrap();
        assert_eq!(check_stein_identity(&mm, &Functional::Constant(2.0), 100, &mut rng).unwrap().value, 0.0);
        for lambda in [0.5, 2.0, 10.0] {
            let mm = MeanMeasure::uniform(1, Geometry::Box, lambda).unwrap();
            for h in [Functional::CappedCount(3), Functional::CountAtMost(1), Functional::ScaledSquare(8)] {
                let r = check_stein_identity(&mm, &h, 20_000, &mut rng).unwrap();
                assert!(r.consistent_with_zero(3.0), "{lambda} {h:?} {r:?}");
            }
        }
        let atoms = (1..=5).map(|k| (CarrierPoint::Index(k), 0.4)).collect();
        let mm = MeanMeasure::discrete(Carrier::Discrete, atoms).unwrap();
        let r = check_stein_identity(&mm, &Functional::CappedCount(2), 20_000, &mut rng).unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");
        let mm = MeanMeasure::density(2, Geometry::Box, 16, 4.0, std::sync::Arc::new(|x: &[f64]| 4.0 * x[0])).unwrap();
        let r = check_stein_identity(&mm, &Functional::RegionCount { upper: 0.5, cap: 2 }, 5_000, &mut rng).unwrap();
        assert!(r.consistent_with_zero(3.0), "{r:?}");
    }

    #[test]
    fn stein_identity_detects_matern() {
        // matched mean, so only the thinner count law can show up
        struct CenteredSquare(f64);
        impl ConfigFunctional for CenteredSquare {
            fn eval(&self, xi: &PointConfig) -> f64 {
                self.of_count(xi.len()).unwrap()
            }
            fn of_count(&self, n: usize) -> Option<f64> {
                Some((n as f64 - self.0).powi(2).min(400.0) / 400.0)
            }
        }
        let (mu, r, d) = (50.0, 0.02, 2);
        let lambda = mu * (-mu * std::f64::consts::PI * r * r).exp();
        let mm = MeanMeasure::uniform(d, Geometry::Torus, lambda).unwrap();
        let mut rng = substream(7, &[]);
        let h = CenteredSquare(lambda);
        let res = check_stein_identity_with(
            |rr: &mut SimRng| Ok(sample_matern(mu, r, d, Geometry::Torus, rr)?.1),
            &mm,
            &h,
            20_000,
            &mut rng,
        )
        .unwrap();
        assert!(!res.consistent_with_zero(3.0), "{res:?}");
        let pois = check_stein_identity(&mm, &h, 20_000, &mut rng).unwrap();
        assert!(pois.consistent_with_zero(3.0), "{pois:?}");
    }

    #[test]
    fn rejection_fallback_is_bounded() {
        struct Rare;
        impl crate::processes::TrialLaw for Rare {
            fn n(&self) -> usize {
                2
            }
            fn sample(&self, _rng: &mut dyn RngCore) -> Vec<bool> {
                vec![false, false]
            }
            fn name(&self) -> &'static str {
                "rare"
            }
        }
        let im = IndicatorModel::new(vec![1e-9, 1e-9], vec![vec![0], vec![1]], std::sync::Arc::new(Rare)).unwrap();
        let err = palm_sample(&im, 0, &mut substream(8, &[])).unwrap_err();
        assert!(matches!(err, crate::Error::Resource(_)));
    }
}
