//! Urn occupancy: `s` balls in `n` urns, indicators of urns holding at most `m` balls.

use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::trials::{grid_config, IndicatorModel, JointPmf, Marks, Relation, TrialLaw, MAX_EXACT_TRIALS};
use crate::carrier::{Geometry, GroundDistance, PointConfig};
use crate::error::{invalid, Result};
use crate::special::{binomial_cdf, binomial_pmf, kahan_sum};

/// `s` balls dropped independently into urns with probabilities `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyModel {
    pub s: u64,
    pub m: u64,
    pub p: Vec<f64>,
}

impl OccupancyModel {
    pub fn new(s: u64, m: u64, p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return invalid("need at least one urn");
        }
        if p.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return invalid("urn probabilities must lie in [0, 1]");
        }
        let total = kahan_sum(p.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("urn probabilities sum to {total}, not 1"));
        }
        Ok(Self { s, m, p })
    }

    pub fn uniform(n: usize, s: u64, m: u64) -> Result<Self> {
        if n == 0 {
            return invalid("need at least one urn");
        }
        Self::new(s, m, vec![1.0 / n as f64; n])
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// `pi_i = P(X_i <= m)`.
    pub fn pi(&self) -> Vec<f64> {
        self.p.iter().map(|&q| occupancy_pi(self.s, q, self.m)).collect()
    }

    /// `mu = sum_i pi_i`.
    pub fn mu(&self) -> f64 {
        kahan_sum(self.pi())
    }

    /// The indicators `1{X_i <= m}` as trials with `A_i = {i}`, marks `i / n` and the redistribution coupling.
    pub fn indicator_model(&self) -> Result<IndicatorModel> {
        let n = self.n();
        let law = Arc::new(OccupancyLaw::new(self.clone()));
        IndicatorModel::new(self.pi(), (0..n).map(|i| vec![i]).collect(), law)?
            .with_marks(Marks::grid(n, GroundDistance::capped(Geometry::Box)))
    }

    /// Exact joint pmf of the indicators by enumerating occupancy vectors,
    /// when `n <= 20` and there are at most `limit` of them.
    pub fn exact_indicator_pmf(&self, limit: u64) -> Option<JointPmf> {
        let n = self.n();
        if n > MAX_EXACT_TRIALS || compositions(self.s, n) > limit as f64 {
            return None;
        }
        let mut probs = vec![0.0; 1 << n];
        let mut x = vec![0u64; n];
        enumerate(self, 0, self.s, &mut x, &mut probs);
        let total = kahan_sum(probs.iter().copied());
        probs.iter_mut().for_each(|q| *q /= total);
        JointPmf::from_probs(n, &probs).ok()
    }
}

fn compositions(s: u64, n: usize) -> f64 {
    // C(s + n - 1, n - 1)
    (ln_factorial(s + n as u64 - 1) - ln_factorial(s) - ln_factorial(n as u64 - 1)).exp()
}

fn enumerate(om: &OccupancyModel, k: usize, left: u64, x: &mut [u64], probs: &mut [f64]) {
    let n = x.len();
    if k + 1 == n {
        x[k] = left;
        let mut ln = ln_factorial(om.s);
        for (xi, pi) in x.iter().zip(&om.p) {
            ln -= ln_factorial(*xi);
            if *xi > 0 {
                if *pi == 0.0 {
                    return;
                }
                ln += *xi as f64 * pi.ln();
            }
        }
        let mask: usize = x.iter().enumerate().filter(|(_, c)| **c <= om.m).map(|(i, _)| 1 << i).sum();
        probs[mask] += ln.exp();
        return;
    }
    for c in 0..=left {
        x[k] = c;
        enumerate(om, k + 1, left - c, x, probs);
    }
}

/// `P(X <= m)` for `X ~ Binomial(s, p)`.
pub fn occupancy_pi(s: u64, p: f64, m: u64) -> f64 {
    binomial_cdf(s, p, m)
}

/// Multinomial counts by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(balls: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut suffix = vec![0.0; probs.len() + 1];
    for k in (0..probs.len()).rev() {
        suffix[k] = suffix[k + 1] + probs[k];
    }
    let mut out = vec![0u64; probs.len()];
    let mut left = balls;
    for (k, &q) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if suffix[k + 1] <= 0.0 {
            out[k] = left;
            break;
        }
        let cond = (q / suffix[k]).clamp(0.0, 1.0);
        let draw = Binomial::new(left, cond).expect("probability clamped").sample(rng);
        out[k] = draw;
        left -= draw;
    }
    out
}

/// A realization of the occupancy experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancySample {
    pub x: Vec<u64>,
    pub indicators: Vec<bool>,
    pub xi: PointConfig,
}

pub fn sample_occupancy<R: Rng + ?Sized>(om: &OccupancyModel, rng: &mut R) -> OccupancySample {
    let x = multinomial(om.s, &om.p, rng);
    let indicators: Vec<bool> = x.iter().map(|&c| c <= om.m).collect();
    let xi = grid_config(&indicators);
    OccupancySample { x, indicators, xi }
}

/// Occupancy indicators with the ball-redistribution Palm coupling.
pub struct OccupancyLaw {
    model: OccupancyModel,
    /// Cumulative `L(X_i | X_i <= m)` per urn.
    truncated: Vec<Vec<f64>>,
}

impl OccupancyLaw {
    pub fn new(model: OccupancyModel) -> Self {
        let truncated = model
            .p
            .iter()
            .map(|&q| {
                let pmf: Vec<f64> = (0..=model.m.min(model.s)).map(|k| binomial_pmf(model.s, q, k)).collect();
                let total = kahan_sum(pmf.iter().copied());
                let mut acc = 0.0;
                pmf.iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { model, truncated }
    }

    /// Redistribution drawn from `x`, focal urn `i`: returns the Palm occupancy vector.
    pub(crate) fn redistribute<R: Rng + ?Sized>(&self, x: &[u64], i: usize, rng: &mut R) -> Vec<u64> {
        let mut y = x.to_vec();
        if x[i] <= self.model.m {
            return y;
        }
        let cdf = &self.truncated[i];
        let u: f64 = rng.random();
        let kept = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u64;
        let moved = x[i] - kept;
        y[i] = kept;
        let rest = 1.0 - self.model.p[i];
        let others: Vec<f64> =
            self.model.p.iter().enumerate().map(|(j, &q)| if j == i { 0.0 } else { q / rest }).collect();
        for (yj, add) in y.iter_mut().zip(multinomial(moved, &others, rng)) {
            *yj += add;
        }
        y
    }
}

impl TrialLaw for OccupancyLaw {
    fn n(&self) -> usize {
        self.model.n()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<bool> {
        sample_occupancy(&self.model, rng).indicators
    }

    fn couple(&self, focal: usize, rng: &mut dyn RngCore) -> Option<(Vec<bool>, Vec<bool>)> {
        if self.model.n() < 2 && self.model.s > self.model.m {
            return None;
        }
        let x = multinomial(self.model.s, &self.model.p, rng);
        let y = self.redistribute(&x, focal, rng);
        let m = self.model.m;
        Some((x.iter().map(|&c| c <= m).collect(), y.iter().map(|&c| c <= m).collect()))
    }

    fn has_coupler(&self) -> bool {
        self.model.n() >= 2 || self.model.s <= self.model.m
    }

    fn relation(&self) -> Relation {
        Relation::Negative
    }

    fn name(&self) -> &'static str {
        "occupancy"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::trials::mask_of;
    use crate::rng::substream;

    #[test]
    fn pi_examples() {
        assert_eq!(occupancy_pi(7, 0.3, 7), 1.0);
        assert!((occupancy_pi(7, 0.3, 0) - 0.7f64.powi(7)).abs() < 1e-15);
        assert!((occupancy_pi(2, 0.5, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn balls_are_conserved_and_s_zero_fills_every_indicator() {
        let om = OccupancyModel::new(37, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut rng = substream(1, &[]);
        for _ in 0..1000 {
            assert_eq!(sample_occupancy(&om, &mut rng).x.iter().sum::<u64>(), 37);
        }
        let empty = OccupancyModel::uniform(5, 0, 0).unwrap();
        let s = sample_occupancy(&empty, &mut rng);
        assert!(s.indicators.iter().all(|b| *b));
        assert_eq!(s.xi.len(), 5);
        assert!((s.xi.points()[4].coords()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_frequencies_match_pi() {
        let om = OccupancyModel::new(20, 2, vec![0.05, 0.15, 0.3, 0.5]).unwrap();
        let pi = om.pi();
        let mut rng = substream(2, &[]);
        let n = 100_000;
        let mut hits = [0usize; 4];
        for _ in 0..n {
            for (h, b) in hits.iter_mut().zip(sample_occupancy(&om, &mut rng).indicators) {
                *h += usize::from(b);
            }
        }
        for (h, p) in hits.iter().zip(&pi) {
            let f = *h as f64 / n as f64;
            assert!((f - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "{f} vs {p}");
        }
    }

    /// All 9 equally likely placements of 2 balls in 3 urns.
    fn placements_pmf() -> Vec<f64> {
        let mut pmf = vec![0.0; 4];
        for a in 0..3 {
            for b in 0..3 {
                let mut x = [0; 3];
                x[a] += 1;
                x[b] += 1;
                pmf[x.iter().filter(|&&c| c == 0).count()] += 1.0 / 9.0;
            }
        }
        pmf
    }

    #[test]
    fn three_urns_two_balls() {
        let om = OccupancyModel::uniform(3, 2, 0).unwrap();
        let oracle = placements_pmf();
        // both balls share an urn in 3 of the 9 placements, leaving two urns empty
        assert!((oracle[2] - 3.0 / 9.0).abs() < 1e-15 && (oracle[1] - 6.0 / 9.0).abs() < 1e-15);
        let mut rng = substream(3, &[]);
        let n = 100_000;
        let mut hist = [0usize; 4];
        for _ in 0..n {
            hist[sample_occupancy(&om, &mut rng).xi.len()] += 1;
        }
        for (k, p) in oracle.iter().enumerate() {
            let f = hist[k] as f64 / n as f64;
            assert!((f - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
        }
        let pmf = om.exact_indicator_pmf(1000).unwrap();
        let mut by_count = [0.0; 4];
        for m in 0..8usize {
            by_count[m.count_ones() as usize] += pmf.prob(m);
        }
        for (a, b) in by_count.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_is_negative_and_has_palm_law() {
        let om = OccupancyModel::new(4, 1, vec![0.2, 0.3, 0.5]).unwrap();
        let im = om.indicator_model().unwrap();
        let pmf = om.exact_indicator_pmf(1000).unwrap();
        let mut rng = substream(4, &[]);
        for focal in 0..3 {
            let n = 100_000;
            let mut counts = [0usize; 8];
            for _ in 0..n {
                let (_, palm) = im.couple(focal, &mut rng).unwrap();
                counts[mask_of(&palm)] += 1;
            }
            let w1 = pmf.weight_of_one(focal) as f64;
            let tv: f64 = 0.5
                * (0..8)
                    .map(|m| {
                        let exact = if m >> focal & 1 == 1 { pmf.weights()[m] as f64 / w1 } else { 0.0 };
                        (counts[m] as f64 / n as f64 - exact).abs()
                    })
                    .sum::<f64>();
            assert!(tv < 0.01, "focal {focal}: tv {tv}");
        }
    }
}
