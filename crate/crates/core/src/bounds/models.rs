//! Closed-form bounds for the Matérn, occupancy and palindrome processes.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoundMode, BoundReport, Term};
use crate::carrier::Geometry;
use crate::error::{invalid, Result};
use crate::metrics::EstimateWithError;
use crate::processes::{kappa, matern_mean_measure, occupancy_pi, palindrome_indicators, sample_dna, OccupancyModel, PalindromeModel};
use crate::rng::substream;
use crate::special::{binomial_cdf, trinomial_joint_cdf, KahanSum};

/// `d_2` bound for the Matérn hard-core process with Poisson intensity `mu` and radius `r`.
pub fn matern_bound(mu: f64, r: f64, d: usize, geometry: Geometry, grid: usize) -> Result<BoundReport> {
    if !(mu.is_finite() && mu > 0.0) {
        return invalid(format!("intensity must be positive, found {mu}"));
    }
    if !(r.is_finite() && r >= 0.0) {
        return invalid(format!("radius must be nonnegative, found {r}"));
    }
    let k = kappa(d)?;
    let theta = mu * k * (2.0 * r).powi(d as i32);
    let lambda = match geometry {
        Geometry::Torus => mu * (-mu * k * r.powi(d as i32)).exp(),
        Geometry::Box => matern_mean_measure(mu, r, d, geometry, grid)?.total_mass(),
    };
    let denominator = 1.0 + (1.0 - 2.0 * theta) / lambda;
    let second = if theta == 0.0 {
        0.0
    } else {
        6.0 * theta * (3.0 + (-(-(0.5f64.powi(d as i32)) * theta).exp_m1()) * theta) / denominator
    };
    Ok(BoundReport::new("matern-d2", vec![Term::exact("hard_core", 10.0 * theta), Term::exact("variance", second)], &[])
        .with_flag("1 + (1 - 2 theta)/lambda > 0", denominator > 0.0)
        .with_diagnostic("theta", theta)
        .with_diagnostic("lambda", lambda))
}

/// Both occupancy bounds with the quantities they are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyBound {
    /// The bound in terms of `mu`, `mu'` and `E|Xi| - Var|Xi|`.
    pub exact: BoundReport,
    /// The explicit relaxation in terms of `s`, `m`, `pi_*` and `p_*`.
    pub explicit: BoundReport,
    pub mu: f64,
    pub mu_prime: f64,
    pub mu_double_prime: f64,
    pub mean_minus_variance: f64,
    pub pi_star: f64,
    pub p_star: f64,
    /// `mu' >= ((1 - 3p_*)/(1 - 3p_* + 2p_*^2))^s (mu - 2 pi_*)`, when `p_* < 1/3`.
    pub mu_prime_inequality: Option<bool>,
}

/// Distinct urn probabilities with multiplicities.
fn classes(p: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for q in sorted {
        match out.last_mut() {
            Some((v, c)) if *v == q => *c += 1,
            _ => out.push((q, 1)),
        }
    }
    out
}

fn renormalized_cdf(s: u64, pk: f64, rest: f64, m: u64) -> f64 {
    if rest <= 0.0 {
        // every ball already sits in the conditioned urns
        return 1.0;
    }
    binomial_cdf(s, (pk / rest).min(1.0), m)
}

/// `mu' = min_{i != j} sum_{k != i,j} P(X_k <= m | X_i = X_j = 0)`, by classes of equal `p`.
pub fn mu_prime(om: &OccupancyModel) -> f64 {
    let cls = classes(&om.p);
    let (s, m) = (om.s, om.m);
    let mut best = f64::INFINITY;
    for (a, &(pa, na)) in cls.iter().enumerate() {
        for (b, &(pb, _)) in cls.iter().enumerate().skip(a) {
            if a == b && na < 2 {
                continue;
            }
            let rest = 1.0 - pa - pb;
            let mut acc = KahanSum::new();
            for (c, &(pc, nc)) in cls.iter().enumerate() {
                let count = nc - usize::from(c == a) - usize::from(c == b);
                if count > 0 {
                    acc.add(count as f64 * renormalized_cdf(s, pc, rest, m));
                }
            }
            best = best.min(acc.value());
        }
    }
    best
}

/// `mu'` over every ordered pair and every third urn.
pub fn mu_prime_brute_force(om: &OccupancyModel) -> f64 {
    let n = om.p.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let rest = 1.0 - om.p[i] - om.p[j];
            let v: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| renormalized_cdf(om.s, om.p[k], rest, om.m)).sum();
            best = best.min(v);
        }
    }
    best
}

/// `mu'' = min_i sum_{j != i} P(X_j <= m | X_i = 0)`.
fn mu_double_prime(om: &OccupancyModel) -> f64 {
    let cls = classes(&om.p);
    cls.iter()
        .enumerate()
        .map(|(a, &(pa, _))| {
            cls.iter()
                .enumerate()
                .map(|(c, &(pc, nc))| (nc - usize::from(c == a)) as f64 * renormalized_cdf(om.s, pc, 1.0 - pa, om.m))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `E|Xi| - Var|Xi| = mu^2 - sum_{i != k} P(X_i <= m, X_k <= m)`.
fn mean_minus_variance(om: &OccupancyModel, mu: f64) -> f64 {
    let cls = classes(&om.p);
    let mut pairs = KahanSum::new();
    for (a, &(pa, na)) in cls.iter().enumerate() {
        for (b, &(pb, nb)) in cls.iter().enumerate() {
            let count = if a == b { na * (na - 1) } else { na * nb };
            if count > 0 {
                pairs.add(count as f64 * trinomial_joint_cdf(om.s, pa, pb, om.m));
            }
        }
    }
    mu * mu - pairs.value()
}

/// Both occupancy bounds for urns with at most `m` balls.
pub fn occupancy_bound(om: &OccupancyModel) -> Result<OccupancyBound> {
    let n = om.p.len();
    if n < 3 {
        return invalid("the occupancy bound needs at least three urns");
    }
    let pi: Vec<f64> = om.p.iter().map(|&q| occupancy_pi(om.s, q, om.m)).collect();
    let mu: f64 = pi.iter().sum();
    if mu <= 0.0 {
        return invalid("no urn can hold at most m balls; the occupancy process is empty");
    }
    let mu1 = mu_prime(om);
    let mu2 = mu_double_prime(om);
    let emv = mean_minus_variance(om, mu);
    let pi_star = pi.iter().copied().fold(0.0, f64::max);
    let p_star = om.p.iter().copied().fold(0.0, f64::max);
    let half_cell = 1.0 / (2.0 * n as f64);

    let exact = BoundReport::new(
        "occupancy-d2",
        vec![Term::exact("discretization", half_cell), Term::exact("stein", (5.0 / mu + 3.0 / mu1) * emv.max(0.0))],
        &[],
    )
    .with_flag("mu' > 0", mu1 > 0.0)
    .with_flag("E|Xi| >= Var|Xi|", emv >= -1e-12 * mu.max(1.0))
    .with_diagnostic("mu", mu)
    .with_diagnostic("mu_prime", mu1)
    .with_diagnostic("mu_double_prime", mu2)
    .with_diagnostic("mean_minus_variance", emv);

    let (s, m) = (om.s as f64, om.m as f64);
    let lnln = if om.m == 0 { 0.0 } else { m * s.ln().ln() };
    let slack = s - s.ln() - lnln - 4.0 * m;
    let ratio = (1.0 - 3.0 * p_star + 2.0 * p_star * p_star) / (1.0 - 3.0 * p_star);
    let c = 5.0 + 3.0 * ratio.powf(s) / (1.0 - 2.0 * pi_star / mu);
    let inner = (s.ln() + lnln + 5.0 * m) / slack * mu + 4.0 / s;
    let braces = pi_star + s / mu * inner * inner;
    let p_ok = p_star < 1.0 / 3.0;
    let s_ok = om.s > 1 && slack > 0.0;
    let pi_ok = 2.0 * pi_star < mu;
    let value = if p_ok && s_ok && pi_ok { c * braces } else { f64::INFINITY };
    let explicit = BoundReport::new("occupancy-d2-explicit", vec![Term::exact("discretization", half_cell), Term::exact("stein", value)], &[])
        .with_flag("p_* < 1/3", p_ok)
        .with_flag("s > ln s + m ln ln s + 4m", s_ok)
        .with_flag("2 pi_* < mu", pi_ok)
        .with_diagnostic("C", c)
        .with_diagnostic("pi_star", pi_star)
        .with_diagnostic("p_star", p_star);

    let mu_prime_inequality = p_ok.then(|| mu1 >= ratio.powf(-s) * (mu - 2.0 * pi_star) * (1.0 - 1e-12));
    Ok(OccupancyBound {
        exact,
        explicit,
        mu,
        mu_prime: mu1,
        mu_double_prime: mu2,
        mean_minus_variance: emv,
        pi_star,
        p_star,
        mu_prime_inequality,
    })
}

/// The palindrome bounds and their ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalindromeBound {
    /// `26/lambda (b_1 + b_2) + 1/(2n)` with the chosen `b_2`.
    pub main: BoundReport,
    /// `131 L theta^{L/2}`.
    pub crude: BoundReport,
    pub lambda: f64,
    pub b1: f64,
    pub b1_cap: f64,
    pub b2: EstimateWithError,
    pub b2_cap: f64,
    pub b2_exact: f64,
}

/// MC estimate of `b_2 = E sum_i sum_{j ∈ A_i, j != i} I_i I_j` from simulated sequences.
fn b2_monte_carlo<R: RngCore>(pm: &PalindromeModel, samples: usize, rng: &mut R) -> Result<EstimateWithError> {
    if samples < 2 {
        return invalid("at least two samples are needed for an error estimate");
    }
    let w = 2 * pm.half - 1;
    let seed = rng.next_u64();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let ind = palindrome_indicators(&sample_dna(pm, &mut substream(seed, &[k as u64])), pm.half);
            let hits: Vec<usize> = ind.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
            // ordered pairs within distance w
            let mut pairs = 0usize;
            for (a, &i) in hits.iter().enumerate() {
                pairs += hits[a + 1..].iter().take_while(|&&j| j - i <= w).count();
            }
            2.0 * pairs as f64
        })
        .collect();
    Ok(EstimateWithError::from_replicates(&values))
}

/// The palindrome bound; `mode` chooses the analytic cap or an MC estimate for `b_2`.
pub fn palindrome_bound<R: RngCore>(pm: &PalindromeModel, mode: BoundMode, rng: &mut R) -> Result<PalindromeBound> {
    let n = pm.n() as f64;
    let l = pm.half as f64;
    let theta = pm.theta();
    let lambda = pm.lambda();
    let b1 = pm.b1_exact();
    let b1_cap = n * (4.0 * l - 1.0) * theta.powf(2.0 * l);
    let b2_cap = n * (4.0 * l - 2.0) * theta.powf(1.5 * l);
    let b2 = match mode {
        BoundMode::Exact => EstimateWithError::exact(b2_cap),
        BoundMode::MonteCarlo(samples) => b2_monte_carlo(pm, samples, rng)?,
    };
    let mut main = BoundReport::new(
        "palindrome-d2",
        vec![
            Term::exact("overlap_b1", 26.0 / lambda * b1),
            Term::estimated("overlap_b2", 26.0 / lambda * b2.value, 26.0 / lambda * b2.stderr),
            Term::exact("discretization", 1.0 / (2.0 * n)),
        ],
        &[],
    )
    .with_diagnostic("lambda", lambda)
    .with_diagnostic("b1", b1)
    .with_diagnostic("b2", b2.value);
    for (name, holds) in pm.assumption_flags() {
        main = main.with_flag(&name, holds);
    }
    let crude = BoundReport::new("palindrome-d2-crude", vec![Term::exact("crude", 131.0 * l * theta.powf(l / 2.0))], &[]);
    Ok(PalindromeBound { main, crude, lambda, b1, b1_cap, b2, b2_cap, b2_exact: pm.b2_exact() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::binomial_pmf;

    #[test]
    fn matern_examples() {
        let r0 = matern_bound(100.0, 0.0, 2, Geometry::Torus, 64).unwrap();
        assert_eq!(r0.total, 0.0);
        let b = matern_bound(100.0, 0.005, 2, Geometry::Torus, 64).unwrap();
        assert!((b.diagnostic("theta").unwrap() - 0.031_415_926_535_897_93).abs() < 1e-15);
        assert!((b.diagnostic("lambda").unwrap() - 100.0 * (-100.0 * std::f64::consts::PI * 2.5e-5f64).exp()).abs() < 1e-12);
        assert!((b.total - 0.874_37).abs() < 1e-4, "{}", b.total);
        assert!(!b.vacuous && b.valid());
        let v = matern_bound(50.0, 0.02, 2, Geometry::Torus, 64).unwrap();
        assert!((v.diagnostic("theta").unwrap() - 0.2513).abs() < 1e-4);
        assert!(v.vacuous);
        let boxed = matern_bound(100.0, 0.005, 2, Geometry::Box, 64).unwrap();
        assert!(boxed.diagnostic("lambda").unwrap() > b.diagnostic("lambda").unwrap());
    }

    #[test]
    fn matern_bound_is_monotone_in_r() {
        for d in 1..=3 {
            let mut prev = 0.0;
            for k in 0..=40 {
                let r = 0.002 * k as f64;
                let b = matern_bound(30.0, r, d, Geometry::Torus, 32).unwrap();
                if !b.valid() {
                    break;
                }
                assert!(b.total >= prev - 1e-15, "d = {d}, r = {r}");
                prev = b.total;
            }
        }
    }

    #[test]
    fn mu_prime_matches_brute_force() {
        let cases = [
            OccupancyModel::uniform(10, 20, 0).unwrap(),
            OccupancyModel::uniform(30, 50, 2).unwrap(),
            OccupancyModel::new(15, 1, (1..=8).map(|k| k as f64 / 36.0).collect()).unwrap(),
            OccupancyModel::new(40, 3, vec![0.1, 0.1, 0.2, 0.2, 0.2, 0.05, 0.05, 0.1]).unwrap(),
        ];
        for om in &cases {
            assert!((mu_prime(om) - mu_prime_brute_force(om)).abs() < 1e-12, "{om:?}");
            assert!(mu_double_prime(om) >= mu_prime(om));
        }
    }

    #[test]
    fn mean_minus_variance_against_enumeration() {
        // 4 urns, 3 balls, at most one ball: enumerate all 64 placements
        let om = OccupancyModel::new(3, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (mut e1, mut e2) = (0.0, 0.0);
        for code in 0..64usize {
            let mut x = [0; 4];
            let mut pr = 1.0;
            for t in 0..3 {
                let u = code >> (2 * t) & 3;
                x[u] += 1;
                pr *= om.p[u];
            }
            let count = x.iter().filter(|&&c| c <= 1).count() as f64;
            e1 += pr * count;
            e2 += pr * count * count;
        }
        let mu: f64 = om.p.iter().map(|&q| occupancy_pi(3, q, 1)).sum();
        assert!((mu - e1).abs() < 1e-14);
        let gap = mean_minus_variance(&om, mu) - (e1 - (e2 - e1 * e1));
        assert!(gap.abs() < 1e-12, "{gap}");
    }

    #[test]
    fn occupancy_reference_case() {
        let b = occupancy_bound(&OccupancyModel::uniform(100, 460, 0).unwrap()).unwrap();
        let pi = 0.99f64.powi(460);
        assert!((b.mu - 100.0 * pi).abs() < 1e-12);
        assert!((b.mu_prime - 98.0 * (97.0f64 / 98.0).powi(460)).abs() < 1e-12);
        let emv = b.mu * b.mu - 9900.0 * 0.98f64.powi(460);
        assert!((b.mean_minus_variance - emv).abs() < 1e-12);
        assert!((b.exact.total - 0.460_147_588).abs() < 1e-8, "{}", b.exact.total);
        assert!(!b.exact.vacuous);
        assert!(b.explicit.valid());
        assert!(b.exact.total <= b.explicit.total);
        assert_eq!(b.mu_prime_inequality, Some(true));
    }

    #[test]
    fn occupancy_full_acceptance_is_vacuous() {
        let b = occupancy_bound(&OccupancyModel::uniform(5, 3, 3).unwrap()).unwrap();
        assert_eq!(b.mu, 5.0);
        assert!((b.mean_minus_variance - 25.0 + 20.0).abs() < 1e-12);
        assert!(b.exact.total.is_finite() && b.exact.vacuous);
    }

    #[test]
    fn explicit_relaxation_dominates() {
        for n in [50usize, 100, 200] {
            for s in [100u64, 300, 700, 1500] {
                for m in 0..=2 {
                    let b = occupancy_bound(&OccupancyModel::uniform(n, s, m).unwrap()).unwrap();
                    if b.explicit.valid() {
                        assert!(b.exact.total <= b.explicit.total, "{n} {s} {m}");
                        assert_eq!(b.mu_prime_inequality, Some(true));
                    }
                }
            }
        }
        let skew: Vec<f64> = (1..=60).map(|k| k as f64 / 1830.0).collect();
        let b = occupancy_bound(&OccupancyModel::new(400, 1, skew).unwrap()).unwrap();
        assert_eq!(b.mu_prime_inequality, Some(true));
    }

    #[test]
    fn binomial_helpers_agree() {
        assert!((renormalized_cdf(10, 0.2, 0.5, 2) - (0..=2).map(|k| binomial_pmf(10, 0.4, k)).sum::<f64>()).abs() < 1e-14);
        assert_eq!(renormalized_cdf(3, 0.0, 0.0, 0), 1.0);
    }

    #[test]
    fn palindrome_reference_case() {
        let pm = PalindromeModel::uniform(150_000, 5).unwrap();
        let mut rng = substream(1, &[]);
        let a = palindrome_bound(&pm, BoundMode::Exact, &mut rng).unwrap();
        assert!((a.lambda - 149_991.0 / 1024.0).abs() < 1e-9);
        assert!((a.crude.total - 655.0 / 32.0).abs() < 1e-12);
        assert!(a.crude.vacuous);
        assert!(a.b1 <= a.b1_cap && a.b2_exact <= a.b2_cap);
        assert!((a.main.recombine() - a.main.total).abs() < 1e-12);
        let mc = palindrome_bound(&pm, BoundMode::MonteCarlo(200), &mut rng).unwrap();
        assert!((mc.b2.value - mc.b2_exact).abs() < 4.0 * mc.b2.stderr, "{:?} vs {}", mc.b2, mc.b2_exact);
    }
}
