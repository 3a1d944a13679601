//! Fast invariant suites over every module, with optional fault injection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reproduce::{reproduce_counterexample_4_7, reproduce_remark_3_7, Direction};
use crate::bounds::{inverse_moment_bound, negrel_inverse_moment};
use crate::carrier::{Geometry, GroundDistance, PointConfig};
use crate::metrics::{assignment_solve, rho1, rho1_dd, CostMatrix};
use crate::palm::{check_palm_identity, check_stein_identity, Functional};
use crate::processes::{IndicatorModel, MeanMeasure};
use crate::rng::{substream, tag};
use crate::special::{binomial_pmf, poisson_pmf_at};

/// A deliberate defect, used to show that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Halves the inverse-moment bounds checked by the dominance suite.
    InverseMomentConstant,
    /// Adds `1e-3` to every solver cost in the assignment suite.
    AssignmentCost,
}

impl std::str::FromStr for Fault {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "inverse-moment-constant" => Ok(Fault::InverseMomentConstant),
            "assignment-cost" => Ok(Fault::AssignmentCost),
            other => Err(crate::Error::InvalidInput(format!(
                "unknown fault `{other}` (expected inverse-moment-constant|assignment-cost)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// First failure, if any.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestSummary {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
}

#[derive(Default)]
struct Suite {
    cases: usize,
    failures: usize,
    detail: Option<String>,
}

impl Suite {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.detail.is_none() {
                self.detail = Some(what());
            }
        }
    }

    fn finish(self, name: &str) -> SuiteResult {
        SuiteResult { name: name.into(), passed: self.failures == 0, cases: self.cases, failures: self.failures, detail: self.detail }
    }
}

fn brute_force_assignment(c: &CostMatrix) -> f64 {
    fn go(c: &CostMatrix, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == c.rows() {
            *best = best.min(acc);
            return;
        }
        for j in 0..c.cols() {
            if !used[j] {
                used[j] = true;
                go(c, row + 1, used, acc + c.get(row, j), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(c, 0, &mut vec![false; c.cols()], 0.0, &mut best);
    best
}

fn assignment_suite(seed: u64, fault: Option<Fault>) -> SuiteResult {
    let mut s = Suite::default();
    let offset = if fault == Some(Fault::AssignmentCost) { 1e-3 } else { 0.0 };
    for k in 0..100u64 {
        let mut rng = substream(seed, &[tag("assignment"), k]);
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(n..=6usize);
        let c = CostMatrix::from_fn(n, m, |_, _| rng.random_range(0..20u32) as f64 / 4.0).expect("finite costs");
        let got = assignment_solve(&c).map(|x| x.cost + offset);
        let want = brute_force_assignment(&c);
        s.check(got.as_ref().is_ok_and(|&g| g == want), || format!("instance {k}: solver {got:?}, brute force {want}"));
    }
    s.finish("assignment")
}

fn random_config<R: Rng>(rng: &mut R) -> PointConfig {
    let n = rng.random_range(0..5usize);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    PointConfig::on_interval(&xs).expect("points lie in [0, 1]")
}

fn metric_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::default();
    let g = GroundDistance::capped(Geometry::Box);
    for k in 0..500u64 {
        let mut rng = substream(seed, &[tag("metric"), k]);
        let (a, b, c) = (random_config(&mut rng), random_config(&mut rng), random_config(&mut rng));
        let d = |x: &PointConfig, y: &PointConfig| rho1_dd(x, y, &g).expect("same carrier");
        let r = |x: &PointConfig, y: &PointConfig| rho1(x, y, &g).expect("same carrier");
        s.check(d(&a, &a) == 0.0 && r(&a, &a) == 0.0, || format!("triple {k}: nonzero self-distance"));
        s.check((d(&a, &b) - d(&b, &a)).abs() < 1e-12 && (r(&a, &b) - r(&b, &a)).abs() < 1e-12, || {
            format!("triple {k}: asymmetric")
        });
        s.check(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12, || format!("triple {k}: rho1'' triangle"));
        s.check((0.0..=1.0).contains(&r(&a, &b)), || format!("triple {k}: rho1 outside [0, 1]"));
    }
    s.finish("metric-axioms")
}

fn identity_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::default();
    let mm = MeanMeasure::uniform(1, Geometry::Box, 2.0).expect("valid intensity");
    for (k, h) in [Functional::CappedCount(4), Functional::CountAtMost(1)].iter().enumerate() {
        let res = check_stein_identity(&mm, h, 4000, &mut substream(seed, &[tag("stein"), k as u64]));
        s.check(res.as_ref().is_ok_and(|e| e.consistent_with_zero(4.0)), || format!("Stein residual for {h:?}: {res:?}"));
    }
    let im = IndicatorModel::independent(vec![0.1, 0.3, 0.5]).expect("valid probabilities");
    let res = check_palm_identity(&im, |i, bits| (bits.iter().filter(|b| **b).count() + i) as f64, 4000, &mut substream(seed, &[tag("palm")]));
    s.check(res.as_ref().is_ok_and(|e| e.consistent_with_zero(4.0)), || format!("Palm residual: {res:?}"));
    s.finish("identities")
}

fn dominance_suite(seed: u64, fault: Option<Fault>) -> SuiteResult {
    let mut s = Suite::default();
    let scale = if fault == Some(Fault::InverseMomentConstant) { 0.5 } else { 1.0 };
    let mut rng = substream(seed, &[tag("dominance")]);
    for _ in 0..25 {
        let n = rng.random_range(1..=60u64);
        let p = rng.random_range(0.01..0.99);
        let exact: f64 = (0..=n).map(|k| binomial_pmf(n, p, k) / (k as f64 + 1.0)).sum();
        let bound = inverse_moment_bound(1.0 + n as f64 * p, n as f64 * p * (1.0 - p)).map(|b| b * scale);
        s.check(bound.as_ref().is_ok_and(|&b| exact <= b + 1e-12), || format!("binomial({n}, {p}): {exact} vs {bound:?}"));

        let lambda = rng.random_range(0.0..40.0);
        let exact: f64 = (0..400).map(|k| poisson_pmf_at(lambda, k) / (k as f64 + 1.0)).sum();
        let bound = inverse_moment_bound(1.0 + lambda, lambda).map(|b| b * scale);
        s.check(bound.as_ref().is_ok_and(|&b| exact <= b + 1e-12), || format!("Poisson({lambda}): {exact} vs {bound:?}"));
    }
    for n in (1..=50u32).step_by(7) {
        for p in [0.01f64, 0.1, 0.3, 0.5] {
            let exact = (1.0 - (1.0 - p).powi(n as i32 + 1)) / ((n + 1) as f64 * p);
            let bound = negrel_inverse_moment(n as f64 * p).map(|b| b * scale);
            s.check(bound.as_ref().is_ok_and(|&b| exact < b), || format!("negrel n={n} p={p}: {exact} vs {bound:?}"));
        }
    }
    s.finish("dominance")
}

fn reproduction_suite() -> SuiteResult {
    let mut s = Suite::default();
    let r = reproduce_remark_3_7();
    s.check((r.joint - 0.009).abs() < 1e-12 && (r.factorized - 0.0095).abs() < 1e-12, || format!("{r:?}"));
    for (b, dir) in [(2.0, Direction::Less), (1.0, Direction::Equal), (0.5, Direction::Greater)] {
        let r = reproduce_counterexample_4_7(b, 0.01);
        s.check(r.as_ref().is_ok_and(|r| r.direction == dir && (r.conditional - 1e-4).abs() < 1e-12), || format!("b={b}: {r:?}"));
    }
    s.finish("reproductions")
}

/// Runs all suites. Failures are reported in the summary, never as errors.
pub fn selftest(seed: u64, fault: Option<Fault>) -> SelftestSummary {
    let suites = vec![
        assignment_suite(seed, fault),
        metric_suite(seed),
        identity_suite(seed),
        dominance_suite(seed, fault),
        reproduction_suite(),
    ];
    let all_passed = suites.iter().all(|s| s.passed);
    SelftestSummary { seed, fault, suites, all_passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes_and_is_deterministic() {
        let a = selftest(11, None);
        assert!(a.all_passed, "{a:#?}");
        let b = selftest(11, None);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn injected_faults_are_caught() {
        let s = selftest(11, Some(Fault::InverseMomentConstant));
        assert!(!s.all_passed);
        let failed: Vec<&str> = s.suites.iter().filter(|x| !x.passed).map(|x| x.name.as_str()).collect();
        assert_eq!(failed, ["dominance"]);
        let s = selftest(11, Some(Fault::AssignmentCost));
        let failed: Vec<&str> = s.suites.iter().filter(|x| !x.passed).map(|x| x.name.as_str()).collect();
        assert_eq!(failed, ["assignment"]);
    }
}
