//! Exact worked examples: a locally dependent family where the factorized
//! neighbourhood term fails, and a positively related family whose Palm
//! coupling is not positively related.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::processes::{IndicatorModel, JointPmf};

/// Pmf weights out of 1000 for three events with `P(B_i) = 0.1`, pairwise
/// intersections `0.01` and triple intersection `0.002`, indexed by mask.
pub const REMARK_WEIGHTS: [u64; 8] = [728, 82, 82, 8, 82, 8, 8, 2];

/// The three-indicator model with neighbourhoods `{1,2}, {1,2}, {1,3}` (0-based here).
pub fn remark_model() -> Result<IndicatorModel> {
    let pmf = JointPmf::from_weights(3, REMARK_WEIGHTS.to_vec())?;
    IndicatorModel::from_pmf(pmf, vec![vec![0, 1], vec![0, 1], vec![0, 2]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemarkRecord {
    pub q: f64,
    /// `E[I_1 I_2 / (I_3 + 1)]`.
    pub joint: f64,
    /// `E[1 / (I_3 + 1)] E[I_1 I_2]`.
    pub factorized: f64,
    /// `q^2 - q^3`.
    pub joint_closed_form: f64,
    /// `(1 - q/2) q^2`.
    pub factorized_closed_form: f64,
    pub differ: bool,
}

/// Evaluates both sides by enumeration over the eight outcomes.
pub fn reproduce_remark_3_7() -> RemarkRecord {
    let q = 0.1f64;
    // numerators over 2000 keep every sum an integer
    let (mut joint, mut inv, mut both) = (0u64, 0u64, 0u64);
    for (mask, &w) in REMARK_WEIGHTS.iter().enumerate() {
        let bit = |j: usize| mask >> j & 1 == 1;
        let half = if bit(2) { 1 } else { 2 };
        if bit(0) && bit(1) {
            joint += w * half;
            both += w;
        }
        inv += w * half;
    }
    let joint = joint as f64 / 2000.0;
    let factorized = (inv as f64 / 2000.0) * (both as f64 / 1000.0);
    RemarkRecord {
        q,
        joint,
        factorized,
        joint_closed_form: q * q - q * q * q,
        factorized_closed_form: (1.0 - 0.5 * q) * q * q,
        differ: joint != factorized,
    }
}

/// Which way a pair of probabilities compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Less,
    Equal,
    Greater,
}

impl From<Ordering> for Direction {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Direction::Less,
            Ordering::Equal => Direction::Equal,
            Ordering::Greater => Direction::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub b: f64,
    pub q: f64,
    /// `P(outcome = mask)`, bit `j` for event `j + 1`.
    pub pmf: Vec<f64>,
    /// `P(I_3 = I_4 = 1 | I_1 = I_2 = 1)`.
    pub conditional: f64,
    /// `P(I_3 = I_4 = 1 | I_1 = 1)`.
    pub unconditional: f64,
    /// `conditional` compared with `unconditional`.
    pub direction: Direction,
}

/// Builds the four-event pmf by inclusion-exclusion and evaluates the two Palm probabilities.
pub fn reproduce_counterexample_4_7(b: f64, q: f64) -> Result<CounterexampleRecord> {
    // b = 0 makes the conditioning event null
    if !(b.is_finite() && b > 0.0 && b <= 2.0) {
        return invalid(format!("b must lie in (0, 2], found {b}"));
    }
    if !(q.is_finite() && q > 0.0 && q <= 0.01) {
        return invalid(format!("q must lie in (0, 0.01], found {q}"));
    }
    // probability that every event in the set occurs, by set size
    let inter = [1.0, q, b * q * q, b * q * q * q, b * q.powi(4)];
    let mut pmf = vec![0.0; 16];
    for (s, slot) in pmf.iter_mut().enumerate() {
        let mut acc = 0.0;
        for t in (0..16usize).filter(|t| t & s == s) {
            let sign = if (t.count_ones() - s.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * inter[t.count_ones() as usize];
        }
        if acc < 0.0 {
            return invalid(format!("infeasible pmf: outcome {s:04b} has probability {acc}"));
        }
        *slot = acc;
    }
    let prob = |need: usize| -> f64 { pmf.iter().enumerate().filter(|(m, _)| m & need == need).map(|(_, p)| p).sum() };
    let conditional = prob(0b1111) / prob(0b0011);
    let unconditional = prob(0b1101) / prob(0b0001);
    // the closed forms q^2 and b q^2 are exact; compare those so rounding cannot flip equality
    let direction = q.powi(2).total_cmp(&(b * q * q)).into();
    Ok(CounterexampleRecord { b, q, pmf, conditional, unconditional, direction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palm::{check_local_dependence, epsilon1_exact};

    #[test]
    fn remark_values() {
        let r = reproduce_remark_3_7();
        assert!((r.joint - 0.009).abs() < 1e-15);
        assert!((r.factorized - 0.0095).abs() < 1e-15);
        assert!((r.joint - r.joint_closed_form).abs() < 1e-15);
        assert!((r.factorized - r.factorized_closed_form).abs() < 1e-15);
        assert!(r.differ);
        assert_eq!(REMARK_WEIGHTS.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn remark_model_is_locally_dependent() {
        let im = remark_model().unwrap();
        for i in 0..3 {
            assert!((im.p()[i] - 0.1).abs() < 1e-15);
        }
        assert_eq!(check_local_dependence(&im).unwrap(), 0.0);
        assert_eq!(epsilon1_exact(&im).unwrap(), 0.0);
    }

    #[test]
    fn counterexample_values() {
        let r = reproduce_counterexample_4_7(2.0, 0.01).unwrap();
        assert!((r.conditional - 1e-4).abs() < 1e-12);
        assert!((r.unconditional - 2e-4).abs() < 1e-12);
        assert_eq!(r.direction, Direction::Less);
        assert!((r.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(reproduce_counterexample_4_7(1.0, 0.01).unwrap().direction, Direction::Equal);
        assert_eq!(reproduce_counterexample_4_7(0.5, 0.01).unwrap().direction, Direction::Greater);
        assert!(reproduce_counterexample_4_7(3.0, 0.01).is_err());
        assert!(reproduce_counterexample_4_7(0.0, 0.01).is_err());
        assert!(reproduce_counterexample_4_7(2.0, 0.5).is_err());
    }

    #[test]
    fn counterexample_increasing_shift() {
        // E[Φ | I_4 = 1] - E Φ = q (b - 1) [Φ(100) + Φ(010) + Φ(001) - 3 Φ(000)] up to O(q^2)
        let (b, q) = (2.0, 0.001);
        let r = reproduce_counterexample_4_7(b, q).unwrap();
        let phi = |m: usize| f64::from((m & 0b111).count_ones()).min(1.0);
        let p4: f64 = (0..16).filter(|m| m & 8 != 0).map(|m| r.pmf[m]).sum();
        let given: f64 = (0..16).filter(|m| m & 8 != 0).map(|m| r.pmf[m] * phi(m)).sum::<f64>() / p4;
        let plain: f64 = (0..16).map(|m| r.pmf[m] * phi(m)).sum();
        let predicted = q * (b - 1.0) * 3.0;
        assert!((given - plain - predicted).abs() < 20.0 * q * q, "{} vs {predicted}", given - plain);
    }
}
