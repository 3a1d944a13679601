//! Dependent Bernoulli trials with neighbourhoods, independent marks and Palm couplings.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore};

use crate::carrier::{Carrier, CarrierPoint, GroundDistance, PointConfig};
use crate::error::{invalid, misconfigured, Result};
use crate::special::kahan_sum;

/// Largest trial count with an enumerable joint pmf.
pub const MAX_EXACT_TRIALS: usize = 20;

/// Largest total weight of an integer pmf (leaves headroom for `u128` products).
const MAX_TOTAL: u64 = 1 << 62;

/// Joint law of `n <= 20` indicators as integer weights over bitmasks.
///
/// Bit `i` of a mask is `I_i`. Integer weights keep conditional
/// probabilities exact, so identities such as local dependence can be
/// checked without rounding.
#[derive(Clone, PartialEq, Eq)]
pub struct JointPmf {
    n: usize,
    weights: Vec<u64>,
    total: u64,
    cumulative: Vec<u64>,
}

impl fmt::Debug for JointPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JointPmf").field("n", &self.n).field("total", &self.total).finish()
    }
}

impl JointPmf {
    pub fn from_weights(n: usize, weights: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_EXACT_TRIALS {
            return invalid(format!("exact pmfs support 1..={MAX_EXACT_TRIALS} trials, got {n}"));
        }
        if weights.len() != 1 << n {
            return invalid(format!("expected {} weights, got {}", 1usize << n, weights.len()));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut total: u64 = 0;
        for &w in &weights {
            total = total.checked_add(w).filter(|t| *t <= MAX_TOTAL).ok_or_else(|| {
                crate::Error::InvalidInput("pmf weights exceed 2^62 in total".into())
            })?;
            cumulative.push(total);
        }
        if total == 0 {
            return invalid("pmf has zero total weight");
        }
        Ok(Self { n, weights, total, cumulative })
    }

    /// Quantizes a floating-point pmf onto the denominator `2^52`.
    pub fn from_probs(n: usize, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return invalid("pmf entries must be finite and nonnegative");
        }
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("pmf sums to {sum}, not 1"));
        }
        let scale = (1u64 << 52) as f64;
        Self::from_weights(n, probs.iter().map(|p| (p * scale).round() as u64).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.weights[mask] as f64 / self.total as f64
    }

    /// Integer weight of `{I_i = 1}`.
    pub fn weight_of_one(&self, i: usize) -> u64 {
        self.weights.iter().enumerate().filter(|(m, _)| m >> i & 1 == 1).map(|(_, w)| *w).sum()
    }

    pub fn marginal(&self, i: usize) -> f64 {
        self.weight_of_one(i) as f64 / self.total as f64
    }

    pub fn sample_mask<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random_range(0..self.total);
        self.cumulative.partition_point(|&c| c <= u)
    }

    pub fn bits(&self, mask: usize) -> Vec<bool> {
        (0..self.n).map(|i| mask >> i & 1 == 1).collect()
    }
}

#[cfg(test)]
pub(crate) fn mask_of(bits: &[bool]) -> usize {
    bits.iter().enumerate().fold(0, |m, (i, b)| m | (usize::from(*b) << i))
}

/// Integer numerators `w_k` with `probs[k] = w_k / D`, for the smallest
/// denominator `D <= 10^4` with `D^power <= 2^62`, if one exists.
pub(crate) fn rational_weights(probs: &[f64], power: usize) -> Option<(Vec<u64>, u64)> {
    (1u64..=10_000).take_while(|d| (*d as f64).powi(power as i32) <= MAX_TOTAL as f64).find_map(|d| {
        let w: Vec<u64> = probs.iter().map(|p| (p * d as f64).round() as u64).collect();
        let exact = probs.iter().zip(&w).all(|(p, wk)| (p * d as f64 - *wk as f64).abs() < 1e-9);
        exact.then_some((w, d))
    })
}

/// Monotonicity of a Palm coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `J_{ji} = I_j` for all `j != i`.
    Independent,
    /// `J_{ji} <= I_j` for all `j != i`.
    Negative,
    /// `J_{ji} >= I_j` for all `j != i`.
    Positive,
    Unspecified,
}

impl Relation {
    pub fn is_negative(self) -> bool {
        matches!(self, Relation::Independent | Relation::Negative)
    }

    /// Whether a coupled draw respects the declared direction.
    pub fn holds(self, focal: usize, base: &[bool], palm: &[bool]) -> bool {
        let pairs = base.iter().zip(palm).enumerate().filter(|(j, _)| *j != focal);
        match self {
            Relation::Independent => pairs.clone().all(|(_, (a, b))| a == b),
            Relation::Negative => pairs.clone().all(|(_, (a, b))| b <= a),
            Relation::Positive => pairs.clone().all(|(_, (a, b))| b >= a),
            Relation::Unspecified => true,
        }
    }
}

/// Joint law of the indicators, with an optional Palm coupler.
pub trait TrialLaw: Send + Sync {
    fn n(&self) -> usize;

    /// One draw of `(I_1, ..., I_n)`.
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<bool>;

    fn exact_pmf(&self) -> Option<&JointPmf> {
        None
    }

    /// A pair `(I, J_{.i})` on one probability space with `J_{.i} ~ L(I | I_i = 1)`.
    fn couple(&self, _focal: usize, _rng: &mut dyn RngCore) -> Option<(Vec<bool>, Vec<bool>)> {
        None
    }

    fn has_coupler(&self) -> bool {
        false
    }

    /// Exact joint law of the coupled masks `(I, J_{.i})` as `(base, palm, probability)`.
    fn coupling_law(&self, _focal: usize) -> Option<Vec<(usize, usize, f64)>> {
        None
    }

    fn relation(&self) -> Relation {
        Relation::Unspecified
    }

    fn name(&self) -> &'static str;
}

/// Independent trials.
#[derive(Debug, Clone)]
pub struct IndependentLaw {
    p: Vec<f64>,
    pmf: Option<JointPmf>,
}

impl IndependentLaw {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_probabilities(&p)?;
        let pmf = (p.len() <= MAX_EXACT_TRIALS).then(|| product_pmf(&p));
        Ok(Self { p, pmf })
    }
}

fn product_pmf(p: &[f64]) -> JointPmf {
    let n = p.len();
    let probs: Vec<f64> = p.iter().flat_map(|&q| [1.0 - q, q]).collect();
    if let Some((w, _)) = rational_weights(&probs, n).filter(|(w, d)| w.chunks(2).all(|c| c[0] + c[1] == *d)) {
        let weights = (0..1usize << n)
            .map(|m| (0..n).map(|i| w[2 * i + (m >> i & 1)]).product())
            .collect();
        if let Ok(pmf) = JointPmf::from_weights(n, weights) {
            return pmf;
        }
    }
    let probs: Vec<f64> =
        (0..1usize << n).map(|m| (0..n).map(|i| if m >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product()).collect();
    JointPmf::from_probs(n, &probs).expect("product of valid marginals is a pmf")
}

impl TrialLaw for IndependentLaw {
    fn n(&self) -> usize {
        self.p.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<bool> {
        self.p.iter().map(|&q| rng.random::<f64>() < q).collect()
    }

    fn exact_pmf(&self) -> Option<&JointPmf> {
        self.pmf.as_ref()
    }

    fn couple(&self, focal: usize, rng: &mut dyn RngCore) -> Option<(Vec<bool>, Vec<bool>)> {
        let base = self.sample(rng);
        let mut palm = base.clone();
        palm[focal] = true;
        Some((base, palm))
    }

    fn has_coupler(&self) -> bool {
        true
    }

    fn coupling_law(&self, focal: usize) -> Option<Vec<(usize, usize, f64)>> {
        let pmf = self.pmf.as_ref()?;
        Some((0..1usize << self.p.len()).map(|m| (m, m | 1 << focal, pmf.prob(m))).filter(|t| t.2 > 0.0).collect())
    }

    fn relation(&self) -> Relation {
        Relation::Independent
    }

    fn name(&self) -> &'static str {
        "independent"
    }
}

/// Precomputed tables for the maximal outside coupling at one focal trial.
struct FocalTables {
    out_mask: usize,
    /// `W(I_out = o)` and `W(I_out = o, I_i = 1)`.
    outside: HashMap<usize, (u64, u64)>,
    weight_one: u64,
    /// Residual law of `J_out` where the conditional law exceeds the unconditional one.
    residual: Vec<(usize, u128)>,
    /// Masks with bit `i` set, grouped by outside pattern, with cumulative weights.
    groups: HashMap<usize, Vec<(usize, u64)>>,
}

/// Law given by an explicit pmf, with a maximal coupling of the outside indicators.
pub struct ExplicitPmfLaw {
    pmf: JointPmf,
    neighborhoods: Vec<Vec<usize>>,
    tables: Vec<OnceLock<FocalTables>>,
}

impl ExplicitPmfLaw {
    pub fn new(pmf: JointPmf, neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        let n = pmf.n();
        let neighborhoods = normalize_neighborhoods(n, neighborhoods)?;
        Ok(Self { pmf, neighborhoods, tables: (0..n).map(|_| OnceLock::new()).collect() })
    }

    fn tables(&self, i: usize) -> &FocalTables {
        self.tables[i].get_or_init(|| {
            let n = self.pmf.n();
            let inside: usize = self.neighborhoods[i].iter().map(|j| 1usize << j).sum();
            let out_mask = ((1usize << n) - 1) & !inside;
            let mut outside: HashMap<usize, (u64, u64)> = HashMap::new();
            let mut groups: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
            for (m, &w) in self.pmf.weights().iter().enumerate() {
                if w == 0 {
                    continue;
                }
                let e = outside.entry(m & out_mask).or_default();
                e.0 += w;
                if m >> i & 1 == 1 {
                    e.1 += w;
                    let g = groups.entry(m & out_mask).or_default();
                    let acc = g.last().map_or(0, |(_, c)| *c) + w;
                    g.push((m, acc));
                }
            }
            let weight_one = self.pmf.weight_of_one(i);
            let total = self.pmf.total();
            let mut keys: Vec<usize> = outside.keys().copied().collect();
            keys.sort_unstable();
            let mut residual = Vec::new();
            let mut acc: u128 = 0;
            for o in keys {
                let (w_all, w_one) = outside[&o];
                let cond = w_one as u128 * total as u128;
                let base = w_all as u128 * weight_one as u128;
                if cond > base {
                    acc += cond - base;
                    residual.push((o, acc));
                }
            }
            FocalTables { out_mask, outside, weight_one, residual, groups }
        })
    }
}

fn uniform_below_u128(rng: &mut dyn RngCore, bound: u128) -> u128 {
    // `bound` < 2^126 here, so rejection from 127 random bits terminates quickly
    loop {
        let x = ((rng.next_u64() as u128) << 64 | rng.next_u64() as u128) >> 1;
        let limit = (u128::MAX >> 1) - (u128::MAX >> 1) % bound;
        if x < limit {
            return x % bound;
        }
    }
}

impl TrialLaw for ExplicitPmfLaw {
    fn n(&self) -> usize {
        self.pmf.n()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<bool> {
        self.pmf.bits(self.pmf.sample_mask(rng))
    }

    fn exact_pmf(&self) -> Option<&JointPmf> {
        Some(&self.pmf)
    }

    fn couple(&self, focal: usize, rng: &mut dyn RngCore) -> Option<(Vec<bool>, Vec<bool>)> {
        let t = self.tables(focal);
        if t.weight_one == 0 {
            return None;
        }
        let total = self.pmf.total() as u128;
        let x = self.pmf.sample_mask(rng);
        let o = x & t.out_mask;
        let (w_all, w_one) = t.outside[&o];
        // keep the outside pattern with probability min(1, q(o) / p(o))
        let cond = w_one as u128 * total;
        let base = w_all as u128 * t.weight_one as u128;
        let keep = cond >= base || uniform_below_u128(rng, base) < cond;
        let o_palm = if keep {
            o
        } else {
            let mass = t.residual.last().map_or(0, |(_, c)| *c);
            let u = uniform_below_u128(rng, mass);
            t.residual[t.residual.partition_point(|(_, c)| *c <= u)].0
        };
        let group = &t.groups[&o_palm];
        let u = rng.random_range(0..group.last().expect("nonempty group").1);
        let y = group[group.partition_point(|(_, c)| *c <= u)].0;
        Some((self.pmf.bits(x), self.pmf.bits(y)))
    }

    fn has_coupler(&self) -> bool {
        true
    }

    fn coupling_law(&self, focal: usize) -> Option<Vec<(usize, usize, f64)>> {
        let t = self.tables(focal);
        if t.weight_one == 0 {
            return None;
        }
        let total = self.pmf.total() as f64;
        let mass = t.residual.last().map_or(0, |(_, c)| *c) as f64;
        let mut prev = 0u128;
        let residual: Vec<(usize, f64)> = t
            .residual
            .iter()
            .map(|&(o, c)| {
                let w = (c - prev) as f64 / mass;
                prev = c;
                (o, w)
            })
            .collect();
        let mut out = Vec::new();
        for (x, &wx) in self.pmf.weights().iter().enumerate() {
            if wx == 0 {
                continue;
            }
            let o = x & t.out_mask;
            let (w_all, w_one) = t.outside[&o];
            let keep = ((w_one as f64 * total) / (w_all as f64 * t.weight_one as f64)).min(1.0);
            let px = wx as f64 / total;
            let mut targets = vec![(o, keep)];
            if keep < 1.0 {
                targets.extend(residual.iter().map(|&(o2, w)| (o2, (1.0 - keep) * w)));
            }
            for (o2, q) in targets {
                let group = &t.groups[&o2];
                let w_group = group.last().expect("nonempty group").1 as f64;
                let mut prev = 0u64;
                for &(y, c) in group {
                    out.push((x, y, px * q * (c - prev) as f64 / w_group));
                    prev = c;
                }
            }
        }
        Some(out)
    }

    fn name(&self) -> &'static str {
        "explicit-pmf"
    }
}

/// Law of a trial's mark.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkLaw {
    /// A fixed mark.
    Atom(CarrierPoint),
    /// Uniform on the mark carrier (interval or cube).
    Uniform,
}

/// Independent marks of the trials on a common mark space.
#[derive(Debug, Clone, PartialEq)]
pub struct Marks {
    pub carrier: Carrier,
    pub laws: Vec<MarkLaw>,
    /// Ground distance between marks.
    pub ground: GroundDistance,
}

impl Marks {
    /// Mark `i / n` for trial `i` (1-based) on the unit interval.
    pub fn grid(n: usize, ground: GroundDistance) -> Self {
        let laws = (1..=n).map(|i| MarkLaw::Atom(CarrierPoint::Real(i as f64 / n as f64))).collect();
        Self { carrier: Carrier::Interval, laws, ground }
    }

    pub fn uniform(n: usize, carrier: Carrier, ground: GroundDistance) -> Self {
        Self { carrier, laws: vec![MarkLaw::Uniform; n], ground }
    }

    fn draw<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> CarrierPoint {
        match &self.laws[i] {
            MarkLaw::Atom(p) => p.clone(),
            MarkLaw::Uniform => {
                let dim = match self.carrier {
                    Carrier::Cube { dim } => dim,
                    _ => 1,
                };
                let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                CarrierPoint::from_coords(&c).expect("dimension checked at construction")
            }
        }
    }

    /// Lifted ground distance ignoring trial labels.
    pub fn lifted_ground(&self) -> GroundDistance {
        GroundDistance::lifted(self.ground.clone())
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return invalid("need at least one trial");
    }
    if let Some(bad) = p.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return invalid(format!("probability {bad} outside [0, 1]"));
    }
    Ok(())
}

fn normalize_neighborhoods(n: usize, mut neighborhoods: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
    if neighborhoods.len() != n {
        return invalid(format!("{} neighbourhoods for {n} trials", neighborhoods.len()));
    }
    for (i, a) in neighborhoods.iter_mut().enumerate() {
        a.sort_unstable();
        a.dedup();
        if a.binary_search(&i).is_err() {
            return invalid(format!("trial {i} is missing from its own neighbourhood"));
        }
        if a.last().is_some_and(|&j| j >= n) {
            return invalid(format!("neighbourhood of trial {i} refers past the last trial"));
        }
    }
    Ok(neighborhoods)
}

/// Dependent Bernoulli trials `I_i` with neighbourhoods `A_i` (0-based, `i ∈ A_i`).
#[derive(Clone)]
pub struct IndicatorModel {
    p: Vec<f64>,
    neighborhoods: Vec<Vec<usize>>,
    law: Arc<dyn TrialLaw>,
    marks: Option<Marks>,
    locally_dependent: bool,
}

impl fmt::Debug for IndicatorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndicatorModel")
            .field("n", &self.n())
            .field("law", &self.law.name())
            .field("lambda", &self.lambda())
            .field("locally_dependent", &self.locally_dependent)
            .finish()
    }
}

impl IndicatorModel {
    pub fn new(p: Vec<f64>, neighborhoods: Vec<Vec<usize>>, law: Arc<dyn TrialLaw>) -> Result<Self> {
        check_probabilities(&p)?;
        if law.n() != p.len() {
            return invalid(format!("law has {} trials, marginals {}", law.n(), p.len()));
        }
        let neighborhoods = normalize_neighborhoods(p.len(), neighborhoods)?;
        if let Some(pmf) = law.exact_pmf() {
            for (i, &q) in p.iter().enumerate() {
                let exact = pmf.marginal(i);
                if (exact - q).abs() > 1e-9 {
                    return invalid(format!("marginal of trial {i} is {exact}, declared {q}"));
                }
            }
        }
        Ok(Self { p, neighborhoods, law, marks: None, locally_dependent: false })
    }

    /// Independent trials with `A_i = {i}`.
    pub fn independent(p: Vec<f64>) -> Result<Self> {
        let n = p.len();
        let law = Arc::new(IndependentLaw::new(p.clone())?);
        Ok(Self::new(p, (0..n).map(|i| vec![i]).collect(), law)?.assume_locally_dependent())
    }

    /// Trials with an explicit joint pmf; marginals are read off the pmf.
    pub fn from_pmf(pmf: JointPmf, neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        let p = (0..pmf.n()).map(|i| pmf.marginal(i)).collect();
        let law = Arc::new(ExplicitPmfLaw::new(pmf, neighborhoods.clone())?);
        Self::new(p, neighborhoods, law)
    }

    pub fn with_marks(mut self, marks: Marks) -> Result<Self> {
        if marks.laws.len() != self.n() {
            return invalid(format!("{} mark laws for {} trials", marks.laws.len(), self.n()));
        }
        if matches!(marks.carrier, Carrier::Discrete | Carrier::Lifted { .. }) {
            return invalid("marks must live on an interval or cube");
        }
        for law in &marks.laws {
            if let MarkLaw::Atom(p) = law {
                if !marks.carrier.contains(p) {
                    return invalid(format!("mark {p:?} is not on {:?}", marks.carrier));
                }
            }
        }
        marks.ground.check_carrier(&marks.carrier)?;
        self.marks = Some(marks);
        Ok(self)
    }

    /// Declares the trials locally dependent with respect to their neighbourhoods.
    pub fn assume_locally_dependent(mut self) -> Self {
        self.locally_dependent = true;
        self
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `lambda = sum_i p_i`.
    pub fn lambda(&self) -> f64 {
        kahan_sum(self.p.iter().copied())
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn in_neighborhood(&self, i: usize, j: usize) -> bool {
        self.neighborhoods[i].binary_search(&j).is_ok()
    }

    pub fn exact_pmf(&self) -> Option<&JointPmf> {
        self.law.exact_pmf()
    }

    pub fn relation(&self) -> Relation {
        self.law.relation()
    }

    pub fn law_name(&self) -> &'static str {
        self.law.name()
    }

    pub fn marks(&self) -> Option<&Marks> {
        self.marks.as_ref()
    }

    pub fn is_locally_dependent(&self) -> bool {
        self.locally_dependent
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Vec<bool> {
        self.law.sample(rng)
    }

    pub fn has_coupler(&self) -> bool {
        self.law.has_coupler()
    }

    /// Exact joint law of `(I, J_{.i})` when the law can enumerate it.
    pub fn coupling_law(&self, i: usize) -> Option<Vec<(usize, usize, f64)>> {
        self.law.coupling_law(i)
    }

    /// Coupled draw `(I, J_{.i})`; the declared monotone direction is checked on every draw.
    pub fn couple<R: RngCore>(&self, i: usize, rng: &mut R) -> Result<(Vec<bool>, Vec<bool>)> {
        if i >= self.n() {
            return invalid(format!("trial {i} out of range"));
        }
        let Some((base, mut palm)) = self.law.couple(i, rng) else {
            return misconfigured(format!("{} law has no Palm coupler for trial {i}", self.law.name()));
        };
        palm[i] = true;
        if !self.relation().holds(i, &base, &palm) {
            return misconfigured(format!("coupling at trial {i} violates the declared {:?} relation", self.relation()));
        }
        Ok((base, palm))
    }

    /// `V_i = sum_{j ∉ A_i} I_j`.
    pub fn outside_sum(&self, bits: &[bool], i: usize) -> usize {
        let total = bits.iter().filter(|b| **b).count();
        total - self.neighborhoods[i].iter().filter(|&&j| bits[j]).count()
    }
}

/// The lifted configuration `{(U_i, i) : I_i = 1}` with independently drawn marks.
pub fn sample_marked_trials<R: RngCore>(im: &IndicatorModel, rng: &mut R) -> Result<PointConfig> {
    let Some(marks) = im.marks() else {
        return misconfigured("the indicator model has no mark laws");
    };
    let bits = im.sample(rng);
    Ok(marked_config(marks, &bits, rng))
}

pub(crate) fn marked_config<R: Rng + ?Sized>(marks: &Marks, bits: &[bool], rng: &mut R) -> PointConfig {
    let carrier = Carrier::Lifted { marks: Box::new(marks.carrier.clone()) };
    let points = bits
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(i, _)| CarrierPoint::Lifted { mark: Box::new(marks.draw(i, rng)), trial: i as u32 + 1 })
        .collect();
    PointConfig::from_trusted(carrier, points)
}

/// Atoms at `i / n` (1-based `i`) for the indicators that are set.
pub(crate) fn grid_config(bits: &[bool]) -> PointConfig {
    let n = bits.len() as f64;
    let points = bits
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(i, _)| CarrierPoint::Real((i + 1) as f64 / n))
        .collect();
    PointConfig::from_trusted(Carrier::Interval, points)
}
