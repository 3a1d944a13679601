//! Palindromes in i.i.d. DNA: `I_i = 1` when a palindrome of length at least `2L` is centred at base `i + L - 1`.
//!
//! Bases are coded `A = 0, C = 1, G = 2, T = 3`, so the Watson-Crick complement
//! of `x` is `3 - x`; code 4 stands for an unknown base and never pairs.

use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::trials::{grid_config, rational_weights, IndicatorModel, JointPmf, Marks, TrialLaw, MAX_EXACT_TRIALS};
use crate::carrier::{Geometry, GroundDistance, PointConfig};
use crate::error::{invalid, Result};

/// Unknown base.
pub const BASE_N: u8 = 4;

/// Largest dense DP table used for exact pmfs.
const MAX_DP_STATES: usize = 1 << 24;

#[inline]
fn pairs(a: u8, b: u8) -> bool {
    a < BASE_N && b < BASE_N && a + b == 3
}

/// I.i.d. bases of a sequence of length `M`, scanned for `2L`-palindromes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalindromeModel {
    /// Sequence length `M`.
    pub length: usize,
    /// Half-length `L`.
    pub half: usize,
    /// Probabilities of A, C, G, T.
    pub probs: [f64; 4],
}

impl PalindromeModel {
    pub fn new(length: usize, half: usize, probs: [f64; 4]) -> Result<Self> {
        if half == 0 {
            return invalid("half-length L must be at least 1");
        }
        if length < 2 * half {
            return invalid(format!("sequence length {length} is shorter than 2L = {}", 2 * half));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return invalid("base probabilities must form a distribution");
        }
        let out = Self { length, half, probs };
        let theta = out.theta();
        if !(theta > 0.0 && theta < 1.0) {
            return invalid(format!("theta = {theta} must lie strictly between 0 and 1"));
        }
        Ok(out)
    }

    pub fn uniform(length: usize, half: usize) -> Result<Self> {
        Self::new(length, half, [0.25; 4])
    }

    /// Number of possible centres `n = M - 2L + 1`.
    pub fn n(&self) -> usize {
        self.length - 2 * self.half + 1
    }

    /// `theta = 2 (p_A p_T + p_C p_G)`.
    pub fn theta(&self) -> f64 {
        let [a, c, g, t] = self.probs;
        2.0 * (a * t + c * g)
    }

    /// `p_i = theta^L`.
    pub fn p(&self) -> f64 {
        self.theta().powi(self.half as i32)
    }

    /// `lambda = n theta^L`.
    pub fn lambda(&self) -> f64 {
        self.n() as f64 * self.p()
    }

    /// Flags of the side condition `p_A = p_T`, `p_C = p_G`, `4 <= L <= n / 500`.
    pub fn assumption_flags(&self) -> Vec<(String, bool)> {
        let [a, c, g, t] = self.probs;
        vec![
            ("p_A = p_T".into(), a == t),
            ("p_C = p_G".into(), c == g),
            ("4 <= L".into(), self.half >= 4),
            ("L <= n/500".into(), self.half as f64 <= self.n() as f64 / 500.0),
        ]
    }

    /// Neighbourhoods `A_i = {j : |i - j| <= 2L - 1}` truncated to the centres.
    pub fn neighborhoods(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let w = 2 * self.half - 1;
        (0..n).map(|i| (i.saturating_sub(w)..(i + w + 1).min(n)).collect()).collect()
    }

    /// `P(I_i = I_{i+d} = 1)`, exactly, by solving the complementarity constraints.
    ///
    /// Each constraint says two positions hold complementary bases. In a
    /// connected set of constrained positions the bases alternate between some
    /// `x` and its complement, so the set contributes `sum_x p_x^e p_{3-x}^o`
    /// (with `e`, `o` the two colour class sizes), or 0 if the constraints
    /// force a base to equal its own complement.
    pub fn pair_probability(&self, d: usize) -> f64 {
        let l = self.half;
        let span = 2 * l + d;
        let mut parent: Vec<usize> = (0..span).collect();
        // parity of each node relative to its parent
        let mut parity = vec![0u8; span];
        fn find(parent: &mut [usize], parity: &mut [u8], x: usize) -> (usize, u8) {
            if parent[x] == x {
                return (x, 0);
            }
            let (root, par) = find(parent, parity, parent[x]);
            parity[x] ^= par;
            parent[x] = root;
            (root, parity[x])
        }
        let mut consistent = true;
        for start in [0, d] {
            let c0 = start + l - 1;
            for k in 1..=l {
                let (a, b) = (c0 + 1 - k, c0 + k);
                let (ra, pa) = find(&mut parent, &mut parity, a);
                let (rb, pb) = find(&mut parent, &mut parity, b);
                if ra == rb {
                    consistent &= pa != pb;
                } else {
                    parent[ra] = rb;
                    parity[ra] = pa ^ pb ^ 1;
                }
            }
        }
        if !consistent {
            return 0.0;
        }
        let mut classes: std::collections::HashMap<usize, (i32, i32)> = std::collections::HashMap::new();
        for x in 0..span {
            let (root, par) = find(&mut parent, &mut parity, x);
            let e = classes.entry(root).or_default();
            if par == 0 {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        classes
            .values()
            .map(|&(even, odd)| (0..4).map(|x| self.probs[x].powi(even) * self.probs[3 - x].powi(odd)).sum::<f64>())
            .product()
    }

    /// `b_2 = sum_i sum_{j ∈ A_i, j != i} p_ij`, exactly.
    pub fn b2_exact(&self) -> f64 {
        let n = self.n();
        let w = 2 * self.half - 1;
        (1..=w.min(n.saturating_sub(1))).map(|d| 2.0 * (n - d) as f64 * self.pair_probability(d)).sum()
    }

    /// `b_1 = sum_i sum_{j ∈ A_i} p_i p_j` with truncated neighbourhoods.
    pub fn b1_exact(&self) -> f64 {
        let p = self.p();
        self.neighborhoods().iter().map(|a| a.len() as f64).sum::<f64>() * p * p
    }

    pub fn indicator_model(&self) -> Result<IndicatorModel> {
        let n = self.n();
        let law = Arc::new(PalindromeLaw::new(self.clone()));
        Ok(IndicatorModel::new(vec![self.p(); n], self.neighborhoods(), law)?
            .with_marks(Marks::grid(n, GroundDistance::capped(Geometry::Box)))?
            .assume_locally_dependent())
    }

    fn pair_table(&self) -> [f64; 4] {
        let theta = self.theta();
        let mut acc = 0.0;
        let mut out = [0.0; 4];
        for (x, o) in out.iter_mut().enumerate() {
            acc += self.probs[x] * self.probs[3 - x] / theta;
            *o = acc;
        }
        out
    }
}

/// I.i.d. bases with the model's probabilities.
pub fn sample_dna<R: Rng + ?Sized>(pm: &PalindromeModel, rng: &mut R) -> Vec<u8> {
    let mut seq = Vec::with_capacity(pm.length);
    if pm.probs == [0.25; 4] {
        while seq.len() < pm.length {
            let mut word = rng.next_u64();
            for _ in 0..32.min(pm.length - seq.len()) {
                seq.push((word & 3) as u8);
                word >>= 2;
            }
        }
        return seq;
    }
    let mut cdf = [0.0; 4];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(pm.probs) {
        acc += p;
        *c = acc;
    }
    for _ in 0..pm.length {
        let u: f64 = rng.random();
        seq.push(cdf.iter().position(|&c| u < c).unwrap_or(3) as u8);
    }
    seq
}

/// `I_i` for every centre `i` (0-based word start) of `seq`.
pub fn palindrome_indicators(seq: &[u8], half: usize) -> Vec<bool> {
    if half == 0 || seq.len() < 2 * half {
        return Vec::new();
    }
    (0..=seq.len() - 2 * half)
        .map(|start| {
            let c0 = start + half - 1;
            (1..=half).all(|k| pairs(seq[c0 + 1 - k], seq[c0 + k]))
        })
        .collect()
}

/// A sampled sequence with its palindrome process on `{i/n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PalindromeSample {
    pub seq: Vec<u8>,
    pub indicators: Vec<bool>,
    pub xi: PointConfig,
}

impl PalindromeSample {
    pub fn from_sequence(seq: Vec<u8>, half: usize) -> Self {
        let indicators = palindrome_indicators(&seq, half);
        let xi = grid_config(&indicators);
        Self { seq, indicators, xi }
    }

    pub fn draw<R: Rng + ?Sized>(pm: &PalindromeModel, rng: &mut R) -> Self {
        Self::from_sequence(sample_dna(pm, rng), pm.half)
    }
}

/// Palindrome indicators; the Palm coupling resamples the focal word as a palindrome.
pub struct PalindromeLaw {
    model: PalindromeModel,
    pair_cdf: [f64; 4],
    pmf: OnceLock<Option<JointPmf>>,
}

impl PalindromeLaw {
    pub fn new(model: PalindromeModel) -> Self {
        let pair_cdf = model.pair_table();
        Self { model, pair_cdf, pmf: OnceLock::new() }
    }

    fn exact(&self) -> Option<JointPmf> {
        let pm = &self.model;
        let n = pm.n();
        let w = 2 * pm.half - 1;
        let windows = 4usize.checked_pow(w as u32)?;
        if n > MAX_EXACT_TRIALS || windows.checked_mul(1 << n)? > MAX_DP_STATES {
            return None;
        }
        match rational_weights(&pm.probs, pm.length) {
            Some((wts, d)) if wts.iter().sum::<u64>() == d => {
                let wts: [u64; 4] = wts.try_into().ok()?;
                JointPmf::from_weights(n, transfer(pm, &wts, 0u64)).ok()
            }
            _ => {
                let probs = transfer(pm, &pm.probs, 0.0f64);
                JointPmf::from_probs(n, &probs).ok()
            }
        }
    }
}

/// Joint weights of the indicator masks by a transfer matrix over the last `2L - 1` bases.
fn transfer<T>(pm: &PalindromeModel, base_weight: &[T; 4], zero: T) -> Vec<T>
where
    T: Copy + PartialEq + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    let l = pm.half;
    let w = 2 * l - 1;
    let n = pm.n();
    let windows = 4usize.pow(w as u32);
    let masks = 1usize << n;
    // state: window code (oldest base in the highest digit) + mask * windows
    let mut cur = vec![zero; windows * masks];
    let mut next = vec![zero; windows * masks];
    // seed with all prefixes of length w
    for code in 0..windows {
        let mut weight: Option<T> = None;
        for k in 0..w {
            let b = (code >> (2 * k)) & 3;
            weight = Some(match weight {
                None => base_weight[b],
                Some(x) => x * base_weight[b],
            });
        }
        cur[code] = weight.expect("w >= 1");
    }
    // hit[code * 4 + b]: the window followed by base b is a palindrome word
    let hit: Vec<bool> = (0..windows * 4)
        .map(|cb| {
            let (code, b) = (cb / 4, cb % 4);
            let mut word: Vec<u8> = (0..w).rev().map(|k| ((code >> (2 * k)) & 3) as u8).collect();
            word.push(b as u8);
            (1..=l).all(|k| pairs(word[l - k], word[l - 1 + k]))
        })
        .collect();
    for i in 0..n {
        next.iter_mut().for_each(|x| *x = zero);
        for mask in 0..(1usize << i) {
            for code in 0..windows {
                let v = cur[code + mask * windows];
                if v == zero {
                    continue;
                }
                for b in 0..4 {
                    let wb = base_weight[b];
                    if wb == zero {
                        continue;
                    }
                    let new_mask = mask | (usize::from(hit[code * 4 + b]) << i);
                    let new_code = ((code << 2) | b) & (windows - 1);
                    let slot = &mut next[new_code + new_mask * windows];
                    *slot = *slot + v * wb;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    (0..masks).map(|mask| (0..windows).fold(zero, |acc, code| acc + cur[code + mask * windows])).collect()
}

impl TrialLaw for PalindromeLaw {
    fn n(&self) -> usize {
        self.model.n()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<bool> {
        palindrome_indicators(&sample_dna(&self.model, rng), self.model.half)
    }

    fn exact_pmf(&self) -> Option<&JointPmf> {
        self.pmf.get_or_init(|| self.exact()).as_ref()
    }

    fn couple(&self, focal: usize, rng: &mut dyn RngCore) -> Option<(Vec<bool>, Vec<bool>)> {
        let l = self.model.half;
        let seq = sample_dna(&self.model, rng);
        let mut palm = seq.clone();
        let c0 = focal + l - 1;
        for k in 1..=l {
            let u: f64 = rng.random();
            let x = self.pair_cdf.iter().position(|&c| u < c).unwrap_or(3) as u8;
            palm[c0 + 1 - k] = x;
            palm[c0 + k] = 3 - x;
        }
        Some((palindrome_indicators(&seq, l), palindrome_indicators(&palm, l)))
    }

    fn has_coupler(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "palindrome"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn encode(s: &str) -> Vec<u8> {
        s.bytes()
            .map(|c| match c {
                b'A' => 0,
                b'C' => 1,
                b'G' => 2,
                b'T' => 3,
                _ => BASE_N,
            })
            .collect()
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(palindrome_indicators(&encode("AT"), 1), vec![true]);
        assert_eq!(palindrome_indicators(&encode("AA"), 1), vec![false]);
        assert_eq!(palindrome_indicators(&encode("NN"), 1), vec![false]);
        // GAATTC is a 6-palindrome centred at its third base; it also contains AATT and AT
        let seq = encode("GAATTC");
        assert_eq!(palindrome_indicators(&seq, 3), vec![true]);
        assert_eq!(palindrome_indicators(&seq, 2), vec![false, true, false]);
        assert_eq!(palindrome_indicators(&seq, 1), vec![false, false, true, false, false]);
    }

    #[test]
    fn uniform_theta_and_lambda() {
        let pm = PalindromeModel::uniform(150_000, 5).unwrap();
        assert_eq!(pm.theta(), 0.25);
        assert!((pm.lambda() - 149_991.0 / 1024.0).abs() < 1e-9);
        assert!(!pm.assumption_flags().iter().all(|(_, ok)| *ok) || pm.half >= 4);
        assert!(PalindromeModel::new(3, 2, [0.25; 4]).is_err());
        assert!(PalindromeModel::new(10, 1, [0.5, 0.0, 0.5, 0.0]).is_err());
    }

    #[test]
    fn empirical_marginal_is_theta_to_the_l() {
        let pm = PalindromeModel::new(40, 2, [0.3, 0.2, 0.2, 0.3]).unwrap();
        let mut rng = substream(1, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| palindrome_indicators(&sample_dna(&pm, &mut rng), 2)[7]).count();
        let p = pm.p();
        let f = hits as f64 / n as f64;
        assert!((f - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn pair_probability_against_enumeration() {
        // every sequence of length 2L + d over a skewed alphabet
        let pm = PalindromeModel::new(12, 2, [0.1, 0.2, 0.3, 0.4]).unwrap();
        for d in 0..=4 {
            let span = 4 + d;
            let mut exact = 0.0;
            for code in 0..4usize.pow(span as u32) {
                let seq: Vec<u8> = (0..span).map(|k| ((code >> (2 * k)) & 3) as u8).collect();
                let ind = palindrome_indicators(&seq, 2);
                if ind[0] && ind[d] {
                    exact += seq.iter().map(|&b| pm.probs[b as usize]).product::<f64>();
                }
            }
            assert!((pm.pair_probability(d) - exact).abs() < 1e-15, "d = {d}");
        }
        assert!((pm.pair_probability(0) - pm.p()).abs() < 1e-15);
    }

    #[test]
    fn transfer_pmf_matches_enumeration() {
        let pm = PalindromeModel::uniform(7, 2).unwrap();
        let law = PalindromeLaw::new(pm.clone());
        let pmf = law.exact_pmf().unwrap();
        assert_eq!(pmf.total(), 4u64.pow(7));
        let mut counts = vec![0u64; 1 << pm.n()];
        for code in 0..4usize.pow(7) {
            let seq: Vec<u8> = (0..7).map(|k| ((code >> (2 * k)) & 3) as u8).collect();
            let mask = palindrome_indicators(&seq, 2).iter().enumerate().map(|(i, b)| usize::from(*b) << i).sum::<usize>();
            counts[mask] += 1;
        }
        assert_eq!(pmf.weights(), &counts[..]);

        let skew = PalindromeModel::new(6, 1, [0.1, 0.4, 0.4, 0.1]).unwrap();
        let pmf = PalindromeLaw::new(skew.clone()).exact_pmf().unwrap().clone();
        for i in 0..skew.n() {
            assert!((pmf.marginal(i) - skew.p()).abs() < 1e-12);
        }
    }

    #[test]
    fn palm_word_is_a_palindrome_and_far_indicators_agree() {
        let pm = PalindromeModel::uniform(60, 3).unwrap();
        let im = pm.indicator_model().unwrap();
        let mut rng = substream(2, &[]);
        for focal in [0, 17, pm.n() - 1] {
            for _ in 0..200 {
                let (base, palm) = im.couple(focal, &mut rng).unwrap();
                assert!(palm[focal]);
                for j in 0..pm.n() {
                    if !im.in_neighborhood(focal, j) {
                        assert_eq!(base[j], palm[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn neighborhoods_are_truncated_windows() {
        let pm = PalindromeModel::uniform(20, 2).unwrap();
        let a = pm.neighborhoods();
        assert_eq!(a[0], vec![0, 1, 2, 3]);
        assert_eq!(a[8], (5..=11).collect::<Vec<_>>());
        assert!((pm.b1_exact() - a.iter().map(Vec::len).sum::<usize>() as f64 / 256.0).abs() < 1e-15);
    }
}
