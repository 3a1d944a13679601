//! Small numeric helpers: compensated sums, log-space binomial terms,
//! Poisson pmfs and summary statistics.

use statrs::function::factorial::ln_factorial;

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

fn ln_fact(k: u64) -> f64 {
    ln_factorial(k)
}

/// `x * ln(p)` with the convention `0 * ln(0) = 0`.
fn xlogy(x: u64, p: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * p.ln()
    }
}

/// `P(X = k)` for `X ~ Binomial(s, p)`, evaluated in log space.
pub fn binomial_pmf(s: u64, p: f64, k: u64) -> f64 {
    if k > s {
        return 0.0;
    }
    let ln = ln_fact(s) - ln_fact(k) - ln_fact(s - k) + xlogy(k, p) + xlogy(s - k, 1.0 - p);
    ln.exp()
}

/// `P(X <= m)` for `X ~ Binomial(s, p)`.
pub fn binomial_cdf(s: u64, p: f64, m: u64) -> f64 {
    if m >= s {
        return 1.0;
    }
    kahan_sum((0..=m).map(|k| binomial_pmf(s, p, k))).min(1.0)
}

/// `P(X = a, Y = b)` for `(X, Y, rest) ~ Multinomial(s; p, q, 1 - p - q)`.
pub fn trinomial_pmf(s: u64, p: f64, q: f64, a: u64, b: u64) -> f64 {
    if a + b > s {
        return 0.0;
    }
    let rest = s - a - b;
    let ln = ln_fact(s) - ln_fact(a) - ln_fact(b) - ln_fact(rest)
        + xlogy(a, p)
        + xlogy(b, q)
        + xlogy(rest, (1.0 - p - q).max(0.0));
    ln.exp()
}

/// `P(X <= m, Y <= m)` for the first two cells of a trinomial.
pub fn trinomial_joint_cdf(s: u64, p: f64, q: f64, m: u64) -> f64 {
    let mut acc = KahanSum::new();
    for a in 0..=m.min(s) {
        for b in 0..=m.min(s - a) {
            acc.add(trinomial_pmf(s, p, q, a, b));
        }
    }
    acc.value()
}

/// `P(N = k)` for `N ~ Poisson(lambda)`.
pub fn poisson_pmf_at(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (xlogy(k, lambda) - lambda - ln_fact(k)).exp()
}

/// Poisson pmf truncated at the smallest `K` beyond the mode whose upper tail
/// mass is below `1e-12`.
pub fn poisson_pmf(lambda: f64) -> Vec<f64> {
    let mut pmf = Vec::new();
    let mut cumulative = KahanSum::new();
    let mut k = 0u64;
    loop {
        let pk = poisson_pmf_at(lambda, k);
        pmf.push(pk);
        cumulative.add(pk);
        if k as f64 > lambda && 1.0 - cumulative.value() < 1e-12 {
            break;
        }
        k += 1;
    }
    pmf
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Default, Clone, Copy)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail_matches_enumeration() {
        // s=2, p=0.5: P(X<=1) = 1/4 + 1/2
        assert!((binomial_cdf(2, 0.5, 1) - 0.75).abs() < 1e-14);
        assert!((binomial_cdf(10, 0.3, 0) - 0.7f64.powi(10)).abs() < 1e-14);
        assert_eq!(binomial_cdf(5, 0.3, 5), 1.0);
    }

    #[test]
    fn trinomial_marginal_sums_to_binomial() {
        let (s, p, q) = (12, 0.2, 0.3);
        let mut total = 0.0;
        for b in 0..=s {
            total += trinomial_pmf(s, p, q, 2, b);
        }
        assert!((total - binomial_pmf(s, p, 2)).abs() < 1e-14);
    }

    #[test]
    fn poisson_pmf_is_normalized_with_tiny_tail() {
        for lambda in [0.5, 1.0, 10.0, 146.5] {
            let pmf = poisson_pmf(lambda);
            let total = kahan_sum(pmf.iter().copied());
            assert!((1.0 - total).abs() < 1e-11, "lambda={lambda} total={total}");
        }
        assert_eq!(poisson_pmf(0.0)[0], 1.0);
    }

    #[test]
    fn kahan_recovers_small_addends() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-15)).abs() < 1e-17);
    }
}
