//! Exact kernels for the discrete distributions behind every test in the crate.
//!
//! Everything combinatorial is evaluated in log space: `C(1029, 8)` already
//! exceeds what naive factorials can hold. Hypergeometric and binomial laws
//! are built from the ratio of successive probabilities and normalized over
//! their support. Sums of probabilities use Neumaier compensated summation,
//! and tails only ever add nonnegative terms.

use crate::error::{domain, Error, Result};

/// Largest excursion outside [0, 1] that is still treated as rounding.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Tolerance on the total mass of a [`DiscreteDist`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Natural logarithm of a probability or of a combinatorial count.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

/// Accepts `v` if it is a probability up to rounding and snaps it into [0, 1].
pub fn clamp_probability(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if (-CLAMP_SLACK..0.0).contains(&v) {
        Ok(0.0)
    } else if v > 1.0 && v <= 1.0 + CLAMP_SLACK {
        Ok(1.0)
    } else {
        Err(Error::Internal(format!("probability {v} outside [0, 1]")))
    }
}

/// `ln C(n, k)`.
///
/// Evaluated as `sum_{i=1}^{m} ln(1 + (n - m)/i)` with `m = min(k, n - k)`,
/// a sum of positive terms, so the relative error stays at a few ulps even
/// when `C(n, k)` is small and `n` is large.
pub fn log_binomial(n: u64, k: u64) -> Result<LogWeight> {
    if k > n {
        return domain(format!("log_binomial: k = {k} exceeds n = {n}"));
    }
    let m = k.min(n - k);
    let rest = (n - m) as f64;
    let sum: CompensatedSum = (1..=m).map(|i| (rest / i as f64).ln_1p()).collect();
    Ok(LogWeight(sum.value()))
}

/// Normalized log pmf over a support of `len` points, from the log ratios
/// `ln p(i+1) - ln p(i)` of a unimodal law.
///
/// Weights are accumulated outward from the mode, so the points carrying the
/// mass have small log weights and keep their full relative precision.
fn ln_pmf_from_ratios(len: usize, ln_ratio: impl Fn(usize) -> f64) -> Vec<f64> {
    let ratios: Vec<f64> = (0..len - 1).map(ln_ratio).collect();
    let mode = ratios.iter().take_while(|&&lr| lr > 0.0).count();
    let mut weights = vec![0.0; len];
    let mut acc = CompensatedSum::new();
    for i in mode..len - 1 {
        acc.add(ratios[i]);
        weights[i + 1] = acc.value();
    }
    let mut acc = CompensatedSum::new();
    for i in (0..mode).rev() {
        acc.add(-ratios[i]);
        weights[i] = acc.value();
    }
    let z: CompensatedSum = weights.iter().map(|w| w.exp()).collect();
    let ln_z = z.value().ln();
    weights.into_iter().map(|w| w - ln_z).collect()
}

/// `sum_{x >= x_min} pmf(x)` over the support `lo..=hi`. Only nonnegative
/// terms are added, so the result is monotone in `x_min` and never suffers
/// cancellation.
fn support_tail(lo: u64, hi: u64, x_min: u64, pmf: impl Fn(u64) -> f64) -> Result<f64> {
    if x_min <= lo {
        return Ok(1.0);
    }
    if x_min > hi {
        return Ok(0.0);
    }
    let upper: CompensatedSum = (x_min..=hi).rev().map(&pmf).collect();
    clamp_probability(upper.value())
}

/// The conditional distribution of the suspect's incident count: `n` shifts
/// of which `r` are the suspect's, `k` incidents placed uniformly at random.
///
/// Log weights come from the ratio `p(x+1)/p(x)` summed across the support
/// and are normalized once, so the pmf sums to 1 to rounding even when
/// `ln C(n, k)` is in the thousands.
#[derive(Debug, Clone)]
pub struct Hypergeometric {
    n: u64,
    r: u64,
    k: u64,
    ln_pmf: Vec<f64>,
}

impl Hypergeometric {
    pub fn new(n: u64, r: u64, k: u64) -> Result<Self> {
        if r > n {
            return domain(format!("hypergeometric: r = {r} exceeds n = {n}"));
        }
        if k > n {
            return domain(format!("hypergeometric: k = {k} exceeds n = {n}"));
        }
        let lo = k.saturating_sub(n - r);
        let hi = r.min(k);
        let ln_pmf = ln_pmf_from_ratios((hi - lo + 1) as usize, |i| {
            let x = lo + i as u64;
            // x >= lo keeps (n - r) + x + 1 - k positive
            (((r - x) as f64 / (x + 1) as f64) * ((k - x) as f64 / ((n - r) + x + 1 - k) as f64)).ln()
        });
        Ok(Self { n, r, k, ln_pmf })
    }

    pub fn support_min(&self) -> u64 {
        self.k.saturating_sub(self.n - self.r)
    }

    pub fn support_max(&self) -> u64 {
        self.r.min(self.k)
    }

    pub fn ln_pmf(&self, x: u64) -> f64 {
        if x < self.support_min() || x > self.support_max() {
            return f64::NEG_INFINITY;
        }
        self.ln_pmf[(x - self.support_min()) as usize]
    }

    /// `C(r, x) C(n - r, k - x) / C(n, k)`; zero off the support.
    pub fn pmf(&self, x: u64) -> f64 {
        self.ln_pmf(x).exp()
    }

    /// `P(X >= x_min)`.
    pub fn tail(&self, x_min: u64) -> Result<f64> {
        support_tail(self.support_min(), self.support_max(), x_min, |x| {
            self.pmf(x)
        })
    }

    pub fn to_dist(&self) -> DiscreteDist {
        let lo = self.support_min();
        let probabilities = (lo..=self.support_max()).map(|x| self.pmf(x)).collect();
        DiscreteDist {
            support_min: lo as i64,
            probabilities,
        }
    }
}

pub fn hypergeom_pmf(n: u64, r: u64, k: u64, x: u64) -> Result<f64> {
    let h = Hypergeometric::new(n, r, k)?;
    clamp_probability(h.pmf(x))
}

pub fn hypergeom_tail(n: u64, r: u64, k: u64, x_min: u64) -> Result<f64> {
    Hypergeometric::new(n, r, k)?.tail(x_min)
}

fn check_success_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        domain(format!("success probability {p} outside [0, 1]"))
    }
}

/// Binomial probabilities for every `x` in `0..=trials`.
fn binomial_pmfs(trials: u64, p: f64) -> Vec<f64> {
    let n = trials as usize;
    if p == 0.0 || p == 1.0 {
        let mut v = vec![0.0; n + 1];
        v[if p == 0.0 { 0 } else { n }] = 1.0;
        return v;
    }
    let ln_odds = p.ln() - (-p).ln_1p();
    ln_pmf_from_ratios(n + 1, |x| ((trials - x as u64) as f64 / (x + 1) as f64).ln() + ln_odds)
        .into_iter()
        .map(f64::exp)
        .collect()
}

pub fn binomial_pmf(trials: u64, p: f64, x: u64) -> Result<f64> {
    check_success_prob(p)?;
    if x > trials {
        return Ok(0.0);
    }
    clamp_probability(binomial_pmfs(trials, p)[x as usize])
}

/// `P(X >= x_min)` for `X ~ Binomial(trials, p)`.
pub fn binomial_tail(trials: u64, p: f64, x_min: u64) -> Result<f64> {
    check_success_prob(p)?;
    if x_min > trials + 1 {
        return domain(format!("x_min = {x_min} exceeds trials + 1 = {}", trials + 1));
    }
    let pmf = binomial_pmfs(trials, p);
    support_tail(0, trials, x_min, |x| pmf[x as usize])
}

/// `P(X <= x_max)` for `X ~ Binomial(trials, p)`.
pub fn binomial_lower_tail(trials: u64, p: f64, x_max: u64) -> Result<f64> {
    check_success_prob(p)?;
    if x_max >= trials {
        return Ok(1.0);
    }
    let sum: CompensatedSum = binomial_pmfs(trials, p)[..=x_max as usize].iter().copied().collect();
    clamp_probability(sum.value())
}

/// `e^{-mean} mean^k / k!`.
pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    Ok(poisson_ln_pmf(mean, k)?.exp())
}

pub fn poisson_ln_pmf(mean: f64, k: u64) -> Result<f64> {
    if !mean.is_finite() || mean < 0.0 {
        return domain(format!("poisson mean {mean} must be finite and >= 0"));
    }
    if mean == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let ln_k_fact: CompensatedSum = (2..=k).map(|i| (i as f64).ln()).collect();
    let ln = [-mean, k as f64 * mean.ln(), -ln_k_fact.value()]
        .into_iter()
        .collect::<CompensatedSum>()
        .value();
    Ok(ln)
}

/// Survival function of the chi-squared distribution with an even number of
/// degrees of freedom, `Q = e^{-x/2} sum_{j<dof/2} (x/2)^j / j!`.
pub fn chi2_survival_even(x: f64, dof: u64) -> Result<f64> {
    if dof == 0 || !dof.is_multiple_of(2) {
        return domain(format!("chi2_survival_even needs an even positive dof, got {dof}"));
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("chi-squared statistic {x} must be >= 0"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let half = x / 2.0;
    let ln_half = half.ln();
    let mut ln_j_fact = CompensatedSum::new();
    let mut sum = CompensatedSum::new();
    for j in 0..dof / 2 {
        if j > 0 {
            ln_j_fact.add((j as f64).ln());
        }
        sum.add((-half + j as f64 * ln_half - ln_j_fact.value()).exp());
    }
    clamp_probability(sum.value())
}

/// A probability mass function on a contiguous integer support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    support_min: i64,
    probabilities: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(support_min: i64, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return domain("distribution needs at least one support point");
        }
        if let Some(bad) = probabilities.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return domain(format!("probability entry {bad} is not a finite non-negative number"));
        }
        let total: CompensatedSum = probabilities.iter().copied().collect();
        if (total.value() - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return domain(format!("probabilities sum to {}, not 1", total.value()));
        }
        Ok(Self {
            support_min,
            probabilities,
        })
    }

    pub fn hypergeometric(n: u64, r: u64, k: u64) -> Result<Self> {
        Ok(Hypergeometric::new(n, r, k)?.to_dist())
    }

    pub fn support_min(&self) -> i64 {
        self.support_min
    }

    pub fn support_max(&self) -> i64 {
        self.support_min + self.probabilities.len() as i64 - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn pmf(&self, x: i64) -> f64 {
        if x < self.support_min || x > self.support_max() {
            0.0
        } else {
            self.probabilities[(x - self.support_min) as usize]
        }
    }

    pub fn tail(&self, x_min: i64) -> Result<f64> {
        if x_min <= self.support_min {
            return Ok(1.0);
        }
        let sum: CompensatedSum = (x_min..=self.support_max()).map(|x| self.pmf(x)).collect();
        clamp_probability(sum.value())
    }

    /// Distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let len = self.probabilities.len() + other.probabilities.len() - 1;
        let mut acc = vec![CompensatedSum::new(); len];
        for (i, p) in self.probabilities.iter().enumerate() {
            for (j, q) in other.probabilities.iter().enumerate() {
                acc[i + j].add(p * q);
            }
        }
        Self::new(
            self.support_min + other.support_min,
            acc.iter().map(CompensatedSum::value).collect(),
        )
    }
}

/// `P(X1 + X2 >= s_min)` by summing the joint mass over both supports.
pub fn convolve_tail(d1: &DiscreteDist, d2: &DiscreteDist, s_min: i64) -> Result<f64> {
    if s_min <= d1.support_min() + d2.support_min() {
        return Ok(1.0);
    }
    let mut sum = CompensatedSum::new();
    for x1 in d1.support_min()..=d1.support_max() {
        let p1 = d1.pmf(x1);
        for x2 in (s_min - x1).max(d2.support_min())..=d2.support_max() {
            sum.add(p1 * d2.pmf(x2));
        }
    }
    clamp_probability(sum.value())
}
