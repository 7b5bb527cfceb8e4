//! Sampling primitives and the small amount of statistics the test
//! harnesses and scans need.

use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, Normal};

use crate::rng::RandomStream;

/// Draws from Poisson(`lambda`). Inversion for small means, `rand_distr`
/// otherwise.
pub fn poisson(lambda: f64, rng: &mut RandomStream) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 20.0 {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u >= cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p < 1e-300 && cdf < u {
                // u beyond representable tail mass; the remaining tail is < 1e-16
                break;
            }
        }
        k
    } else {
        Poisson::new(lambda).expect("finite positive mean").sample(rng) as u64
    }
}

/// Number of failures before the first success when each trial continues
/// with probability `survival`; `P(n) = (1 - survival) survival^n`.
#[inline]
pub fn geometric(survival: f64, rng: &mut RandomStream) -> u64 {
    if survival <= 0.0 {
        return 0;
    }
    let u = rng.uniform_open0();
    let n = (u.ln() / survival.ln()).floor();
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        n as u64
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval { lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the 95% Wilson interval.
pub fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    let iv = wilson(successes, trials, Z95);
    (iv.hi - iv.lo) / 2.0
}

/// Standard error of a binomial proportion evaluated at probability `p`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// One-sided Clopper-Pearson upper confidence bound at level `confidence`.
pub fn binomial_upper_bound(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    let beta = Beta::new(successes as f64 + 1.0, (trials - successes) as f64).expect("valid beta parameters");
    beta.inverse_cdf(confidence)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Summary {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Self {
        // Welford
        let mut n = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Summary { n, mean, variance }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance / self.n as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn chi2_upper_tail(stat: f64, dof: f64) -> f64 {
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    1.0 - chi.cdf(stat)
}

/// Two-sample chi-square homogeneity test on categorical counts. Categories
/// empty in both samples are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> TestOutcome {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cats = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let total = (x + y) as f64;
        if total == 0.0 {
            continue;
        }
        cats += 1;
        let ea = total * na as f64 / n;
        let eb = total * nb as f64 / n;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = (cats.max(2) - 1) as f64;
    TestOutcome { statistic: stat, dof, p_value: chi2_upper_tail(stat, dof) }
}

/// Poisson dispersion test: under Poisson(`mean`), `sum (x - mean)^2 / mean`
/// is approximately chi-square with `n` degrees of freedom. The mean is the
/// hypothesised one, so both a wrong mean and over/under-dispersion show up.
/// Returns the two-sided p-value.
pub fn poisson_dispersion_test(counts: &[u64], mean: f64) -> TestOutcome {
    let n = counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    let upper = chi2_upper_tail(stat, n);
    let p_value = (2.0 * upper.min(1.0 - upper)).min(1.0);
    TestOutcome { statistic: stat, dof: n, p_value }
}
