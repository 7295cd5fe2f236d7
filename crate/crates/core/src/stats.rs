//! Summary statistics and the small set of tests the harness relies on:
//! Kolmogorov-Smirnov (one and two sample), DKW bands, Wilson intervals and
//! one-sided sign tests for monotone trends.

use serde::Serialize;

use crate::{Error, Result};

/// Minimum sample size accepted by the KS routines.
pub const KS_MIN_SAMPLE: usize = 30;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(xs), p)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Median of the means of `blocks` consecutive blocks.
pub fn median_of_means(xs: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.clamp(1, xs.len().max(1));
    let per = xs.len() / blocks;
    let means: Vec<f64> = (0..blocks).map(|b| mean(&xs[b * per..(b + 1) * per])).collect();
    median(&means)
}

/// Fraction of the sorted sample that is `<= x`.
pub fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov distribution tail `Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let t = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * t;
        if t < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a KS statistic `d` at effective sample size `ne`.
pub fn ks_p_value(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLE {
            return Err(Error::SampleTooSmall { got: s.len(), min: KS_MIN_SAMPLE });
        }
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, na * nb / (na + nb)) })
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if a.len() < KS_MIN_SAMPLE {
        return Err(Error::SampleTooSmall { got: a.len(), min: KS_MIN_SAMPLE });
    }
    let a = sorted(a);
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n) })
}

/// DKW half-width: `P(sup |F_n - F| > eps) <= alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `P(Bin(m, 1/2) >= k)`.
pub fn sign_test_p(k: usize, m: usize) -> f64 {
    let mut total = 0.0;
    let mut coef = 1.0f64;
    for i in 0..=m {
        if i > 0 {
            coef = coef * (m - i + 1) as f64 / i as f64;
        }
        if i >= k {
            total += coef;
        }
    }
    total / 2f64.powi(m as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub values: Vec<f64>,
    /// Consecutive pairs moving in the tested direction.
    pub agreeing: usize,
    pub pairs: usize,
    /// One-sided sign-test p-value.
    pub sign_p: f64,
    /// Every consecutive pair moves in the tested direction.
    pub monotone: bool,
}

fn trend(values: &[f64], down: bool) -> TrendReport {
    let pairs = values.len().saturating_sub(1);
    let agreeing = values
        .windows(2)
        .filter(|w| if down { w[1] < w[0] } else { w[1] > w[0] })
        .count();
    TrendReport {
        values: values.to_vec(),
        agreeing,
        pairs,
        sign_p: sign_test_p(agreeing, pairs),
        monotone: pairs > 0 && agreeing == pairs,
    }
}

pub fn trend_decreasing(values: &[f64]) -> TrendReport {
    trend(values, true)
}

pub fn trend_increasing(values: &[f64]) -> TrendReport {
    trend(values, false)
}
