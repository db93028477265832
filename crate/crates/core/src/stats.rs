//! Normal distribution helpers and the Kolmogorov–Smirnov statistic.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level {p} outside (0, 1)");
    Normal::standard().inverse_cdf(p)
}

/// Two-sided critical value `z_{α/2}`.
pub fn z_alpha(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// `sup_x |F_n(x) − Φ(x)|` for the empirical CDF of `zs`.
pub fn ks_statistic(zs: &[f64]) -> f64 {
    assert!(!zs.is_empty(), "ks_statistic needs at least one value");
    let mut sorted = zs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}
