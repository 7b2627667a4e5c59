#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{Beta, ContinuousCDF};

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

pub fn beta_cdf(s1: f64, s2: f64) -> impl Fn(f64) -> f64 {
    let b = Beta::new(s1, s2).unwrap();
    move |x| b.cdf(x)
}

/// CDF of BetaPrime(s1, s2), through `x / (1 + x) ~ Beta(s1, s2)`.
pub fn betaprime_cdf(s1: f64, s2: f64) -> impl Fn(f64) -> f64 {
    let b = Beta::new(s1, s2).unwrap();
    move |x| b.cdf(x / (1.0 + x))
}

/// Symmetric Dirichlet by normalized gammas, in log space for stability.
pub fn dirichlet<R: Rng>(alpha: f64, k: usize, rng: &mut R) -> Vec<f64> {
    let g = Gamma::new(alpha + 1.0, 1.0).unwrap();
    let logs: Vec<f64> = (0..k)
        .map(|_| g.sample(rng).ln() + rng.random::<f64>().max(f64::MIN_POSITIVE).ln() / alpha)
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    logs.iter().map(|l| (l - m).exp() / s).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    covariance(xs, ys) / (covariance(xs, xs) * covariance(ys, ys)).sqrt()
}

/// Trapezoid rule for `∫ exp(f(u)) du` over `[lo, hi]`, computed as a log.
pub fn ln_trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let n = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| f(lo + i as f64 * h)).collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = vals.iter().enumerate().map(|(i, v)| {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        w * (v - m).exp()
    }).sum();
    m + (s * h).ln()
}

/// Horseshoe marginal `∫ N(b; 0, λ²) (2/π) / (1 + λ²) dλ`, by the trapezoid
/// rule in `ln λ`.
pub fn horseshoe_marginal(b: f64) -> f64 {
    let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln();
    let f = |u: f64| {
        let l2 = (2.0 * u).exp();
        ln_norm - u - 0.5 * b * b / l2 + (2.0 / std::f64::consts::PI).ln() - l2.ln_1p() + u
    };
    ln_trapezoid(f, -60.0, 40.0, 0.01).exp()
}
