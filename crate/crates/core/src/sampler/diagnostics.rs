//! Rank-normalized split-R̂ and bulk effective sample size.

use crate::error::{Error, Result};
use crate::specfun::norm_ppf;

fn check(chains: &[Vec<f64>]) -> Result<usize> {
    let n = chains.first().map_or(0, Vec::len);
    if chains.is_empty() || n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::domain("diagnostics", "need equal-length chains with at least 4 draws each"));
    }
    if chains.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("diagnostics", "draws must be finite"));
    }
    Ok(n)
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let first = chains[0][0];
    chains.iter().flatten().all(|&v| v == first)
}

/// Each chain cut into two halves (the middle draw of an odd chain is dropped).
fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = chains[0].len();
    let half = n / 2;
    chains.iter().flat_map(|c| [c[..half].to_vec(), c[n - half..].to_vec()]).collect()
}

/// Normal scores of the pooled ranks, ties sharing their average rank.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut idx: Vec<(f64, usize, usize)> =
        chains.iter().enumerate().flat_map(|(c, v)| v.iter().enumerate().map(move |(i, &x)| (x, c, i))).collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s = idx.len() as f64;
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && idx[j + 1].0 == idx[i].0 {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        let z = norm_ppf((rank - 0.375) / (s + 0.25));
        for &(_, c, k) in &idx[i..=j] {
            out[c][k] = z;
        }
        i = j + 1;
    }
    out
}

fn basic_rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Rank-normalized split-R̂: the larger of the bulk and folded (tail) values.
///
/// Identical values everywhere give 1 by convention, with a warning.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    if chains.len() < 2 {
        return Err(Error::domain("rhat", "need at least two chains"));
    }
    if is_constant(chains) {
        log::warn!("rhat: all draws are identical; reporting 1");
        return Ok(1.0);
    }
    let sp = split(chains);
    let bulk = basic_rhat(&rank_normalize(&sp));
    let mut pooled: Vec<f64> = sp.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let k = pooled.len();
    let median = if k % 2 == 1 { pooled[k / 2] } else { 0.5 * (pooled[k / 2 - 1] + pooled[k / 2]) };
    let folded: Vec<Vec<f64>> = sp.iter().map(|c| c.iter().map(|v| (v - median).abs()).collect()).collect();
    let tail = basic_rhat(&rank_normalize(&folded));
    Ok(bulk.max(tail))
}

/// Autocorrelation-based ESS with Geyer's initial monotone sequence.
fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = chains.iter().zip(&means).map(|(c, mu)| c.iter().map(|v| v - mu).collect()).collect();
    // mean over chains of the biased autocovariance at `lag`
    let acov = |lag: usize| -> f64 {
        centered.iter().map(|c| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64).sum::<f64>()
            / m as f64
    };
    let acov0 = acov(0);
    let mean_var = acov0 * n as f64 / (n as f64 - 1.0);
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        let g = means.iter().sum::<f64>() / m as f64;
        var_plus += means.iter().map(|v| (v - g).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    }
    let rho = |lag: usize| 1.0 - (mean_var - acov(lag)) / var_plus;

    let mut rho_hat = vec![1.0, rho(1)];
    let (mut even, mut odd) = (1.0, rho_hat[1]);
    let mut s = 1;
    while s + 4 < n && even + odd > 0.0 {
        even = rho(s + 1);
        odd = rho(s + 2);
        if even + odd >= 0.0 {
            rho_hat.push(even);
            rho_hat.push(odd);
        }
        s += 2;
    }
    let max_s = rho_hat.len() - 1;
    let mut tail = 0.0;
    if even > 0.0 && even + odd < 0.0 {
        tail = even;
    }
    // make the paired sums non-increasing
    let mut k = 1;
    while k + 2 <= max_s {
        let prev = rho_hat[k - 1] + rho_hat[k];
        if rho_hat[k + 1] + rho_hat[k + 2] > prev {
            rho_hat[k + 1] = prev / 2.0;
            rho_hat[k + 2] = prev / 2.0;
        }
        k += 2;
    }
    let total = (m * n) as f64;
    let tau = (-1.0 + 2.0 * rho_hat.iter().sum::<f64>() + tail).max(1.0 / total.log10());
    total / tau
}

/// Bulk effective sample size: ESS of the rank-normalized split chains.
///
/// Identical values everywhere give the number of draws by convention, with a
/// warning.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    if is_constant(chains) {
        log::warn!("ess: all draws are identical; reporting the draw count");
        return Ok(chains.iter().map(Vec::len).sum::<usize>() as f64);
    }
    Ok(ess_raw(&rank_normalize(&split(chains))))
}

/// ESS of the split draws without rank normalization, the count behind Monte
/// Carlo standard errors of means.
pub fn ess_mean(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    let total = chains.iter().map(Vec::len).sum::<usize>() as f64;
    if is_constant(chains) {
        return Ok(total);
    }
    Ok(ess_raw(&split(chains)).min(total * total.log10()))
}

/// Monte Carlo standard error of the mean.
pub fn mcse_mean(chains: &[Vec<f64>]) -> Result<f64> {
    check(chains)?;
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let total = all.len() as f64;
    let mu = all.iter().sum::<f64>() / total;
    let sd = (all.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (total - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok(0.0);
    }
    Ok(sd / ess_mean(chains)?.sqrt())
}
