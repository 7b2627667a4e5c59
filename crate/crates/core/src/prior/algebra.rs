//! Closed-form relations between R², τ², the hyperparameters, and the moments
//! of the variance decomposition.

use super::GroupStructure;
use crate::error::{ensure, Result};
use crate::specfun::trigamma;

/// `R² = τ² / (τ² + 1)`.
pub fn tau2_to_r2(tau2: f64) -> Result<f64> {
    ensure(tau2.is_finite() && tau2 >= 0.0, "tau2_to_r2", || format!("tau2 = {tau2} must be finite and >= 0"))?;
    Ok(tau2 / (tau2 + 1.0))
}

/// `τ² = R² / (1 - R²)`.
pub fn r2_to_tau2(r2: f64) -> Result<f64> {
    ensure((0.0..1.0).contains(&r2), "r2_to_tau2", || format!("r2 = {r2} must lie in [0, 1)"))?;
    Ok(r2 / (1.0 - r2))
}

/// Beta shapes `(a1, a2) = (μν, (1-μ)ν)` from the mean and precision of R².
pub fn beta_shapes_from_mean_precision(mu: f64, nu: f64) -> Result<(f64, f64)> {
    ensure(mu > 0.0 && mu < 1.0, "beta_shapes_from_mean_precision", || format!("mu = {mu} must lie in (0, 1)"))?;
    ensure(nu.is_finite() && nu > 0.0, "beta_shapes_from_mean_precision", || {
        format!("nu = {nu} must be positive")
    })?;
    Ok((mu * nu, (1.0 - mu) * nu))
}

/// Inverse of [`beta_shapes_from_mean_precision`].
pub fn mean_precision_from_beta_shapes(a1: f64, a2: f64) -> Result<(f64, f64)> {
    ensure(a1 > 0.0 && a2 > 0.0, "mean_precision_from_beta_shapes", || {
        format!("shapes ({a1}, {a2}) must be positive")
    })?;
    Ok((a1 / (a1 + a2), a1 + a2))
}

/// `c_g = a_G / p_g`, which makes `λ²_gl ~ BetaPrime(c_g, a2)`.
pub fn couple_cg_from_ag(a_g: f64, p_g: usize) -> Result<f64> {
    ensure(a_g.is_finite() && a_g > 0.0 && p_g >= 1, "couple_cg_from_ag", || {
        format!("need a_G > 0 and p_g >= 1, got ({a_g}, {p_g})")
    })?;
    Ok(a_g / p_g as f64)
}

/// `a_G = (1/G) Σ_g p_g c_g`.
pub fn couple_ag_from_cg(structure: &GroupStructure, c: &[f64]) -> Result<f64> {
    ensure(c.len() == structure.n_groups(), "couple_ag_from_cg", || {
        format!("{} concentrations for {} groups", c.len(), structure.n_groups())
    })?;
    ensure(c.iter().all(|&v| v.is_finite() && v > 0.0), "couple_ag_from_cg", || {
        format!("concentrations must be positive, got {c:?}")
    })?;
    let s: f64 = structure.sizes().iter().zip(c).map(|(&p, &cg)| p as f64 * cg).sum();
    Ok(s / structure.n_groups() as f64)
}

/// `E[(R_g²)^k]` where `R_g² = φ_g R²`, `φ_g ~ Beta(α_g, α₀ - α_g)` and
/// `R² ~ Beta(a1, a2)` independently.
pub fn rg2_moment(k: u32, alpha_g: f64, alpha0: f64, a1: f64, a2: f64) -> Result<f64> {
    ensure(alpha_g > 0.0 && alpha0 >= alpha_g && a1 > 0.0 && a2 > 0.0, "rg2_moment", || {
        format!("need alpha0 >= alpha_g > 0 and a1, a2 > 0; got ({alpha_g}, {alpha0}, {a1}, {a2})")
    })?;
    let mut m = 1.0;
    for i in 0..k {
        let i = i as f64;
        m *= (alpha_g + i) / (alpha0 + i) * (a1 + i) / (a1 + a2 + i);
    }
    Ok(m)
}

/// Correlation of `log(φ_g φ_gj)` and `log(φ_g φ_gk)`, `j ≠ k`.
///
/// With one group `φ_g ≡ 1` and the group terms cancel.
pub fn log_variance_correlation(a_g: f64, n_groups: usize, c_g: f64, p_g: usize) -> Result<f64> {
    ensure(a_g > 0.0 && c_g > 0.0 && n_groups >= 1 && p_g >= 2, "log_variance_correlation", || {
        format!("need a_G, c_g > 0, G >= 1, p_g >= 2; got ({a_g}, {n_groups}, {c_g}, {p_g})")
    })?;
    let group = if n_groups == 1 { 0.0 } else { trigamma(a_g)? - trigamma(n_groups as f64 * a_g)? };
    let within_total = trigamma(p_g as f64 * c_g)?;
    Ok((group - within_total) / (group + trigamma(c_g)? - within_total))
}

/// `Cov(φ_g φ_gj, φ_g φ_gk)` for `j ≠ k`.
///
/// Uses `E[φ_gj φ_gk] = c_g / (p_g (c_g p_g + 1))`; the form with `c_g²/p_g²`
/// in the numerator disagrees with simulation.
pub fn variance_covariance(a_g: f64, n_groups: usize, c_g: f64, p_g: usize) -> Result<f64> {
    ensure(a_g > 0.0 && c_g > 0.0 && n_groups >= 1 && p_g >= 2, "variance_covariance", || {
        format!("need a_G, c_g > 0, G >= 1, p_g >= 2; got ({a_g}, {n_groups}, {c_g}, {p_g})")
    })?;
    let g = n_groups as f64;
    let p = p_g as f64;
    let e_phi2 = a_g * (a_g + 1.0) / (g * a_g * (g * a_g + 1.0));
    let e_pair = c_g / (p * (c_g * p + 1.0));
    Ok(e_phi2 * e_pair - 1.0 / (g * g * p * p))
}
