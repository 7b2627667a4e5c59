//! Shrinkage factors `κ = 1/(1+λ²)` and the effective number of nonzero
//! coefficients `m_eff = Σ (1 - κ)`.

use crate::error::{ensure, Error, Result};
use crate::prior::{sample_prior, GroupStructure, Hyperparams, LogDensity, PriorDraw};
use crate::rng::stream;
use crate::specfun::quad::{integrate, QuadOptions};
use crate::specfun::{hyp_2f1, ln_beta, ln_gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shrinkage summary of one prior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageDraw {
    pub kappa: Vec<f64>,
    pub meff_group: Vec<f64>,
    pub meff_total: f64,
}

impl ShrinkageDraw {
    pub fn from_draw(draw: &PriorDraw, structure: &GroupStructure) -> Result<Self> {
        let kappa = draw.lambda2.iter().map(|&l| kappa_from_lambda2(l)).collect::<Result<Vec<_>>>()?;
        let meff_group = meff_groups(&kappa, structure)?;
        let meff_total = meff_group.iter().sum();
        Ok(Self { kappa, meff_group, meff_total })
    }
}

pub fn kappa_from_lambda2(lambda2: f64) -> Result<f64> {
    ensure(lambda2 >= 0.0, "kappa_from_lambda2", || format!("lambda2 = {lambda2} must be >= 0"))?;
    Ok(1.0 / (1.0 + lambda2))
}

/// Posterior mean `(1 - κ) y` in the normal-means model.
pub fn posterior_mean_normal_means(y: f64, kappa: f64) -> Result<f64> {
    ensure((0.0..=1.0).contains(&kappa), "posterior_mean_normal_means", || {
        format!("kappa = {kappa} must lie in [0, 1]")
    })?;
    Ok((1.0 - kappa) * y)
}

/// `E[κ^m | τ_g²] = 2F1(m, c_g; c_g p_g; -τ_g²)`.
pub fn kappa_moment_conditional(m: u32, c_g: f64, p_g: usize, tau_g2: f64) -> Result<f64> {
    ensure(m >= 1 && c_g > 0.0 && p_g >= 1 && tau_g2 >= 0.0, "kappa_moment_conditional", || {
        format!("need m >= 1, c_g > 0, p_g >= 1, tau_g2 >= 0; got ({m}, {c_g}, {p_g}, {tau_g2})")
    })?;
    hyp_2f1(m as f64, c_g, c_g * p_g as f64, -tau_g2)
}

fn kappa_kernel(kappa_g: &[f64], c_g: f64) -> f64 {
    kappa_g.iter().map(|&k| (c_g - 1.0) * (-k).ln_1p() - (c_g + 1.0) * k.ln()).sum()
}

fn check_kappas(op: &'static str, kappa_g: &[f64]) -> Result<()> {
    ensure(!kappa_g.is_empty() && kappa_g.iter().all(|&k| k > 0.0 && k < 1.0), op, || {
        format!("kappa values must lie in (0, 1), got {kappa_g:?}")
    })
}

/// Log density of `κ_g` given `τ_g²`, with respect to the surface measure
/// `δ(Σ (1-κ)/κ - τ_g²) dκ` on which the vector lives.
///
/// It is the push-forward of `φ_g ~ Dir(c_g)` through `κ = 1/(1 + φ τ_g²)`:
///
/// ```text
/// Γ(p c) / Γ(c)^p · (τ_g²)^{1 - p c} · ∏ (1-κ)^{c-1} κ^{-(c+1)}
/// ```
///
/// Off-surface input is a domain error.
pub fn kappa_joint_logdensity_conditional(kappa_g: &[f64], tau_g2: f64, c_g: f64) -> Result<f64> {
    const OP: &str = "kappa_joint_logdensity_conditional";
    check_kappas(OP, kappa_g)?;
    ensure(tau_g2 > 0.0 && c_g > 0.0, OP, || format!("need tau_g2, c_g > 0, got ({tau_g2}, {c_g})"))?;
    let total: f64 = kappa_g.iter().map(|k| (1.0 - k) / k).sum();
    let resid = total - tau_g2;
    ensure(resid.abs() <= 1e-8 * tau_g2.max(1.0), OP, || {
        format!("kappa_g is off the constraint surface: Σ(1-κ)/κ - τ² = {resid:e}")
    })?;
    let p = kappa_g.len() as f64;
    Ok(ln_gamma(p * c_g)? - p * ln_gamma(c_g)? + (1.0 - p * c_g) * tau_g2.ln() + kappa_kernel(kappa_g, c_g))
}

/// Joint log density of `κ_g` with the group scale integrated out,
/// `τ_g² ~ BetaPrime(a_G, a2)`:
///
/// ```text
/// Γ(p c) / (Γ(c)^p B(a_G, a2)) · ∏ (1-κ)^{c-1} κ^{-(c+1)} · T^{a_G - p c} (1+T)^{-a_G-a2}
/// ```
///
/// with `T = Σ (1-κ)/κ`. Proper for every `a_G > 0`.
pub fn kappa_joint_logdensity(kappa_g: &[f64], c_g: f64, a_g: f64, a2: f64) -> Result<f64> {
    const OP: &str = "kappa_joint_logdensity";
    check_kappas(OP, kappa_g)?;
    ensure(c_g > 0.0 && a_g > 0.0 && a2 > 0.0, OP, || {
        format!("shapes must be positive, got (c_g, a_G, a2) = ({c_g}, {a_g}, {a2})")
    })?;
    let p = kappa_g.len() as f64;
    let t: f64 = kappa_g.iter().map(|k| (1.0 - k) / k).sum();
    Ok(ln_gamma(p * c_g)? - p * ln_gamma(c_g)? - ln_beta(a_g, a2)?
        + kappa_kernel(kappa_g, c_g)
        + (a_g - p * c_g) * t.ln()
        - (a_g + a2) * t.ln_1p())
}

/// Marginal log density of one shrinkage factor, `κ ~ Beta(a2, c_g)`, which
/// holds when `λ² ~ BetaPrime(c_g, a2)`, i.e. under `c_g p_g = a_G`.
///
/// Without that coupling the marginal has no closed form and a domain error is
/// returned. At the boundaries a shape below 1 gives a pole.
pub fn kappa_marginal_logdensity(kappa: f64, c_g: f64, a_g: f64, p_g: usize, a2: f64) -> Result<LogDensity> {
    const OP: &str = "kappa_marginal_logdensity";
    ensure((0.0..=1.0).contains(&kappa), OP, || format!("kappa = {kappa} must lie in [0, 1]"))?;
    ensure(c_g > 0.0 && a_g > 0.0 && a2 > 0.0 && p_g >= 1, OP, || {
        format!("need positive shapes and p_g >= 1, got ({c_g}, {a_g}, {p_g}, {a2})")
    })?;
    let coupled = c_g * p_g as f64;
    ensure((coupled - a_g).abs() <= 1e-12 * a_g.max(1.0), OP, || {
        format!("closed form needs c_g p_g = a_G, got c_g p_g = {coupled}, a_G = {a_g}")
    })?;
    let edge = |shape: f64| {
        if shape < 1.0 {
            LogDensity::Pole
        } else if shape == 1.0 {
            LogDensity::Finite(-ln_beta(a2, c_g).unwrap_or(f64::NAN))
        } else {
            LogDensity::Finite(f64::NEG_INFINITY)
        }
    };
    if kappa == 0.0 {
        return Ok(edge(a2));
    }
    if kappa == 1.0 {
        return Ok(edge(c_g));
    }
    Ok(LogDensity::Finite((a2 - 1.0) * kappa.ln() + (c_g - 1.0) * (-kappa).ln_1p() - ln_beta(a2, c_g)?))
}

/// `m_eff = Σ (1 - κ_i)`.
pub fn meff(kappa: &[f64]) -> Result<f64> {
    ensure(kappa.iter().all(|k| (0.0..=1.0).contains(k)), "meff", || {
        "kappa values must lie in [0, 1]".to_string()
    })?;
    Ok(kappa.iter().map(|k| 1.0 - k).sum())
}

/// Per-group `m_eff,g`; they sum to [`meff`].
pub fn meff_groups(kappa: &[f64], structure: &GroupStructure) -> Result<Vec<f64>> {
    ensure(kappa.len() == structure.p(), "meff_groups", || {
        format!("{} kappa values for {} coefficients", kappa.len(), structure.p())
    })?;
    (0..structure.n_groups()).map(|g| meff(&kappa[structure.range(g)])).collect()
}

const MEFF_SHARD: usize = 1024;

/// `n_sims` prior predictive draws of `(m_eff,1, ..., m_eff,G)`.
///
/// Work is split into fixed shards of 1024 draws, each using its own stream of
/// `seed`, so the output does not depend on the number of threads.
pub fn prior_predictive_meff(
    hyper: &Hyperparams,
    structure: &GroupStructure,
    n_sims: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    ensure(n_sims >= 1, "prior_predictive_meff", || "n_sims must be >= 1".into())?;
    Ok(prior_predictive(hyper, structure, n_sims, seed)?.into_iter().map(|d| d.meff_group).collect())
}

/// One prior predictive draw: R² and the per-group effective sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDraw {
    pub r2: f64,
    pub meff_group: Vec<f64>,
}

/// Like [`prior_predictive_meff`], keeping R² as well; `n_sims = 0` gives no
/// draws. The `m_eff` values are identical to those of
/// [`prior_predictive_meff`] for the same seed.
pub fn prior_predictive(
    hyper: &Hyperparams,
    structure: &GroupStructure,
    n_sims: usize,
    seed: u64,
) -> Result<Vec<PredictiveDraw>> {
    hyper.check_structure(structure)?;
    let n_shards = n_sims.div_ceil(MEFF_SHARD);
    let shards: Vec<Result<Vec<PredictiveDraw>>> = (0..n_shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, s as u64);
            let count = MEFF_SHARD.min(n_sims - s * MEFF_SHARD);
            (0..count)
                .map(|_| {
                    let d = sample_prior(hyper, structure, &mut rng)?;
                    Ok(PredictiveDraw { r2: d.r2(), meff_group: ShrinkageDraw::from_draw(&d, structure)?.meff_group })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n_sims);
    for shard in shards {
        out.extend(shard?);
    }
    Ok(out)
}

/// Marginal density of `y` in the normal-means model `y ~ N(b, 1)` under the
/// horseshoe `b ~ N(0, λ²)`, `λ ~ C⁺(0, 1)`:
///
/// ```text
/// m(y) = (2π³)^{-1/2} ∫₀¹ exp(-y² z / 2) (1 - z)^{-1/2} dz
///      = (2π³)^{-1/2} ∫₀¹ 2 exp(-y² (1 - s²) / 2) ds
/// ```
///
/// which equals `e^{-y²/2} erfi(y/√2) / (π y)` and decays like `1/y²`.
pub fn horseshoe_nm_marginal(y: f64) -> Result<f64> {
    let (m, _) = horseshoe_nm_parts(y)?;
    Ok(m)
}

/// `E[b | y] = y + d/dy log m(y)` for the horseshoe normal-means model.
pub fn horseshoe_nm_posterior_mean(y: f64) -> Result<f64> {
    let (m, dm) = horseshoe_nm_parts(y)?;
    Ok(y + dm / m)
}

fn horseshoe_nm_parts(y: f64) -> Result<(f64, f64)> {
    if !y.is_finite() {
        return Err(Error::domain("horseshoe_nm", format!("y = {y} must be finite")));
    }
    let c = 2.0 / (2.0 * std::f64::consts::PI.powi(3)).sqrt();
    let h = 0.5 * y * y;
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 500 };
    // the integrand concentrates near s = 1 for large y; scale by e^{-h(1-s²)} at s = 1
    let m = integrate(|s: f64| (-h * (1.0 - s * s)).exp(), 0.0, 1.0, opts)?.value;
    let dm = integrate(|s: f64| -y * (1.0 - s * s) * (-h * (1.0 - s * s)).exp(), 0.0, 1.0, opts)?.value;
    Ok((c * m, c * dm))
}
