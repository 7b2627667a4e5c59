//! Closed-form prior densities of the scales and coefficients.

use super::LogDensity;
use crate::error::{ensure, Result};
use crate::specfun::{ln_beta, ln_gamma, ln_hyp_u};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log density of `BetaPrime(s1, s2)` at `x > 0`.
pub fn betaprime_logpdf(x: f64, s1: f64, s2: f64) -> Result<f64> {
    ensure(x > 0.0 && x.is_finite(), "betaprime_logpdf", || format!("x = {x} must be positive"))?;
    ensure(s1 > 0.0 && s2 > 0.0, "betaprime_logpdf", || format!("shapes ({s1}, {s2}) must be positive"))?;
    Ok((s1 - 1.0) * x.ln() - (s1 + s2) * x.ln_1p() - ln_beta(s1, s2)?)
}

/// `ln ∫ N(b; 0, φ t) ... BetaPrime(t; shape, a2) dt` for `p` coefficients
/// sharing the scale `t`, written through `Γ(η) U(η, ν, z)`.
fn scale_mixture(p: usize, sum_sq_over_phi: f64, sum_ln_phi: f64, shape: f64, a2: f64) -> Result<LogDensity> {
    let pf = p as f64;
    let eta = a2 + 0.5 * pf;
    let nu = 1.0 + 0.5 * pf - shape;
    let z = 0.5 * sum_sq_over_phi;
    let base = -pf * HALF_LN_2PI - 0.5 * sum_ln_phi - ln_beta(shape, a2)? + ln_gamma(eta)?;
    if z == 0.0 {
        // U(η, ν, 0) is finite only for ν < 1
        if nu >= 1.0 {
            return Ok(LogDensity::Pole);
        }
        let ln_u0 = ln_gamma(1.0 - nu)? - ln_gamma(eta - nu + 1.0)?;
        return Ok(LogDensity::Finite(base + ln_u0));
    }
    Ok(LogDensity::Finite(base + ln_hyp_u(eta, nu, z)?))
}

/// Marginal log density of a single coefficient with `λ² ~ BetaPrime(c_g, a2)`
/// (`σ = 1`).
///
/// At `b = 0` the density is unbounded for `c_g <= 1/2` and a
/// [`LogDensity::Pole`] is returned.
pub fn marginal_b_logdensity(b: f64, c_g: f64, a2: f64) -> Result<LogDensity> {
    ensure(b.is_finite(), "marginal_b_logdensity", || format!("b = {b} must be finite"))?;
    ensure(c_g > 0.0 && a2 > 0.0 && c_g.is_finite() && a2.is_finite(), "marginal_b_logdensity", || {
        format!("shapes (c_g, a2) = ({c_g}, {a2}) must be positive")
    })?;
    scale_mixture(1, b * b, 0.0, c_g, a2)
}

/// Joint log density of the coefficients of one group given the within-group
/// proportions `varphi_g`, when the group scale `τ_g²` is `BetaPrime(c_g, a2)`.
///
/// `z_g = Σ b²_gl / (2 φ_gl)`. An all-zero `b_g` is a pole when `c_g <= p_g/2`.
pub fn joint_group_logdensity(b_g: &[f64], varphi_g: &[f64], c_g: f64, a2: f64) -> Result<LogDensity> {
    let p = b_g.len();
    ensure(p >= 1 && varphi_g.len() == p, "joint_group_logdensity", || {
        format!("b_g has {p} entries but varphi_g has {}", varphi_g.len())
    })?;
    ensure(b_g.iter().all(|b| b.is_finite()), "joint_group_logdensity", || "b_g must be finite".into())?;
    let total: f64 = varphi_g.iter().sum();
    ensure(varphi_g.iter().all(|&v| v > 0.0) && (total - 1.0).abs() < 1e-8, "joint_group_logdensity", || {
        format!("varphi_g must be a positive simplex, sums to {total}")
    })?;
    ensure(c_g > 0.0 && a2 > 0.0, "joint_group_logdensity", || {
        format!("shapes (c_g, a2) = ({c_g}, {a2}) must be positive")
    })?;
    let ssq: f64 = b_g.iter().zip(varphi_g).map(|(b, v)| b * b / v).sum();
    let sum_ln_phi: f64 = varphi_g.iter().map(|v| v.ln()).sum();
    scale_mixture(p, ssq, sum_ln_phi, c_g, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn betaprime_values() {
        assert_relative_eq!(betaprime_logpdf(1.0, 1.0, 1.0).unwrap(), 0.25f64.ln(), max_relative = 1e-14);
        // 40-digit reference
        assert_relative_eq!(
            betaprime_logpdf(0.7, 0.5, 0.5).unwrap(),
            -1.497_020_664_942_204_4,
            max_relative = 1e-13
        );
        assert!(betaprime_logpdf(0.0, 1.0, 1.0).unwrap_err().is_domain());
    }

    #[test]
    fn betaprime_mode() {
        let (s1, s2) = (3.0, 2.0);
        let mode = (s1 - 1.0) / (s2 + 1.0);
        let h = 1e-4;
        assert!(betaprime_logpdf(mode - h, s1, s2).unwrap() < betaprime_logpdf(mode, s1, s2).unwrap());
        assert!(betaprime_logpdf(mode + h, s1, s2).unwrap() < betaprime_logpdf(mode, s1, s2).unwrap());
    }

    #[test]
    fn marginal_is_even_and_poles_at_origin() {
        let l = marginal_b_logdensity(0.83, 0.3, 0.5).unwrap().value();
        let r = marginal_b_logdensity(-0.83, 0.3, 0.5).unwrap().value();
        assert_eq!(l, r);
        assert!(marginal_b_logdensity(0.0, 0.5, 0.5).unwrap().is_pole());
        assert!(marginal_b_logdensity(0.0, 0.2, 0.5).unwrap().is_pole());
        let at0 = marginal_b_logdensity(0.0, 0.75, 0.5).unwrap().value();
        // the approach is like |b|^{2c-1}
        let near = marginal_b_logdensity(1e-20, 0.75, 0.5).unwrap().value();
        assert_relative_eq!(at0, near, max_relative = 1e-8);
    }

    #[test]
    fn joint_reduces_to_marginal_for_one_coefficient() {
        let j = joint_group_logdensity(&[0.4], &[1.0], 0.3, 0.7).unwrap().value();
        let m = marginal_b_logdensity(0.4, 0.3, 0.7).unwrap().value();
        assert_relative_eq!(j, m, max_relative = 1e-10);
    }

    #[test]
    fn joint_is_permutation_invariant_and_poles() {
        let a = joint_group_logdensity(&[0.1, -0.5, 2.0], &[0.2, 0.3, 0.5], 0.4, 0.5).unwrap().value();
        let b = joint_group_logdensity(&[2.0, 0.1, -0.5], &[0.5, 0.2, 0.3], 0.4, 0.5).unwrap().value();
        assert_relative_eq!(a, b, max_relative = 1e-13);
        assert!(joint_group_logdensity(&[0.0; 3], &[0.2, 0.3, 0.5], 1.0, 0.5).unwrap().is_pole());
        assert!(!joint_group_logdensity(&[0.0; 3], &[0.2, 0.3, 0.5], 2.0, 0.5).unwrap().is_pole());
    }
}
