//! Confluent hypergeometric function of the second kind, `U(a, b, z)`, for
//! `a > 0` and `z > 0`.
//!
//! Three regimes:
//! - large `z`: the asymptotic series `z^{-a} Σ (a)_n (a-b+1)_n / n! (-z)^{-n}`,
//!   used only when its terms fall below the tolerance before they start to grow
//!   (or when it terminates);
//! - small `z` with `b` away from the integers: the Kummer connection formula
//!   `U = Γ(1-b)/Γ(a-b+1) M(a,b,z) + Γ(b-1)/Γ(a) z^{1-b} M(a-b+1,2-b,z)`, whose
//!   leading behaviour gives the limiting forms near the origin;
//! - everything else: the integral `Γ(a)⁻¹ ∫₀^∞ e^{-zt} t^{a-1} (1+t)^{b-a-1} dt`
//!   by adaptive quadrature in `u = ln t`, scaled so that nothing overflows.
//!
//! Everything is computed as `ln U`; `U > 0` on this domain.

use super::gamma::{ln_gamma, ln_gamma_signed};
use super::quad::{integrate, QuadOptions};
use super::{SpecFunResult, MAX_SERIES_TERMS, SERIES_TOL};
use crate::error::{Error, Result};

const ASYMPTOTIC_MIN_Z: f64 = 8.0;
const KUMMER_MAX_Z: f64 = 1.0;
const KUMMER_MIN_INTEGER_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum URegime {
    Asymptotic,
    Kummer,
    Integral,
}

fn numeric(a: f64, b: f64, z: f64, what: &str) -> Error {
    Error::numeric("hyp_u", format!("{what} at (a, b, z) = ({a}, {b}, {z})"))
}

/// `ln U(a, b, z)`.
pub fn ln_hyp_u(a: f64, b: f64, z: f64) -> Result<f64> {
    ln_hyp_u_with_regime(a, b, z).map(|(v, _)| v)
}

/// `U(a, b, z)`, on the linear scale when representable and as a logarithm otherwise.
pub fn hyp_u(a: f64, b: f64, z: f64) -> Result<SpecFunResult> {
    let ln = ln_hyp_u(a, b, z)?;
    Ok(SpecFunResult::from_ln(ln))
}

/// `ln U(a, b, z)` together with the regime that produced it.
pub fn ln_hyp_u_with_regime(a: f64, b: f64, z: f64) -> Result<(f64, URegime)> {
    if !(a.is_finite() && a > 0.0) || !(z.is_finite() && z > 0.0) || !b.is_finite() {
        return Err(Error::domain(
            "hyp_u",
            format!("requires a > 0, z > 0 and finite b; got ({a}, {b}, {z})"),
        ));
    }
    if let Some(v) = asymptotic(a, b, z) {
        return Ok((v, URegime::Asymptotic));
    }
    if let Some(v) = kummer(a, b, z) {
        return Ok((v, URegime::Kummer));
    }
    integral(a, b, z).map(|v| (v, URegime::Integral))
}

pub(crate) fn asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    let c = a - b + 1.0;
    let terminates = c <= 0.0 && c == c.floor() && -c < 200.0;
    if z < ASYMPTOTIC_MIN_Z && !terminates {
        return None;
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 1..200 {
        let nf = n as f64;
        let next = term * (a + nf - 1.0) * (c + nf - 1.0) / (nf * -z);
        if next == 0.0 {
            break;
        }
        if !terminates && next.abs() > term.abs() {
            // divergent before reaching the tolerance
            return None;
        }
        term = next;
        sum += term;
        if term.abs() < SERIES_TOL * sum.abs() {
            break;
        }
        if n == 199 {
            return None;
        }
    }
    if sum <= 0.0 || !sum.is_finite() {
        return None;
    }
    Some(-a * z.ln() + sum.ln())
}

/// Kummer's `M(a, b, z)` by its power series (z small, b not a non-positive integer).
fn kummer_m(a: f64, b: f64, z: f64) -> Option<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if term.abs() < 0.1 * SERIES_TOL * sum.abs() {
            return Some(sum);
        }
    }
    None
}

fn signed_ln(x: f64) -> (f64, f64) {
    (x.abs().ln(), x.signum())
}

pub(crate) fn kummer(a: f64, b: f64, z: f64) -> Option<f64> {
    if z > KUMMER_MAX_Z || (b - b.round()).abs() < KUMMER_MIN_INTEGER_GAP {
        return None;
    }
    let ab1 = a - b + 1.0;
    // Γ(a-b+1) has poles at non-positive integers; 1/Γ vanishes there.
    let near_pole = ab1 <= 0.0 && (ab1 - ab1.round()).abs() < 1e-12;
    let m1 = kummer_m(a, b, z)?;
    let m2 = kummer_m(ab1, 2.0 - b, z)?;
    let (lg1b, s1b) = ln_gamma_signed(1.0 - b).ok()?;
    let (lgb1, sb1) = ln_gamma_signed(b - 1.0).ok()?;
    let lga = ln_gamma(a).ok()?;
    let (lm2, sm2) = signed_ln(m2);
    let ln_t2 = lgb1 - lga + (1.0 - b) * z.ln() + lm2;
    let s2 = sb1 * sm2;
    let (ln_t1, s1) = if near_pole || m1 == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        let (lgab1, sab1) = ln_gamma_signed(ab1).ok()?;
        let (lm1, sm1) = signed_ln(m1);
        (lg1b - lgab1 + lm1, s1b * sab1 * sm1)
    };
    let big = ln_t1.max(ln_t2);
    if !big.is_finite() {
        return None;
    }
    let total = s1 * (ln_t1 - big).exp() + s2 * (ln_t2 - big).exp();
    // reject heavy cancellation between the two branches
    if total <= 1e-3 {
        return None;
    }
    Some(big + total.ln())
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp()
    } else {
        u.exp().ln_1p()
    }
}

pub(crate) fn integral(a: f64, b: f64, z: f64) -> Result<f64> {
    let p = b - a - 1.0;
    // log integrand in u = ln t
    let f = |u: f64| -z * u.exp() + a * u + p * softplus(u);
    // below t0 the factor e^{-zt}(1+t)^p is 1 + (p - z) t to relative 1e-12
    let t0 = 1e-6 / z.max(1.0).max(p.abs());
    let u0 = t0.ln();
    // f is decreasing beyond u_dec
    let u_dec = ((a + p.max(0.0) + 1.0) / z).ln().max(u0 + 1.0);
    let mut f_max = f(u0);
    let steps = 256;
    for i in 1..=steps {
        let u = u0 + (u_dec - u0) * i as f64 / steps as f64;
        f_max = f_max.max(f(u));
    }
    let mut u_hi = u_dec;
    while f(u_hi) > f_max - 60.0 {
        u_hi += 0.5;
        if u_hi > 800.0 {
            return Err(numeric(a, b, z, "integrand tail does not decay"));
        }
    }
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 4000 };
    let body = integrate(|u| (f(u) - f_max).exp(), u0, u_hi, opts)
        .map_err(|e| numeric(a, b, z, &format!("quadrature failed ({e})")))?;
    let left = (a * u0 - f_max).exp() * (1.0 / a + (p - z) * t0 / (a + 1.0));
    let total = body.value + left;
    if !(total > 0.0 && total.is_finite()) {
        return Err(numeric(a, b, z, "non-positive integral"));
    }
    let lga = ln_gamma(a)?;
    Ok(total.ln() + f_max - lga)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        // 40-digit quadrature of the integral representation
        assert_relative_eq!(
            ln_hyp_u(1.0, 1.0, 1.0).unwrap().exp(),
            0.596_347_362_323_194_1,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            ln_hyp_u(0.75, 1.25, 0.5).unwrap().exp(),
            1.203_667_121_891_645_1,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            ln_hyp_u(1.0, 0.5, 2.0).unwrap().exp(),
            0.314_523_082_847_782_1,
            max_relative = 1e-10
        );
    }

    #[test]
    fn regimes_agree_where_they_overlap() {
        for &(a, b, z) in &[(1.3, 0.4, 45.0), (0.6, -1.7, 50.0), (2.5, 3.3, 60.0)] {
            let s = asymptotic(a, b, z).expect("asymptotic applies");
            let q = integral(a, b, z).unwrap();
            assert_relative_eq!(s, q, max_relative = 1e-11, epsilon = 1e-11);
        }
        for &(a, b, z) in &[(0.6, 1.3, 0.01), (1.0, 0.5, 0.4), (2.0, -2.5, 0.9), (0.2, 2.7, 1e-4)] {
            let s = kummer(a, b, z).expect("kummer applies");
            let q = integral(a, b, z).unwrap();
            assert_relative_eq!(s, q, max_relative = 1e-11, epsilon = 1e-11);
        }
    }

    #[test]
    fn terminating_series_is_exact() {
        // U(a, a + 1, z) = z^{-a}
        let (v, regime) = ln_hyp_u_with_regime(0.7, 1.7, 0.3).unwrap();
        assert_eq!(regime, URegime::Asymptotic);
        assert_relative_eq!(v, -0.7 * 0.3f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(ln_hyp_u(0.0, 1.0, 1.0).unwrap_err().is_domain());
        assert!(ln_hyp_u(1.0, 1.0, 0.0).unwrap_err().is_domain());
        assert!(ln_hyp_u(1.0, f64::NAN, 1.0).unwrap_err().is_domain());
    }
}
