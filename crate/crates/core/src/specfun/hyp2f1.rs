//! Gauss hypergeometric function `2F1(a, b; c; z)` on the negative real axis.

use super::gamma::ln_beta;
use super::quad::{integrate, QuadOptions};
use super::{MAX_SERIES_TERMS, SERIES_TOL};
use crate::error::{Error, Result};

// beyond this the transformed series converges too slowly
const SERIES_MAX_W: f64 = 0.95;

fn is_nonpositive_int(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Sums `Σ (a)_n (b)_n / ((c)_n n!) w^n` for `0 <= w < 1`.
fn series(a: f64, b: f64, c: f64, w: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * w;
        sum += term;
        if term == 0.0 || term.abs() < SERIES_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::numeric(
        "hyp_2f1",
        format!("series did not converge in {MAX_SERIES_TERMS} terms for ({a}, {b}, {c}; {w})"),
    ))
}

/// Euler integral `B(b, c-b)⁻¹ ∫₀¹ t^{b-1} (1-t)^{c-b-1} (1-zt)^{-a} dt`
/// for `c > b > 0` and `z <= 0`.
///
/// Each half of `[0, 1]` is mapped through a power substitution that removes
/// the endpoint singularity.
fn euler_integral(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let d = c - b;
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 };
    // t = s^{1/b}
    let left = integrate(
        |s: f64| {
            let t = s.powf(1.0 / b);
            ((d - 1.0) * (-t).ln_1p() - a * (-z * t).ln_1p()).exp()
        },
        0.0,
        0.5f64.powf(b),
        opts,
    )?
    .value
        / b;
    // 1 - t = s^{1/d}
    let right = integrate(
        |s: f64| {
            let u = s.powf(1.0 / d);
            let t = 1.0 - u;
            ((b - 1.0) * (-u).ln_1p() - a * (-z * t).ln_1p()).exp()
        },
        0.0,
        0.5f64.powf(d),
        opts,
    )?
    .value
        / d;
    Ok((left + right) / ln_beta(b, d)?.exp())
}

/// `2F1(a, b; c; z)` for `c > 0` and `z <= 0`.
///
/// The argument is moved into `[0, 1)` with Pfaff's transformation
/// `2F1(a, b; c; z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))` before summing.
pub fn hyp_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) || !a.is_finite() || !b.is_finite() || !(z <= 0.0) || !z.is_finite()
    {
        return Err(Error::domain(
            "hyp_2f1",
            format!("requires c > 0, finite a, b and finite z <= 0; got ({a}, {b}, {c}; {z})"),
        ));
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if c == b {
        return Ok((-a * (-z).ln_1p()).exp());
    }
    if c == a {
        return Ok((-b * (-z).ln_1p()).exp());
    }
    let w = z / (z - 1.0);
    let ln1z = (-z).ln_1p();
    // both Pfaff forms; prefer one that terminates
    let forms = [(a, c - b), (b, c - a)];
    for &(p, q) in &forms {
        if is_nonpositive_int(q) || is_nonpositive_int(p) {
            return Ok((-p * ln1z).exp() * series(p, q, c, w)?);
        }
    }
    if w <= SERIES_MAX_W {
        let (p, q) = forms[0];
        return Ok((-p * ln1z).exp() * series(p, q, c, w)?);
    }
    if c > b && b > 0.0 {
        return euler_integral(a, b, c, z);
    }
    if c > a && a > 0.0 {
        return euler_integral(b, a, c, z);
    }
    let (p, q) = forms[0];
    Ok((-p * ln1z).exp() * series(p, q, c, w)?)
}
