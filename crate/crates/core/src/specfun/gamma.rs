//! Gamma-family functions: `ln Γ`, `Γ`, `1/Γ`, `ln B`, digamma and trigamma.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// zeta(k) - 1 for k = 2, 3, ...
const ZETA_MINUS_ONE: [f64; 30] = [
    0.644_934_066_848_226_44,
    0.202_056_903_159_594_29,
    0.082_323_233_711_138_192,
    0.036_927_755_143_369_926,
    0.017_343_061_984_449_14,
    0.008_349_277_381_922_826_8,
    0.004_077_356_197_944_339_4,
    0.002_008_392_826_082_214_4,
    0.000_994_575_127_818_085_34,
    0.000_494_188_604_119_464_56,
    0.000_246_086_553_308_048_3,
    0.000_122_713_347_578_489_15,
    6.124_813_505_870_482_9e-5,
    3.058_823_630_702_049_4e-5,
    1.528_225_940_865_187_2e-5,
    7.637_197_637_899_762_3e-6,
    3.817_293_264_999_839_9e-6,
    1.908_212_716_553_938_9e-6,
    9.539_620_338_727_961_1e-7,
    4.769_329_867_878_064_6e-7,
    2.384_505_027_277_329_9e-7,
    1.192_199_259_653_110_7e-7,
    5.960_818_905_125_948e-8,
    2.980_350_351_465_228e-8,
    1.490_155_482_836_504_1e-8,
    7.450_711_789_835_429_5e-9,
    3.725_334_024_788_457_1e-9,
    1.862_659_723_513_049e-9,
    9.313_274_324_196_681_8e-10,
    4.656_629_065_033_784_1e-10,
];

// B_{2k} for k = 1..8
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `ln Γ(1 + eps)` for `|eps| <= 0.5`.
///
/// Uses `ln Γ(1+e) = -γe + (e - ln(1+e)) + Σ_{k≥2} (-1)^k (ζ(k)-1) e^k / k`,
/// whose tail converges like `(e/2)^k`.
fn ln_gamma_1p(eps: f64) -> f64 {
    let mut acc = -EULER_GAMMA * eps + (eps - eps.ln_1p());
    let mut pow = -eps;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        pow *= -eps;
        // pow is now (-1)^k eps^k
        let term = zm1 * pow / k;
        acc += term;
        if term.abs() < 1e-18 * acc.abs().max(1e-300) {
            break;
        }
    }
    acc
}

/// Stirling series for `x >= 10`.
fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        corr += b / (n * (n - 1.0)) * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + corr
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_1p(x) - x.ln();
    }
    if x <= 1.5 {
        return ln_gamma_1p(x - 1.0);
    }
    if x <= 2.5 {
        let eps = x - 2.0;
        return ln_gamma_1p(eps) + eps.ln_1p();
    }
    if x >= 10.0 {
        return ln_gamma_stirling(x);
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += y.ln();
        y += 1.0;
    }
    ln_gamma_stirling(y) - shift
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_pos(x))
}

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.5 {
        (PI * r).sin()
    } else if r < 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// `(ln |Γ(x)|, sign Γ(x))` for any real `x` that is not a non-positive integer.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || (x <= 0.0 && x == x.floor()) {
        return Err(Error::domain("ln_gamma_signed", format!("pole or non-finite x = {x}")));
    }
    if x > 0.0 {
        return Ok((ln_gamma_pos(x), 1.0));
    }
    // reflection: Γ(x) Γ(1-x) = π / sin(πx)
    let s = sin_pi(x);
    let lg = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    Ok((lg, s.signum()))
}

/// Gamma function on the real line (poles are a domain error).
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, s) = ln_gamma_signed(x)?;
    Ok(s * lg.exp())
}

/// Reciprocal gamma function, zero at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    match ln_gamma_signed(x) {
        Ok((lg, s)) => s * (-lg).exp(),
        Err(_) => f64::NAN,
    }
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain("ln_beta", format!("shapes ({a}, {b}) must be positive")));
    }
    Ok(ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b))
}

/// Digamma function `ψ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain("digamma", format!("x = {x} must be positive")));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv2;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        series += b / n * pow;
        pow *= inv2;
    }
    Ok(acc + y.ln() - 0.5 * inv - series)
}

/// Trigamma function `ψ₁(x) = Σ_k 1/(x+k)²` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain("trigamma", format!("x = {x} must be positive")));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // ψ₁(y) ~ 1/y + 1/(2y²) + Σ B_2k / y^(2k+1)
    let mut series = 0.0;
    let mut pow = inv * inv2;
    for b in BERNOULLI_EVEN.iter() {
        series += b * pow;
        pow *= inv2;
    }
    Ok(acc + inv + 0.5 * inv2 + series)
}
