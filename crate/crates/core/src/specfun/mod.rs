//! Special functions used by the closed-form densities and moments.
//!
//! All routines are pure; the ones that can overflow work on the log scale
//! internally and report through [`SpecFunResult`].

mod erf;
// coefficient tables are kept exactly as published
#[allow(clippy::excessive_precision)]
mod gamma;
mod hyp2f1;
mod hyperu;
#[allow(clippy::excessive_precision)]
pub mod quad;

pub use erf::{erf, erfc, norm_cdf, norm_ppf};
pub use gamma::{digamma, gamma, ln_beta, ln_gamma, ln_gamma_signed, rgamma, trigamma, EULER_GAMMA};
pub use hyp2f1::hyp_2f1;
pub use hyperu::{hyp_u, ln_hyp_u, ln_hyp_u_with_regime, URegime};

/// Series stop once a term is this small relative to the partial sum.
pub(crate) const SERIES_TOL: f64 = 1e-14;
pub(crate) const MAX_SERIES_TERMS: usize = 10_000;

// exp() stays finite and normal inside this band
const LINEAR_LN_LIMIT: f64 = 700.0;

/// A special-function value, either linear or as a natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunResult {
    pub value: f64,
    /// `value` holds `ln f` rather than `f`.
    pub log_scale: bool,
}

impl SpecFunResult {
    /// Wraps a log value, converting to linear scale when that is representable.
    pub fn from_ln(ln: f64) -> Self {
        if ln.abs() < LINEAR_LN_LIMIT {
            Self { value: ln.exp(), log_scale: false }
        } else {
            Self { value: ln, log_scale: true }
        }
    }

    /// Natural logarithm of the value (assumes a positive function).
    pub fn ln(&self) -> f64 {
        if self.log_scale {
            self.value
        } else {
            self.value.ln()
        }
    }

    /// Linear-scale value; may be `0` or `inf` when `log_scale` is set.
    pub fn linear(&self) -> f64 {
        if self.log_scale {
            self.value.exp()
        } else {
            self.value
        }
    }
}
