//! The Group-R2 prior hierarchy.
//!
//! ```text
//! R² ~ Beta(a1, a2),  τ² = R² / (1 - R²)
//! φ   ~ Dir(a_G, ..., a_G)            (G groups)
//! φ_g ~ Dir(c_g, ..., c_g)            (p_g coefficients in group g)
//! b_gl | σ ~ N(0, φ_gl φ_g τ² σ²)
//! ```

mod algebra;
mod density;
mod sample;

pub use algebra::{
    beta_shapes_from_mean_precision, couple_ag_from_cg, couple_cg_from_ag, log_variance_correlation,
    mean_precision_from_beta_shapes, r2_to_tau2, rg2_moment, tau2_to_r2, variance_covariance,
};
pub use density::{betaprime_logpdf, joint_group_logdensity, marginal_b_logdensity};
pub use sample::{sample_prior, sample_prior_with_data};

use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Partition of `p` coefficients into `G` contiguous groups.
///
/// Coefficient `j` belongs to the group whose range contains it; groups are laid
/// out in order, so `(g, l)` maps to `offset(g) + l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GroupStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    group_of: Vec<usize>,
}

impl GroupStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        ensure(!sizes.is_empty(), "GroupStructure", || "at least one group is required".into())?;
        ensure(sizes.iter().all(|&s| s >= 1), "GroupStructure", || {
            format!("every group needs at least one coefficient, got sizes {sizes:?}")
        })?;
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut group_of = Vec::new();
        let mut acc = 0;
        for (g, &s) in sizes.iter().enumerate() {
            offsets.push(acc);
            acc += s;
            group_of.extend(std::iter::repeat_n(g, s));
        }
        offsets.push(acc);
        Ok(Self { sizes, offsets, group_of })
    }

    /// `g` groups of equal size `size`.
    pub fn equal(g: usize, size: usize) -> Result<Self> {
        Self::new(vec![size; g])
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn p(&self) -> usize {
        self.group_of.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, g: usize) -> usize {
        self.sizes[g]
    }

    /// Coefficient indices of group `g`.
    pub fn range(&self, g: usize) -> Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn group_of(&self, j: usize) -> usize {
        self.group_of[j]
    }

    /// `(g, l)` for coefficient `j`.
    pub fn position(&self, j: usize) -> (usize, usize) {
        let g = self.group_of[j];
        (g, j - self.offsets[g])
    }

    pub fn index(&self, g: usize, l: usize) -> usize {
        debug_assert!(l < self.sizes[g]);
        self.offsets[g] + l
    }
}

impl TryFrom<Vec<usize>> for GroupStructure {
    type Error = Error;
    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<GroupStructure> for Vec<usize> {
    fn from(s: GroupStructure) -> Self {
        s.sizes
    }
}

/// Half Student-t prior on σ. A missing scale means `sd(y)`, or 1 without data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaPrior {
    #[serde(default = "default_sigma_df")]
    pub df: f64,
    #[serde(default)]
    pub scale: Option<f64>,
}

fn default_sigma_df() -> f64 {
    3.0
}

impl Default for SigmaPrior {
    fn default() -> Self {
        Self { df: default_sigma_df(), scale: None }
    }
}

impl SigmaPrior {
    pub fn resolve_scale(&self, y: &[f64]) -> f64 {
        self.scale.unwrap_or_else(|| sample_sd(y).unwrap_or(1.0))
    }
}

/// Prior on the intercept. Missing moments default to `mean(y)` and `10 sd(y)`
/// (0 and 10 without data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InterceptPrior {
    Normal {
        #[serde(default)]
        mean: Option<f64>,
        #[serde(default)]
        sd: Option<f64>,
    },
    Flat,
}

impl Default for InterceptPrior {
    fn default() -> Self {
        InterceptPrior::Normal { mean: None, sd: None }
    }
}

impl InterceptPrior {
    /// `(mean, sd)` of the normal prior, or `None` when flat.
    pub fn resolve(&self, y: &[f64]) -> Option<(f64, f64)> {
        match *self {
            InterceptPrior::Flat => None,
            InterceptPrior::Normal { mean, sd } => {
                let m = mean.unwrap_or_else(|| sample_mean(y).unwrap_or(0.0));
                let s = sd.unwrap_or_else(|| 10.0 * sample_sd(y).unwrap_or(1.0));
                Some((m, s))
            }
        }
    }
}

pub(crate) fn sample_mean(y: &[f64]) -> Option<f64> {
    if y.is_empty() {
        None
    } else {
        Some(y.iter().sum::<f64>() / y.len() as f64)
    }
}

pub(crate) fn sample_sd(y: &[f64]) -> Option<f64> {
    if y.len() < 2 {
        return None;
    }
    let m = sample_mean(y)?;
    let v = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
    (v > 0.0).then(|| v.sqrt())
}

/// Hyperparameters of the prior.
///
/// `(a1, a2)` are the Beta shapes of R², `a_g` the group-level Dirichlet
/// concentration and `c[g]` the within-group concentration of group `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HyperparamsRepr", into = "HyperparamsRepr")]
pub struct Hyperparams {
    a1: f64,
    a2: f64,
    a_g: f64,
    c: Vec<f64>,
    sigma: SigmaPrior,
    intercept: InterceptPrior,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperparamsRepr {
    a1: f64,
    a2: f64,
    a_g: f64,
    c: Vec<f64>,
    #[serde(default)]
    sigma: SigmaPrior,
    #[serde(default)]
    intercept: InterceptPrior,
}

impl TryFrom<HyperparamsRepr> for Hyperparams {
    type Error = Error;
    fn try_from(r: HyperparamsRepr) -> Result<Self> {
        Hyperparams::new(r.a1, r.a2, r.a_g, r.c)?.with_sigma(r.sigma)?.with_intercept(r.intercept)
    }
}

impl From<Hyperparams> for HyperparamsRepr {
    fn from(h: Hyperparams) -> Self {
        Self { a1: h.a1, a2: h.a2, a_g: h.a_g, c: h.c, sigma: h.sigma, intercept: h.intercept }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl Hyperparams {
    pub fn new(a1: f64, a2: f64, a_g: f64, c: Vec<f64>) -> Result<Self> {
        ensure(positive(a1) && positive(a2), "Hyperparams", || {
            format!("R² shapes must be positive, got ({a1}, {a2})")
        })?;
        ensure(positive(a_g), "Hyperparams", || format!("a_G must be positive, got {a_g}"))?;
        ensure(!c.is_empty() && c.iter().all(|&v| positive(v)), "Hyperparams", || {
            format!("within-group concentrations must be positive, got {c:?}")
        })?;
        Ok(Self {
            a1,
            a2,
            a_g,
            c,
            sigma: SigmaPrior::default(),
            intercept: InterceptPrior::default(),
        })
    }

    /// Hyperparameters with `c_g = a_G / p_g` for every group.
    pub fn coupled(a1: f64, a2: f64, a_g: f64, structure: &GroupStructure) -> Result<Self> {
        let c = structure.sizes().iter().map(|&p| couple_cg_from_ag(a_g, p)).collect::<Result<_>>()?;
        Self::new(a1, a2, a_g, c)
    }

    /// Same `c` for every one of `g` groups.
    pub fn uniform_c(a1: f64, a2: f64, a_g: f64, c: f64, g: usize) -> Result<Self> {
        Self::new(a1, a2, a_g, vec![c; g])
    }

    /// From the mean and precision `(μ, ν)` of R².
    pub fn from_mean_precision(mu: f64, nu: f64, a_g: f64, c: Vec<f64>) -> Result<Self> {
        let (a1, a2) = beta_shapes_from_mean_precision(mu, nu)?;
        Self::new(a1, a2, a_g, c)
    }

    pub fn with_sigma(mut self, sigma: SigmaPrior) -> Result<Self> {
        ensure(positive(sigma.df), "Hyperparams", || format!("sigma df must be positive, got {}", sigma.df))?;
        ensure(sigma.scale.is_none_or(positive), "Hyperparams", || {
            format!("sigma scale must be positive, got {:?}", sigma.scale)
        })?;
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_intercept(mut self, intercept: InterceptPrior) -> Result<Self> {
        if let InterceptPrior::Normal { mean, sd } = intercept {
            ensure(mean.is_none_or(f64::is_finite) && sd.is_none_or(positive), "Hyperparams", || {
                format!("intercept prior needs finite mean and positive sd, got ({mean:?}, {sd:?})")
            })?;
        }
        self.intercept = intercept;
        Ok(self)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn a_g(&self) -> f64 {
        self.a_g
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn sigma(&self) -> &SigmaPrior {
        &self.sigma
    }
    pub fn intercept(&self) -> &InterceptPrior {
        &self.intercept
    }

    /// Prior mean of R².
    pub fn mu_r2(&self) -> f64 {
        self.a1 / (self.a1 + self.a2)
    }

    /// Prior precision of R².
    pub fn nu_r2(&self) -> f64 {
        self.a1 + self.a2
    }

    /// Checks that there is one `c_g` per group.
    pub fn check_structure(&self, structure: &GroupStructure) -> Result<()> {
        ensure(self.c.len() == structure.n_groups(), "Hyperparams", || {
            format!("{} concentrations for {} groups", self.c.len(), structure.n_groups())
        })
    }
}

/// A log density value that may be a pole (`+∞`) at a singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Finite(f64),
    Pole,
}

impl LogDensity {
    /// The log density, `+∞` at a pole.
    pub fn value(self) -> f64 {
        match self {
            LogDensity::Finite(v) => v,
            LogDensity::Pole => f64::INFINITY,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, LogDensity::Pole)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LogDensity::Finite(v) => Some(v),
            LogDensity::Pole => None,
        }
    }
}

/// One joint draw of all prior quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorDraw {
    pub tau2: f64,
    /// Group proportions `φ`.
    pub phi: Vec<f64>,
    /// Within-group proportions `φ_g`, one simplex per group.
    pub varphi: Vec<Vec<f64>>,
    pub sigma2: f64,
    /// `φ_gl φ_g τ²`, laid out by coefficient index.
    pub lambda2: Vec<f64>,
    pub b: Vec<f64>,
    pub b0: f64,
}

impl PriorDraw {
    pub fn r2(&self) -> f64 {
        self.tau2 / (self.tau2 + 1.0)
    }

    /// Group variance `τ_g² = φ_g τ²`.
    pub fn tau2_group(&self, g: usize) -> f64 {
        self.phi[g] * self.tau2
    }

    /// Group share of explained variance `R_g² = φ_g R²`.
    pub fn r2_group(&self, g: usize) -> f64 {
        self.phi[g] * self.r2()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Rebuilds `λ²` from `(τ², φ, φ_g)`.
    pub(crate) fn lambda2_from_parts(tau2: f64, phi: &[f64], varphi: &[Vec<f64>]) -> Vec<f64> {
        phi.iter()
            .zip(varphi)
            .flat_map(|(&pg, v)| v.iter().map(move |&pl| pl * pg * tau2))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_index_map_is_bijective() {
        let s = GroupStructure::new(vec![2, 3, 1]).unwrap();
        assert_eq!(s.p(), 6);
        for j in 0..s.p() {
            let (g, l) = s.position(j);
            assert_eq!(s.index(g, l), j);
        }
        assert_eq!(s.range(1), 2..5);
        assert!(GroupStructure::new(vec![]).is_err());
        assert!(GroupStructure::new(vec![2, 0]).is_err());
    }

    #[test]
    fn hyperparams_reject_bad_values_and_roundtrip() {
        assert!(Hyperparams::new(0.0, 1.0, 1.0, vec![1.0]).unwrap_err().is_domain());
        assert!(Hyperparams::new(1.0, 1.0, 1.0, vec![-1.0]).is_err());
        let h = Hyperparams::new(1.0, 2.0, 0.5, vec![0.25, 0.5]).unwrap();
        assert!((h.mu_r2() - 1.0 / 3.0).abs() < 1e-12);
        assert!((h.nu_r2() - 3.0).abs() < 1e-12);
        let json = serde_json::to_string(&h).unwrap();
        let back: Hyperparams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        let bad = json.replace("\"a2\":2.0", "\"a2\":-2.0");
        assert!(serde_json::from_str::<Hyperparams>(&bad).is_err());
    }

    #[test]
    fn sigma_and_intercept_defaults() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(SigmaPrior::default().resolve_scale(&y), 1.0);
        assert_eq!(SigmaPrior::default().resolve_scale(&[]), 1.0);
        assert_eq!(InterceptPrior::default().resolve(&y), Some((2.0, 10.0)));
        assert_eq!(InterceptPrior::Flat.resolve(&y), None);
    }
}
