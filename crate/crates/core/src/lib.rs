//! Group-R2 decomposition prior for Bayesian linear regression with known
//! predictor groups.
//!
//! The total prior variance `tau^2 = R^2 / (1 - R^2)` is split across groups by a
//! symmetric Dirichlet vector `phi`, and within each group by a second symmetric
//! Dirichlet vector `varphi_g`, so that coefficient `b_gl` has prior variance
//! `varphi_gl * phi_g * tau^2 * sigma^2`.
//!
//! Modules:
//! - [`specfun`]: special functions (log-gamma, trigamma, erf, `U`, `2F1`).
//! - [`prior`]: the prior hierarchy, prior sampling, closed-form densities and moments.
//! - [`shrinkage`]: shrinkage factors and effective model size.
//! - [`model`]: regression log-density with gradients on an unconstrained space.
//! - [`sampler`]: NUTS with adaptation, plus R-hat and ESS diagnostics.
//! - [`simharness`]: synthetic data generation and evaluation metrics.
//! - [`hyperopt`]: named prior presets and hyperparameter recommendations.

pub mod error;
pub mod hyperopt;
pub mod model;
pub mod prior;
pub mod rng;
pub mod sampler;
pub mod shrinkage;
pub mod simharness;
pub mod specfun;

pub use error::{Error, Result};
pub use hyperopt::{recommend, resolve_preset, Knowledge, PriorPreset, Recommendation};
pub use model::{RegressionData, UnconstrainedParams};
pub use prior::{GroupStructure, Hyperparams, InterceptPrior, LogDensity, PriorDraw, SigmaPrior};
pub use sampler::{ChainDraws, SamplerConfig};
pub use shrinkage::ShrinkageDraw;
pub use simharness::{MetricsReport, ScenarioSpec, Signal};
