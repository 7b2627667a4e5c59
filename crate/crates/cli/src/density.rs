//! Density grids: marginal of a coefficient, R² and τ² priors, and the
//! correlation of within-group log variances.

use crate::config::RunConfig;
use crate::fail::Fallible;
use crate::output::Table;
use crate::row;
use groupr2::prior::{beta_shapes_from_mean_precision, betaprime_logpdf, log_variance_correlation, marginal_b_logdensity};
use groupr2::specfun::ln_beta;
use groupr2::LogDensity;
use std::path::Path;

pub fn run(cfg: &RunConfig, out: &Path) -> Fallible<()> {
    let d = &cfg.density;

    let mut t = Table::create(&out.join("marginal_b.csv"), &["c_g", "a2", "b", "log_density", "density", "status"])?;
    let bs = d.b.points()?;
    for &(c_g, a2) in &d.marginal {
        for &b in &bs {
            match marginal_b_logdensity(b, c_g, a2)? {
                LogDensity::Finite(v) => t.write(row![c_g, a2, b, v, v.exp(), "ok"])?,
                LogDensity::Pole => t.write(row![c_g, a2, b, f64::INFINITY, f64::INFINITY, "pole"])?,
            }
        }
    }
    t.finish()?;

    let mut r2 = Table::create(&out.join("r2_beta.csv"), &["mean", "precision", "a1", "a2", "r2", "density"])?;
    let mut tau = Table::create(&out.join("tau2_betaprime.csv"), &["mean", "precision", "a1", "a2", "tau2", "density"])?;
    let (rs, ts) = (d.r2.points()?, d.tau2.points()?);
    for &(mu, nu) in &d.r2_mean_precision {
        let (a1, a2) = beta_shapes_from_mean_precision(mu, nu)?;
        let lb = ln_beta(a1, a2)?;
        for &x in &rs {
            let v = if x > 0.0 && x < 1.0 { ((a1 - 1.0) * x.ln() + (a2 - 1.0) * (-x).ln_1p() - lb).exp() } else { f64::NAN };
            r2.write(row![mu, nu, a1, a2, x, v])?;
        }
        for &x in &ts {
            let v = if x > 0.0 { betaprime_logpdf(x, a1, a2)?.exp() } else { f64::NAN };
            tau.write(row![mu, nu, a1, a2, x, v])?;
        }
    }
    r2.finish()?;
    tau.finish()?;

    let mut corr = Table::create(&out.join("correlation.csv"), &["a_g", "c_g", "n_groups", "group_size", "correlation"])?;
    let cs = d.correlation_c_g.points()?;
    for &a_g in &d.correlation_a_g {
        for &c_g in &cs {
            let r = log_variance_correlation(a_g, d.correlation_n_groups, c_g, d.correlation_group_size)?;
            corr.write(row![a_g, c_g, d.correlation_n_groups, d.correlation_group_size, r])?;
        }
    }
    corr.finish()
}
