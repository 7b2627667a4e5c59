//! Prior predictive draws of R² and the per-group effective number of nonzero
//! coefficients over a grid of `(a_G, c_g)`.

use crate::config::RunConfig;
use crate::fail::{Failure, Fallible};
use crate::output::Table;
use crate::row;
use groupr2::rng::derive_seed;
use groupr2::shrinkage::prior_predictive;
use groupr2::simharness::quantile_sorted;
use groupr2::{GroupStructure, Hyperparams};
use std::path::Path;

pub fn run(cfg: &RunConfig, out: &Path) -> Fallible<()> {
    let pp = &cfg.prior_predictive;
    if pp.a_g.is_empty() || pp.c_g.is_empty() {
        return Err(Failure::usage("prior_predictive needs at least one a_g and one c_g"));
    }
    let s = GroupStructure::equal(pp.n_groups, pp.group_size)?;
    let g = pp.n_groups as f64;
    let mut cells = Table::create(
        &out.join("cells.csv"),
        &["cell", "a_g", "c_g", "a1", "a2", "meff_g_q05", "meff_g_median", "meff_g_q95", "r2_median"],
    )?;
    for (i, &a_g) in pp.a_g.iter().enumerate() {
        for (j, &c_g) in pp.c_g.iter().enumerate() {
            let hyper = Hyperparams::uniform_c(g * a_g, pp.a2, a_g, c_g, pp.n_groups)?;
            let draws = prior_predictive(&hyper, &s, pp.n_sims, derive_seed(cfg.seed, &[i as u64, j as u64]))?;
            let name = format!("aG{i}_cg{j}");
            let dir = out.join(&name);
            std::fs::create_dir_all(&dir)?;
            let mut meff = Table::create(&dir.join("meff_samples.csv"), &["sim", "group", "meff_g"])?;
            let mut r2 = Table::create(&dir.join("r2_samples.csv"), &["sim", "r2"])?;
            for (k, d) in draws.iter().enumerate() {
                r2.write(row![k, d.r2])?;
                for (grp, &m) in d.meff_group.iter().enumerate() {
                    meff.write(row![k, grp + 1, m])?;
                }
            }
            meff.finish()?;
            r2.finish()?;
            let mut pooled: Vec<f64> = draws.iter().flat_map(|d| d.meff_group.iter().copied()).collect();
            let mut r2s: Vec<f64> = draws.iter().map(|d| d.r2).collect();
            pooled.sort_by(f64::total_cmp);
            r2s.sort_by(f64::total_cmp);
            let q = |v: &[f64], p: f64| if v.is_empty() { f64::NAN } else { quantile_sorted(v, p) };
            cells.write(row![
                name,
                a_g,
                c_g,
                g * a_g,
                pp.a2,
                q(&pooled, 0.05),
                q(&pooled, 0.5),
                q(&pooled, 0.95),
                q(&r2s, 0.5)
            ])?;
        }
    }
    cells.finish()
}
