//! Paired grouped/nongrouped simulation study over signals × R² targets.

use crate::config::RunConfig;
use crate::fail::{Failure, Fallible};
use crate::output::Table;
use crate::row;
use groupr2::rng::derive_seed;
use groupr2::simharness::{median_with_mcse, run_paired, DeltaTransform, MetricsReport, PairedReplication};
use groupr2::ScenarioSpec;
use std::path::Path;

const METRICS: [&str; 11] = [
    "elpd",
    "rmse_all",
    "rmse_zero",
    "rmse_nonzero",
    "coverage95",
    "interval_width_mean",
    "sensitivity",
    "specificity",
    "rhat_max",
    "ess_min",
    "divergences",
];

fn values(m: &MetricsReport) -> [f64; 11] {
    [
        m.elpd,
        m.rmse_all,
        m.rmse_zero,
        m.rmse_nonzero,
        m.coverage95,
        m.interval_width_mean,
        m.sensitivity,
        m.specificity,
        m.rhat_max,
        m.ess_min,
        m.divergences as f64,
    ]
}

/// Deltas reported per replication; ELPD also through asinh.
const DELTAS: [(&str, usize, DeltaTransform); 9] = [
    ("delta_elpd", 0, DeltaTransform::Identity),
    ("asinh_delta_elpd", 0, DeltaTransform::Asinh),
    ("delta_rmse_all", 1, DeltaTransform::Identity),
    ("delta_rmse_zero", 2, DeltaTransform::Identity),
    ("delta_rmse_nonzero", 3, DeltaTransform::Identity),
    ("delta_coverage95", 4, DeltaTransform::Identity),
    ("delta_interval_width_mean", 5, DeltaTransform::Identity),
    ("delta_sensitivity", 6, DeltaTransform::Identity),
    ("delta_specificity", 7, DeltaTransform::Identity),
];

pub fn run(cfg: &RunConfig, out: &Path) -> Fallible<()> {
    let sc = &cfg.simulate;
    if sc.signals.is_empty() || sc.r2.is_empty() || sc.priors.is_empty() {
        return Err(Failure::usage("simulate needs at least one signal, R² target and prior"));
    }
    if let Some(p) = sc.priors.iter().find(|p| !p.is_grouped()) {
        return Err(Failure::usage(format!("simulate.priors lists grouped priors; {p} is the nongrouped baseline")));
    }
    let mut head = vec!["scenario", "r2_target", "prior", "comparison", "replication", "status"];
    head.extend(METRICS);
    let mut metrics = Table::create(&out.join("metrics.csv"), &head)?;
    let mut head = vec!["scenario", "r2_target", "prior", "baseline", "replication", "status"];
    head.extend(DELTAS.iter().map(|d| d.0));
    let mut deltas = Table::create(&out.join("deltas.csv"), &head)?;
    let mut roc =
        Table::create(&out.join("roc.csv"), &["scenario", "r2_target", "prior", "comparison", "replication", "point", "fpr", "tpr"])?;
    let mut summary = Table::create(
        &out.join("summary.csv"),
        &["scenario", "r2_target", "prior", "baseline", "delta", "n_ok", "median", "mc_se", "n_positive", "n_failed"],
    )?;

    for (si, &signal) in sc.signals.iter().enumerate() {
        for (ri, &r2) in sc.r2.iter().enumerate() {
            let spec = ScenarioSpec {
                n: sc.n,
                p: sc.p,
                group_size: sc.group_size,
                rho_in: sc.rho_in,
                rho_out: sc.rho_out,
                r2_target: r2,
                signal,
                seed: derive_seed(cfg.seed, &[si as u64, ri as u64]),
                n_test: sc.n_test,
            };
            let scenario = format!("{signal:?}");
            for &prior in &sc.priors {
                let base = prior.nongrouped_counterpart();
                log::info!("{scenario} R² = {r2}: {prior} vs {base}");
                let reps = run_paired(&spec, prior, base, &cfg.sampler.with_seed(cfg.seed), sc.replications)?;
                for rep in &reps {
                    for (name, res) in [(prior.to_string(), &rep.grouped), (base.to_string(), &rep.nongrouped)] {
                        let mut r = row![scenario.clone(), r2, name.clone(), prior.to_string(), rep.replication];
                        match res {
                            Ok(m) => {
                                r.push("ok".into());
                                r.extend(values(m).into_iter().map(Into::into));
                                for (k, &(fpr, tpr)) in m.roc_points.iter().enumerate() {
                                    roc.write(row![scenario.clone(), r2, name.clone(), prior.to_string(), rep.replication, k, fpr, tpr])?;
                                }
                            }
                            Err(e) => {
                                log::warn!("{scenario} R² = {r2} {name} replication {}: {e}", rep.replication);
                                r.push(format!("error: {e}").into());
                                r.extend(std::iter::repeat_n(f64::NAN, METRICS.len()).map(Into::into));
                            }
                        }
                        metrics.write(r)?;
                    }
                    let mut r = row![scenario.clone(), r2, prior.to_string(), base.to_string(), rep.replication];
                    let ok = rep.grouped.is_ok() && rep.nongrouped.is_ok();
                    r.push(if ok { "ok" } else { "error" }.into());
                    r.extend(DELTAS.iter().map(|&(_, i, tr)| delta(rep, i, tr).into()));
                    deltas.write(r)?;
                }
                for &(name, i, tr) in &DELTAS {
                    let v: Vec<f64> = reps.iter().map(|rep| delta(rep, i, tr)).collect();
                    let (med, se) = median_with_mcse(&v);
                    let ok = v.iter().filter(|x| !x.is_nan()).count();
                    let pos = v.iter().filter(|&&x| x > 0.0).count();
                    let failed = reps.iter().filter(|r| r.grouped.is_err() || r.nongrouped.is_err()).count();
                    summary.write(row![scenario.clone(), r2, prior.to_string(), base.to_string(), name, ok, med, se, pos, failed])?;
                }
            }
        }
    }
    metrics.finish()?;
    deltas.finish()?;
    roc.finish()?;
    summary.finish()
}

fn delta(rep: &PairedReplication, i: usize, tr: DeltaTransform) -> f64 {
    rep.delta(|m| values(m)[i], tr).unwrap_or(f64::NAN)
}
