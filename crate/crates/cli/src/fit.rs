//! Posterior fit of one data set.

use crate::config::{PriorSpec, RunConfig};
use crate::fail::{Failure, Fallible};
use crate::output::{write_json, Table};
use crate::row;
use groupr2::model::{fit, standardize};
use groupr2::sampler::{ess, rhat};
use groupr2::shrinkage::ShrinkageDraw;
use groupr2::simharness::quantile_sorted;
use groupr2::{ChainDraws, GroupStructure, Hyperparams, PriorDraw, RegressionData};
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::HashMap;
use std::path::Path;

struct Data {
    names: Vec<String>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
}

fn parse_float(s: &str, what: impl Fn() -> String) -> Fallible<f64> {
    s.trim().parse::<f64>().map_err(|_| Failure::usage(format!("{}: not a number: {s:?}", what())))
}

fn read_data(path: &Path) -> Fallible<Data> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let yi = header
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Failure::usage(format!("{}: no `y` column", path.display())))?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != yi).map(|(_, h)| h.clone()).collect();
    if names.is_empty() {
        return Err(Failure::usage(format!("{}: no predictor columns", path.display())));
    }
    let mut y = Vec::new();
    let mut x = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut k = 0;
        for (i, field) in rec.iter().enumerate() {
            let v = parse_float(field, || format!("{} row {} column {}", path.display(), line + 2, header[i]))?;
            if i == yi {
                y.push(v);
            } else {
                x[k].push(v);
                k += 1;
            }
        }
    }
    Ok(Data { names, y, x })
}

/// Group labels in order of first appearance and each predictor's group.
fn read_groups(path: &Path) -> Fallible<(Vec<String>, HashMap<String, usize>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut labels: Vec<String> = Vec::new();
    let mut map = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Failure::usage(format!("{}: expected `predictor,group` rows", path.display())));
        }
        let (pred, grp) = (rec[0].trim().to_string(), rec[1].trim().to_string());
        let gi = match labels.iter().position(|l| *l == grp) {
            Some(i) => i,
            None => {
                labels.push(grp);
                labels.len() - 1
            }
        };
        if map.insert(pred.clone(), gi).is_some() {
            return Err(Failure::usage(format!("{}: predictor {pred} listed twice", path.display())));
        }
    }
    Ok((labels, map))
}

#[derive(Serialize)]
struct GroupInfo {
    name: String,
    predictors: Vec<String>,
}

#[derive(Serialize)]
struct Diagnostics {
    status: String,
    error: Option<String>,
    n_chains: usize,
    n_samples: usize,
    n_divergent: usize,
    divergence_rate: f64,
    step_size: Vec<f64>,
    ebfmi: Vec<f64>,
    max_tree_depth_hits: usize,
    warnings: Vec<String>,
    groups: Vec<GroupInfo>,
    hyperparams: Option<Hyperparams>,
    /// Predictor means and sds; coefficients refer to standardized predictors.
    predictor_means: Vec<f64>,
    predictor_sds: Vec<f64>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Fallible<()> {
    let fc = &cfg.fit;
    let path = fc.data.as_deref().ok_or_else(|| Failure::usage("fit needs `fit.data`"))?;
    let data = read_data(path)?;

    // groups: (label, predictor indices into data.names)
    let full: Vec<(String, Vec<usize>)> = match (&fc.groups, fc.nongrouped) {
        (Some(gpath), _) => {
            let (labels, map) = read_groups(gpath)?;
            let mut groups: Vec<(String, Vec<usize>)> = labels.into_iter().map(|l| (l, Vec::new())).collect();
            for (j, name) in data.names.iter().enumerate() {
                let gi = map.get(name).ok_or_else(|| Failure::usage(format!("predictor {name} is not in the group map")))?;
                groups[*gi].1.push(j);
            }
            if let Some(extra) = map.keys().find(|k| !data.names.contains(k)) {
                return Err(Failure::usage(format!("group map lists {extra}, which is not a data column")));
            }
            groups.retain(|g| !g.1.is_empty());
            groups
        }
        (None, true) => vec![("all".to_string(), (0..data.names.len()).collect())],
        (None, false) => return Err(Failure::usage("fit needs `fit.groups` or --nongrouped")),
    };
    let full_structure = GroupStructure::new(full.iter().map(|g| g.1.len()).collect())?;

    let (hyper, groups) = match &cfg.prior {
        PriorSpec::Preset { preset } => {
            let preset = if fc.nongrouped { preset.nongrouped_counterpart() } else { *preset };
            let h = preset.resolve(&full_structure)?;
            let groups = if preset.is_grouped() {
                full
            } else {
                vec![("all".to_string(), full.into_iter().flat_map(|g| g.1).collect())]
            };
            (h, groups)
        }
        PriorSpec::Explicit(h) => {
            let groups = if fc.nongrouped {
                vec![("all".to_string(), full.into_iter().flat_map(|g| g.1).collect())]
            } else {
                full
            };
            (h.clone(), groups)
        }
    };
    let structure = GroupStructure::new(groups.iter().map(|g| g.1.len()).collect())?;
    hyper.check_structure(&structure)?;

    // columns in group order
    let order: Vec<usize> = groups.iter().flat_map(|g| g.1.iter().copied()).collect();
    let n = data.y.len();
    let raw = DMatrix::from_fn(n, order.len(), |i, j| data.x[order[j]][i]);
    let (x, means, sds) = standardize(&raw)?;
    let names: Vec<String> = order.iter().map(|&j| data.names[j].clone()).collect();
    let group_info: Vec<GroupInfo> =
        groups.iter().map(|(l, idx)| GroupInfo { name: l.clone(), predictors: idx.iter().map(|&j| data.names[j].clone()).collect() }).collect();

    let reg = RegressionData::new(data.y.clone(), x, structure.clone())?;
    let mut diag = Diagnostics {
        status: "ok".into(),
        error: None,
        n_chains: cfg.sampler.n_chains,
        n_samples: cfg.sampler.n_samples,
        n_divergent: 0,
        divergence_rate: 0.0,
        step_size: vec![],
        ebfmi: vec![],
        max_tree_depth_hits: 0,
        warnings: vec![],
        groups: group_info,
        hyperparams: Some(hyper.clone()),
        predictor_means: means,
        predictor_sds: sds,
    };
    let draws = match fit(reg, hyper, &cfg.sampler.with_seed(cfg.seed)) {
        Ok(d) => d,
        Err(e) => {
            diag.status = "failed".into();
            diag.error = Some(e.to_string());
            write_json(&out.join("diagnostics.json"), &diag)?;
            return Err(e.into());
        }
    };
    diag.n_divergent = draws.n_divergent();
    diag.divergence_rate = draws.divergence_rate();
    diag.step_size = draws.chains.iter().map(|c| c.step_size).collect();
    diag.ebfmi = draws.ebfmi();
    diag.max_tree_depth_hits =
        draws.chains.iter().flat_map(|c| &c.tree_depth).filter(|&&d| d >= cfg.sampler.max_tree_depth).count();
    diag.warnings = draws.warnings.clone();

    let labels: Vec<String> = groups.iter().map(|g| g.0.clone()).collect();
    write_draws(&draws, &names, &labels, &structure, out)?;
    write_summary(&draws, &names, &labels, &structure, out)?;
    write_json(&out.join("diagnostics.json"), &diag)
}

type Getter<'a> = Box<dyn Fn(&PriorDraw) -> f64 + Sync + 'a>;

/// Named scalar quantities of a draw.
fn quantities<'a>(names: &[String], labels: &[String], structure: &'a GroupStructure) -> Vec<(String, Getter<'a>)> {
    let mut q: Vec<(String, Getter<'a>)> = vec![
        ("b0".into(), Box::new(|d| d.b0)),
        ("sigma".into(), Box::new(|d| d.sigma())),
        ("tau2".into(), Box::new(|d| d.tau2)),
        ("r2".into(), Box::new(|d| d.r2())),
    ];
    for (j, name) in names.iter().enumerate() {
        q.push((format!("b.{name}"), Box::new(move |d| d.b[j])));
    }
    for (g, l) in labels.iter().enumerate() {
        q.push((format!("r2_g.{l}"), Box::new(move |d| d.r2_group(g))));
    }
    q.push((
        "meff".into(),
        Box::new(move |d| ShrinkageDraw::from_draw(d, structure).map_or(f64::NAN, |s| s.meff_total)),
    ));
    for (g, l) in labels.iter().enumerate() {
        q.push((
            format!("meff_g.{l}"),
            Box::new(move |d| ShrinkageDraw::from_draw(d, structure).map_or(f64::NAN, |s| s.meff_group[g])),
        ));
    }
    q
}

fn write_draws(
    draws: &ChainDraws<PriorDraw>,
    names: &[String],
    labels: &[String],
    structure: &GroupStructure,
    out: &Path,
) -> Fallible<()> {
    let q = quantities(names, labels, structure);
    let mut header = vec!["iteration", "log_density", "divergent", "tree_depth"];
    header.extend(q.iter().map(|(n, _)| n.as_str()));
    for (k, chain) in draws.chains.iter().enumerate() {
        let mut t = Table::create(&out.join(format!("draws_chain{}.csv", k + 1)), &header)?;
        for (i, d) in chain.draws.iter().enumerate() {
            let mut r = row![i + 1, chain.log_density[i], u64::from(chain.divergent[i]), u64::from(chain.tree_depth[i])];
            r.extend(q.iter().map(|(_, f)| f(d).into()));
            t.write(r)?;
        }
        t.finish()?;
    }
    Ok(())
}

fn write_summary(
    draws: &ChainDraws<PriorDraw>,
    names: &[String],
    labels: &[String],
    structure: &GroupStructure,
    out: &Path,
) -> Fallible<()> {
    let mut t = Table::create(&out.join("summary.csv"), &["quantity", "mean", "sd", "q05", "q95", "rhat", "ess"])?;
    for (name, f) in quantities(names, labels, structure) {
        let per_chain = draws.quantity(|d, _| f(d));
        let mut all: Vec<f64> = per_chain.concat();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let sd = if all.len() > 1 { (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { f64::NAN };
        all.sort_by(f64::total_cmp);
        let r = rhat(&per_chain).unwrap_or(f64::NAN);
        let e = ess(&per_chain).unwrap_or(f64::NAN);
        t.write(row![name, mean, sd, quantile_sorted(&all, 0.05), quantile_sorted(&all, 0.95), r, e])?;
    }
    t.finish()
}
