//! Resolved presets and rule-based recommendations.

use crate::config::RunConfig;
use crate::fail::Fallible;
use crate::output::write_json;
use groupr2::{recommend, GroupStructure, Hyperparams};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct Resolved {
    name: String,
    model_group_sizes: Vec<usize>,
    hyperparams: Hyperparams,
}

#[derive(Serialize)]
struct Report {
    presets: Vec<Resolved>,
    recommendation: Option<Recommended>,
}

#[derive(Serialize)]
struct Recommended {
    hyperparams: Hyperparams,
    rationale: Vec<String>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Fallible<()> {
    let hc = &cfg.hyper;
    let s = GroupStructure::new(hc.group_sizes.clone())?;
    let mut report = Report { presets: Vec::new(), recommendation: None };
    for p in &hc.presets {
        report.presets.push(Resolved {
            name: p.to_string(),
            model_group_sizes: p.model_structure(&s).sizes().to_vec(),
            hyperparams: p.resolve(&s)?,
        });
    }
    if let Some(k) = &hc.knowledge {
        let r = recommend(k, &s)?;
        for line in &r.rationale {
            println!("{line}");
        }
        report.recommendation = Some(Recommended { hyperparams: r.hyper, rationale: r.rationale });
    }
    for p in &report.presets {
        let h = &p.hyperparams;
        println!("{}: a1 = {}, a2 = {}, a_G = {}, c = {:?}", p.name, h.a1(), h.a2(), h.a_g(), h.c());
    }
    write_json(&out.join("hyper.json"), &report)
}
