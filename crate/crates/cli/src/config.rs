//! Run configuration. Every field has a default so a run can start from an
//! empty file; the resolved value is echoed to `manifest.json`.

use crate::fail::{Failure, Fallible};
use groupr2::hyperopt::Knowledge;
use groupr2::{Hyperparams, PriorPreset, SamplerConfig, Signal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PriorPredictive,
    Density,
    Fit,
    Simulate,
    Hyper,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub sampler: SamplerSection,
    pub prior: PriorSpec,
    pub prior_predictive: PriorPredictiveConfig,
    pub density: DensityConfig,
    pub fit: FitConfig,
    pub simulate: SimulateConfig,
    pub hyper: HyperConfig,
}

/// Sampler settings; the seed comes from the run's top-level `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub target_accept: f64,
    pub max_tree_depth: u32,
    pub adapt: bool,
    pub step_size: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self {
            n_chains: d.n_chains,
            n_warmup: d.n_warmup,
            n_samples: d.n_samples,
            target_accept: d.target_accept,
            max_tree_depth: d.max_tree_depth,
            adapt: d.adapt,
            step_size: d.step_size,
        }
    }
}

impl SamplerSection {
    pub fn with_seed(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_chains: self.n_chains,
            n_warmup: self.n_warmup,
            n_samples: self.n_samples,
            target_accept: self.target_accept,
            max_tree_depth: self.max_tree_depth,
            seed,
            adapt: self.adapt,
            step_size: self.step_size,
        }
    }
}

/// A preset name or explicit hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Preset { preset: PriorPreset },
    Explicit(Hyperparams),
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Preset { preset: PriorPreset::GroupR2 { a_g: 0.5 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorPredictiveConfig {
    pub n_sims: usize,
    pub n_groups: usize,
    pub group_size: usize,
    pub a2: f64,
    pub a_g: Vec<f64>,
    pub c_g: Vec<f64>,
}

impl Default for PriorPredictiveConfig {
    fn default() -> Self {
        Self { n_sims: 4000, n_groups: 10, group_size: 20, a2: 0.5, a_g: vec![0.1, 0.5, 1.0], c_g: vec![0.1, 0.5, 1.0] }
    }
}

/// Evenly spaced points from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Fallible<Vec<f64>> {
        if self.n < 2 || !(self.from < self.to) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(Failure::usage(format!("bad grid {:?}: need from < to and n >= 2", self)));
        }
        let span = self.to - self.from;
        let last = (self.n - 1) as f64;
        Ok((0..self.n).map(|i| if i + 1 == self.n { self.to } else { self.from + span * i as f64 / last }).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub b: Grid,
    /// `(c_g, a2)` pairs for the marginal of a coefficient.
    pub marginal: Vec<(f64, f64)>,
    pub r2: Grid,
    pub tau2: Grid,
    /// `(mean, precision)` pairs of the R² prior.
    pub r2_mean_precision: Vec<(f64, f64)>,
    pub correlation_a_g: Vec<f64>,
    pub correlation_c_g: Grid,
    pub correlation_n_groups: usize,
    pub correlation_group_size: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            b: Grid { from: -5.0, to: 5.0, n: 201 },
            marginal: vec![(0.1, 0.5), (0.5, 0.5), (1.0, 0.5), (0.5, 0.1), (0.5, 1.0)],
            r2: Grid { from: 0.005, to: 0.995, n: 199 },
            tau2: Grid { from: 0.01, to: 10.0, n: 200 },
            r2_mean_precision: vec![(0.5, 1.0), (0.5, 5.0), (1.0 / 3.0, 3.0), (0.2, 10.0), (0.8, 10.0)],
            correlation_a_g: vec![0.1, 0.5, 1.0, 2.0],
            correlation_c_g: Grid { from: 0.05, to: 3.0, n: 60 },
            correlation_n_groups: 10,
            correlation_group_size: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// CSV with a `y` column and one column per predictor.
    pub data: Option<PathBuf>,
    /// CSV with columns `predictor,group`.
    pub groups: Option<PathBuf>,
    pub nongrouped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub replications: u64,
    pub n: usize,
    pub p: usize,
    pub group_size: usize,
    pub rho_in: f64,
    pub rho_out: f64,
    pub n_test: Option<usize>,
    pub signals: Vec<Signal>,
    pub r2: Vec<f64>,
    /// Grouped priors; each is paired with its nongrouped counterpart.
    pub priors: Vec<PriorPreset>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            replications: 20,
            n: 100,
            p: 40,
            group_size: 10,
            rho_in: 0.8,
            rho_out: 0.2,
            n_test: None,
            signals: vec![Signal::Distributed, Signal::Concentrated],
            r2: vec![0.25, 0.8],
            priors: vec![PriorPreset::GroupR2 { a_g: 1.0 }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    pub group_sizes: Vec<usize>,
    pub presets: Vec<PriorPreset>,
    pub knowledge: Option<Knowledge>,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            group_sizes: vec![10; 4],
            presets: vec![
                PriorPreset::GroupR2 { a_g: 0.1 },
                PriorPreset::GroupR2 { a_g: 0.5 },
                PriorPreset::GroupR2 { a_g: 1.0 },
                PriorPreset::Uniform,
                PriorPreset::Concentrated,
                PriorPreset::Distributed,
            ],
            knowledge: None,
        }
    }
}

/// Reads TOML, or JSON when the file ends in `.json`.
pub fn load(path: &Path) -> Fallible<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg: RunConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
    };
    // input paths are relative to the config file
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [&mut cfg.fit.data, &mut cfg.fit.groups].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

/// Makes input paths absolute so the manifest replays from anywhere.
pub fn absolutize(cfg: &mut RunConfig) -> Fallible<()> {
    for p in [&mut cfg.fit.data, &mut cfg.fit.groups].into_iter().flatten() {
        *p = std::path::absolute(&*p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}
