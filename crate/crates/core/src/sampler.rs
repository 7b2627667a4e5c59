//! No-U-Turn sampler with multinomial trajectory sampling, dual-averaging step
//! size adaptation and a windowed diagonal metric, plus split-R̂ and bulk ESS.

mod diagnostics;
mod nuts;

pub use diagnostics::{ess, ess_mean, mcse_mean, rhat};

use crate::error::{Error, Result};
use crate::rng::stream;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A differentiable log density on `R^dim`.
pub trait Target: Sync {
    /// What a stored draw is turned into.
    type Draw: Clone + Send;

    fn dim(&self) -> usize;

    /// Log density at `theta`, writing its gradient into `grad`.
    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn transform(&self, theta: &[f64]) -> Result<Self::Draw>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub target_accept: f64,
    pub max_tree_depth: u32,
    pub seed: u64,
    /// Adapt the step size and metric during warmup.
    pub adapt: bool,
    /// Step size used when adaptation is off.
    pub step_size: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            n_warmup: 1000,
            n_samples: 1000,
            target_accept: 0.95,
            max_tree_depth: 10,
            seed: 1,
            adapt: true,
            step_size: 0.1,
        }
    }
}

/// Energy error beyond which a trajectory counts as divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;
/// Post-warmup divergence rate that triggers a warning.
pub const DIVERGENCE_WARNING_RATE: f64 = 0.25;
const MAX_INIT_TRIES: usize = 100;
const INIT_RADIUS: f64 = 2.0;

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::domain("SamplerConfig", msg));
        if self.n_chains == 0 || self.n_samples == 0 {
            return bad(format!("need at least one chain and one draw, got {} x {}", self.n_chains, self.n_samples));
        }
        if self.adapt && self.n_warmup < 150 {
            return bad(format!("adaptation needs n_warmup >= 150, got {}", self.n_warmup));
        }
        if !(0.6..=0.99).contains(&self.target_accept) {
            return bad(format!("target_accept must lie in [0.6, 0.99], got {}", self.target_accept));
        }
        if self.max_tree_depth == 0 || self.max_tree_depth > 12 {
            return bad(format!("max_tree_depth must lie in 1..=12, got {}", self.max_tree_depth));
        }
        if !self.adapt && !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        Ok(())
    }
}

/// Post-warmup output of one chain.
#[derive(Debug, Clone)]
pub struct Chain<D> {
    /// Unconstrained draws, one row per iteration.
    pub theta: Vec<Vec<f64>>,
    pub draws: Vec<D>,
    pub log_density: Vec<f64>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<u32>,
    pub n_leapfrog: Vec<u32>,
    pub accept_stat: Vec<f64>,
    /// Hamiltonian at the selected point.
    pub energy: Vec<f64>,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
}

/// Draws from every chain, merged in chain order.
#[derive(Debug, Clone)]
pub struct ChainDraws<D> {
    pub chains: Vec<Chain<D>>,
    pub config: SamplerConfig,
    pub warnings: Vec<String>,
}

impl<D> ChainDraws<D> {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_samples(&self) -> usize {
        self.chains.first().map_or(0, |c| c.theta.len())
    }

    pub fn total(&self) -> usize {
        self.chains.iter().map(|c| c.theta.len()).sum()
    }

    /// A scalar quantity per chain and draw.
    pub fn quantity(&self, f: impl Fn(&D, &[f64]) -> f64) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.draws.iter().zip(&c.theta).map(|(d, t)| f(d, t)).collect()).collect()
    }

    /// Unconstrained coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Vec<Vec<f64>> {
        self.quantity(|_, t| t[i])
    }

    /// All draws in chain order.
    pub fn iter(&self) -> impl Iterator<Item = &D> {
        self.chains.iter().flat_map(|c| c.draws.iter())
    }

    pub fn rhat(&self, f: impl Fn(&D, &[f64]) -> f64) -> Result<f64> {
        rhat(&self.quantity(f))
    }

    pub fn ess(&self, f: impl Fn(&D, &[f64]) -> f64) -> Result<f64> {
        ess(&self.quantity(f))
    }

    pub fn n_divergent(&self) -> usize {
        self.chains.iter().map(|c| c.divergent.iter().filter(|&&d| d).count()).sum()
    }

    pub fn divergence_rate(&self) -> f64 {
        self.n_divergent() as f64 / self.total().max(1) as f64
    }

    /// Energy Bayesian fraction of missing information, per chain.
    pub fn ebfmi(&self) -> Vec<f64> {
        self.chains
            .iter()
            .map(|c| {
                let e = &c.energy;
                let n = e.len() as f64;
                let m = e.iter().sum::<f64>() / n;
                let var = e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let num = e.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / n;
                num / var
            })
            .collect()
    }
}

/// Runs `config.n_chains` chains in parallel.
///
/// Chain `k` draws from stream `k` of `config.seed`, so its output does not
/// depend on how many other chains run. `init` fixes the starting point of
/// every chain; otherwise each starts uniformly in `[-2, 2]^dim`.
pub fn sample<T: Target>(target: &T, init: Option<&[f64]>, config: &SamplerConfig) -> Result<ChainDraws<T::Draw>> {
    config.validate()?;
    if let Some(init) = init {
        if init.len() != target.dim() {
            return Err(Error::domain("sample", format!("init has {} values, target has {}", init.len(), target.dim())));
        }
    }
    let chains = (0..config.n_chains)
        .into_par_iter()
        .map(|k| run_chain(target, init, config, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ChainDraws { chains, config: *config, warnings: Vec::new() };
    let rate = out.divergence_rate();
    if rate > DIVERGENCE_WARNING_RATE {
        let msg = format!("{:.1}% of post-warmup transitions diverged", 100.0 * rate);
        log::warn!("{msg}");
        out.warnings.push(msg);
    }
    Ok(out)
}

fn initial_point<T: Target, R: Rng>(target: &T, init: Option<&[f64]>, rng: &mut R) -> Result<Vec<f64>> {
    let d = target.dim();
    let mut grad = vec![0.0; d];
    let finite = |theta: &[f64], grad: &mut [f64]| {
        matches!(target.log_density_grad(theta, grad), Ok(lp) if lp.is_finite())
            && grad.iter().all(|g| g.is_finite())
    };
    if let Some(init) = init {
        if finite(init, &mut grad) {
            return Ok(init.to_vec());
        }
    }
    for _ in 0..MAX_INIT_TRIES {
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-INIT_RADIUS..INIT_RADIUS)).collect();
        if finite(&theta, &mut grad) {
            return Ok(theta);
        }
    }
    Err(Error::Sampler(format!("no finite starting point after {MAX_INIT_TRIES} tries")))
}

fn run_chain<T: Target>(target: &T, init: Option<&[f64]>, config: &SamplerConfig, id: u64) -> Result<Chain<T::Draw>> {
    let mut rng = stream(config.seed, id);
    let theta0 = initial_point(target, init, &mut rng)?;
    let mut nuts = nuts::Nuts::new(target, theta0, config.max_tree_depth)?;
    if config.adapt {
        nuts::warmup(&mut nuts, config, &mut rng)?;
    } else {
        nuts.step_size = config.step_size;
        for _ in 0..config.n_warmup {
            nuts.transition(&mut rng)?;
        }
    }
    let n = config.n_samples;
    let mut chain = Chain {
        theta: Vec::with_capacity(n),
        draws: Vec::with_capacity(n),
        log_density: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        n_leapfrog: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        step_size: nuts.step_size,
        inv_metric: nuts.inv_metric.clone(),
    };
    for _ in 0..n {
        let t = nuts.transition(&mut rng)?;
        chain.draws.push(target.transform(&nuts.theta)?);
        chain.theta.push(nuts.theta.clone());
        chain.log_density.push(nuts.lp);
        chain.divergent.push(t.divergent);
        chain.tree_depth.push(t.depth);
        chain.n_leapfrog.push(t.n_leapfrog);
        chain.accept_stat.push(t.accept_stat);
        chain.energy.push(t.energy);
    }
    Ok(chain)
}
