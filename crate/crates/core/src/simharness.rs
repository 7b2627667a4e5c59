//! Synthetic regression studies: correlated grouped designs, signal patterns,
//! and the metrics used to compare a grouped prior with its nongrouped
//! counterpart on shared data.

use crate::error::{ensure, Error, Result};
use crate::hyperopt::PriorPreset;
use crate::model::{fit, pointwise_predictive_logdens, standardize, RegressionData};
use crate::prior::{GroupStructure, PriorDraw};
use crate::rng::{derive_seed, std_normal, stream};
use crate::sampler::{ess, rhat, ChainDraws, SamplerConfig};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Borrow;

/// Credible level of the headline interval metrics.
pub const HEADLINE_LEVEL: f64 = 0.95;
/// Fewer draws than this make tail quantiles meaningless.
pub const MIN_DRAWS_FOR_INTERVALS: usize = 20;
/// Width of the fixed distributed pattern.
pub const DISTRIBUTED_SPAN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    /// `b_g1 = 2` in every group.
    Concentrated,
    /// `b_g1 ~ N(0, 3²)` in every group.
    RandomConcentrated,
    /// First group only: five coefficients of 0.5, then five of 1.
    Distributed,
    /// First group only: ten `N(0, 3²)` coefficients.
    RandomDistributed,
    /// Group 1 concentrated or distributed with equal odds; every other group
    /// concentrated (0.2), distributed (0.2) or empty (0.6).
    RandomCoefficients,
}

impl Signal {
    pub const ALL: [Signal; 5] = [
        Signal::Concentrated,
        Signal::RandomConcentrated,
        Signal::Distributed,
        Signal::RandomDistributed,
        Signal::RandomCoefficients,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            Signal::Concentrated => "con",
            Signal::RandomConcentrated => "rcon",
            Signal::Distributed => "dist",
            Signal::RandomDistributed => "rdist",
            Signal::RandomCoefficients => "rcoef",
        }
    }

    fn needs_span(&self) -> bool {
        matches!(self, Signal::Distributed | Signal::RandomDistributed | Signal::RandomCoefficients)
    }
}

fn default_group_size() -> usize {
    10
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    pub rho_in: f64,
    pub rho_out: f64,
    pub r2_target: f64,
    pub signal: Signal,
    #[serde(default)]
    pub seed: u64,
    /// Size of the held-out set; defaults to `n`.
    #[serde(default)]
    pub n_test: Option<usize>,
}

impl ScenarioSpec {
    /// The standard block-correlated design with `ρ_in = 0.8`,
    /// `ρ_out = 0.2` and groups of ten.
    pub fn standard(n: usize, p: usize, r2_target: f64, signal: Signal, seed: u64) -> Self {
        Self { n, p, group_size: 10, rho_in: 0.8, rho_out: 0.2, r2_target, signal, seed, n_test: None }
    }

    pub fn structure(&self) -> Result<GroupStructure> {
        GroupStructure::equal(self.p / self.group_size, self.group_size)
    }

    pub fn n_groups(&self) -> usize {
        self.p / self.group_size
    }
}

/// A validated scenario with its design covariance factorized.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    sigma_x: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

/// Block-exchangeable correlation matrix: ones on the diagonal, `rho_in`
/// within blocks of `group_size`, `rho_out` elsewhere.
pub fn block_correlation(p: usize, group_size: usize, rho_in: f64, rho_out: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i / group_size == j / group_size {
            rho_in
        } else {
            rho_out
        }
    })
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        ensure(spec.group_size >= 1 && spec.p >= 1 && spec.p % spec.group_size == 0, "ScenarioSpec", || {
            format!("p = {} must be a positive multiple of the group size {}", spec.p, spec.group_size)
        })?;
        ensure(spec.n >= 2 && spec.n_test.is_none_or(|m| m >= 1), "ScenarioSpec", || {
            format!("need n >= 2 and a nonempty test set, got n = {}, n_test = {:?}", spec.n, spec.n_test)
        })?;
        ensure(spec.r2_target > 0.0 && spec.r2_target < 1.0, "ScenarioSpec", || {
            format!("r2_target = {} must lie in (0, 1)", spec.r2_target)
        })?;
        ensure(!spec.signal.needs_span() || spec.group_size >= DISTRIBUTED_SPAN, "ScenarioSpec", || {
            format!("{:?} needs groups of at least {DISTRIBUTED_SPAN}, got {}", spec.signal, spec.group_size)
        })?;
        ensure(spec.rho_in.abs() < 1.0 && spec.rho_out.abs() < 1.0, "ScenarioSpec", || {
            format!("correlations ({}, {}) must lie in (-1, 1)", spec.rho_in, spec.rho_out)
        })?;
        let sigma_x = block_correlation(spec.p, spec.group_size, spec.rho_in, spec.rho_out);
        let chol = Cholesky::new(sigma_x.clone()).ok_or_else(|| {
            Error::domain(
                "ScenarioSpec",
                format!("correlations (rho_in, rho_out) = ({}, {}) give a non positive definite design", spec.rho_in, spec.rho_out),
            )
        })?;
        Ok(Self { spec, sigma_x, chol })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn sigma_x(&self) -> &DMatrix<f64> {
        &self.sigma_x
    }

    /// `n` rows from `N(0, Σ_X)`, not standardized.
    pub fn gen_raw_design<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let p = self.spec.p;
        let z = DMatrix::from_fn(n, p, |_, _| std_normal(rng));
        z * self.chol.l().transpose()
    }

    /// `n` standardized rows.
    pub fn gen_design<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        Ok(standardize(&self.gen_raw_design(n, rng))?.0)
    }

    pub fn gen_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<bool>) {
        let (p, k) = (self.spec.p, self.spec.group_size);
        let g = p / k;
        let mut b = vec![0.0; p];
        let concentrated = |b: &mut [f64], grp: usize| b[grp * k] = 2.0;
        let distributed = |b: &mut [f64], grp: usize| {
            for i in 0..DISTRIBUTED_SPAN {
                b[grp * k + i] = if i < 5 { 0.5 } else { 1.0 };
            }
        };
        match self.spec.signal {
            Signal::Concentrated => (0..g).for_each(|grp| concentrated(&mut b, grp)),
            Signal::RandomConcentrated => (0..g).for_each(|grp| b[grp * k] = 3.0 * std_normal(rng)),
            Signal::Distributed => distributed(&mut b, 0),
            Signal::RandomDistributed => (0..DISTRIBUTED_SPAN).for_each(|i| b[i] = 3.0 * std_normal(rng)),
            Signal::RandomCoefficients => {
                if rng.random::<f64>() < 0.5 {
                    concentrated(&mut b, 0);
                } else {
                    distributed(&mut b, 0);
                }
                for grp in 1..g {
                    let u: f64 = rng.random();
                    if u < 0.2 {
                        concentrated(&mut b, grp);
                    } else if u < 0.4 {
                        distributed(&mut b, grp);
                    }
                }
            }
        }
        let mask = b.iter().map(|&v| v != 0.0).collect();
        (b, mask)
    }

    /// Training and test data for replication `rep`.
    pub fn simulate(&self, rep: u64) -> Result<Dataset> {
        let mut rng = stream(derive_seed(self.spec.seed, &[rep]), 0);
        let (b, active) = self.gen_coefficients(&mut rng);
        let sigma2 = sigma_from_r2(&b, &self.sigma_x, self.spec.r2_target)?;
        let sigma = sigma2.sqrt();
        let (x, means, sds) = standardize(&self.gen_raw_design(self.spec.n, &mut rng))?;
        let n_test = self.spec.n_test.unwrap_or(self.spec.n);
        let mut x_test = self.gen_raw_design(n_test, &mut rng);
        for (j, mut col) in x_test.column_iter_mut().enumerate() {
            col.apply(|v| *v = (*v - means[j]) / sds[j]);
        }
        let bv = DVector::from_column_slice(&b);
        let mut respond = |x: &DMatrix<f64>| -> Vec<f64> { (x * &bv).iter().map(|m| m + sigma * std_normal(&mut rng)).collect() };
        let y = respond(&x);
        let y_test = respond(&x_test);
        Ok(Dataset { x, y, x_test, y_test, b, active, sigma2 })
    }
}

/// One simulated data set; `x` is standardized and `x_test` uses the same
/// column means and scales.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub x_test: DMatrix<f64>,
    pub y_test: Vec<f64>,
    pub b: Vec<f64>,
    pub active: Vec<bool>,
    pub sigma2: f64,
}

/// Standardized design for `spec`.
pub fn gen_design<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<DMatrix<f64>> {
    Scenario::new(spec.clone())?.gen_design(spec.n, rng)
}

pub fn gen_coefficients<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<(Vec<f64>, Vec<bool>)> {
    Ok(Scenario::new(spec.clone())?.gen_coefficients(rng))
}

/// Noise variance giving population `R² = bᵀΣb / (bᵀΣb + σ²)`.
pub fn sigma_from_r2(b: &[f64], sigma_x: &DMatrix<f64>, r2_target: f64) -> Result<f64> {
    ensure(sigma_x.nrows() == b.len() && sigma_x.ncols() == b.len(), "sigma_from_r2", || {
        format!("b has {} entries but the covariance is {}x{}", b.len(), sigma_x.nrows(), sigma_x.ncols())
    })?;
    ensure(r2_target > 0.0 && r2_target < 1.0, "sigma_from_r2", || format!("R² = {r2_target} must lie in (0, 1)"))?;
    let bv = DVector::from_column_slice(b);
    let signal = (bv.transpose() * sigma_x * &bv)[(0, 0)];
    ensure(signal > 0.0, "sigma_from_r2", || "bᵀΣb must be positive; a zero signal has no R²".into())?;
    Ok(signal * (1.0 - r2_target) / r2_target)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `Σ_i ln((1/S) Σ_s p(y_i | θ^(s)))`.
pub fn elpd<D: Borrow<PriorDraw>>(y: &[f64], x: &DMatrix<f64>, draws: &[D]) -> Result<f64> {
    ensure(!draws.is_empty(), "elpd", || "need at least one draw".into())?;
    ensure(x.nrows() == y.len(), "elpd", || format!("{} responses for {} rows", y.len(), x.nrows()))?;
    let p = x.ncols();
    ensure(draws.iter().all(|d| d.borrow().b.len() == p), "elpd", || {
        format!("draws do not have {p} coefficients")
    })?;
    let s = draws.len() as f64;
    let mut total = 0.0;
    let mut buf = vec![0.0; draws.len()];
    let mut row = vec![0.0; p];
    for i in 0..y.len() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = x[(i, j)];
        }
        for (k, d) in draws.iter().enumerate() {
            buf[k] = pointwise_predictive_logdens(y[i], &row, d.borrow())?;
        }
        total += log_sum_exp(&buf) - s.ln();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Zero,
    Nonzero,
}

/// `(1/|I|) Σ_{i∈I} sqrt((1/S) Σ_s (b_i^(s) - b_i)²)` over the subset `I` of
/// coefficients whose true value is zero, nonzero, or any.
pub fn rmse_posterior<D: Borrow<PriorDraw>>(draws: &[D], b_true: &[f64], subset: Subset) -> Result<f64> {
    ensure(!draws.is_empty(), "rmse_posterior", || "need at least one draw".into())?;
    ensure(draws.iter().all(|d| d.borrow().b.len() == b_true.len()), "rmse_posterior", || {
        format!("draws do not have {} coefficients", b_true.len())
    })?;
    let idx: Vec<usize> = (0..b_true.len())
        .filter(|&i| match subset {
            Subset::All => true,
            Subset::Zero => b_true[i] == 0.0,
            Subset::Nonzero => b_true[i] != 0.0,
        })
        .collect();
    ensure(!idx.is_empty(), "rmse_posterior", || format!("no coefficients in the {subset:?} subset"))?;
    let s = draws.len() as f64;
    let total: f64 = idx
        .iter()
        .map(|&i| (draws.iter().map(|d| (d.borrow().b[i] - b_true[i]).powi(2)).sum::<f64>() / s).sqrt())
        .sum();
    Ok(total / idx.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaTransform {
    Identity,
    Asinh,
}

/// `Q(grouped) - Q(nongrouped)`, optionally through `asinh`.
pub fn delta_metric(q_grouped: f64, q_nongrouped: f64, transform: DeltaTransform) -> f64 {
    let d = q_grouped - q_nongrouped;
    match transform {
        DeltaTransform::Identity => d,
        DeltaTransform::Asinh => d.asinh(),
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The 99 credible levels swept for ROC curves.
pub fn roc_levels() -> Vec<f64> {
    (0..99).map(|k| 0.005 + 0.99 * k as f64 / 98.0).collect()
}

/// Interval-based metrics at several credible levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub levels: Vec<f64>,
    pub coverage: Vec<f64>,
    pub mean_width: Vec<f64>,
    pub sensitivity: Vec<f64>,
    pub specificity: Vec<f64>,
}

impl IntervalMetrics {
    /// `(fpr, tpr)` per level, sorted by false positive rate.
    pub fn roc_points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> =
            self.sensitivity.iter().zip(&self.specificity).map(|(&t, &s)| (1.0 - s, t)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts
    }
}

/// Equal-tailed marginal intervals at each level. A coefficient counts as
/// selected when its interval excludes zero strictly; a degenerate interval at
/// exactly the true value covers it. With no active (or no inactive)
/// coefficients the sensitivity (specificity) is 1.
pub fn coverage_and_roc<D: Borrow<PriorDraw>>(
    draws: &[D],
    b_true: &[f64],
    active: &[bool],
    levels: &[f64],
) -> Result<IntervalMetrics> {
    ensure(draws.len() >= MIN_DRAWS_FOR_INTERVALS, "coverage_and_roc", || {
        format!("need at least {MIN_DRAWS_FOR_INTERVALS} draws for interval metrics, got {}", draws.len())
    })?;
    ensure(active.len() == b_true.len(), "coverage_and_roc", || "mask and truth lengths differ".into())?;
    ensure(draws.iter().all(|d| d.borrow().b.len() == b_true.len()), "coverage_and_roc", || {
        format!("draws do not have {} coefficients", b_true.len())
    })?;
    ensure(levels.iter().all(|&l| l > 0.0 && l < 1.0), "coverage_and_roc", || "levels must lie in (0, 1)".into())?;
    let p = b_true.len();
    let sorted: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut v: Vec<f64> = draws.iter().map(|d| d.borrow().b[i]).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let n_active = active.iter().filter(|&&a| a).count();
    let n_inactive = p - n_active;
    let mut out = IntervalMetrics {
        levels: levels.to_vec(),
        coverage: Vec::new(),
        mean_width: Vec::new(),
        sensitivity: Vec::new(),
        specificity: Vec::new(),
    };
    for &level in levels {
        let a = 0.5 * (1.0 - level);
        let (mut covered, mut width, mut tp, mut tn) = (0usize, 0.0, 0usize, 0usize);
        for i in 0..p {
            let lo = quantile_sorted(&sorted[i], a);
            let hi = quantile_sorted(&sorted[i], 1.0 - a);
            if lo <= b_true[i] && b_true[i] <= hi {
                covered += 1;
            }
            width += hi - lo;
            let selected = lo > 0.0 || hi < 0.0;
            match (active[i], selected) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                _ => {}
            }
        }
        out.coverage.push(covered as f64 / p as f64);
        out.mean_width.push(width / p as f64);
        out.sensitivity.push(if n_active == 0 { 1.0 } else { tp as f64 / n_active as f64 });
        out.specificity.push(if n_inactive == 0 { 1.0 } else { tn as f64 / n_inactive as f64 });
    }
    Ok(out)
}

/// Median of `v` (NaN entries dropped) with its Monte Carlo standard error
/// `sqrt(π/2) sd / sqrt(n)`, the large-sample value for near-normal data.
pub fn median_with_mcse(v: &[f64]) -> (f64, f64) {
    let mut x: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let med = quantile_sorted(&x, 0.5);
    if x.len() < 2 {
        return (med, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (med, (std::f64::consts::FRAC_PI_2).sqrt() * sd / n.sqrt())
}

/// Everything measured on one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub elpd: f64,
    pub rmse_all: f64,
    /// `NaN` when no true coefficient is zero.
    pub rmse_zero: f64,
    /// `NaN` when every true coefficient is zero.
    pub rmse_nonzero: f64,
    pub coverage95: f64,
    pub interval_width_mean: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub roc_points: Vec<(f64, f64)>,
    /// Over the coefficients, `ln τ²`, `ln σ` and the intercept.
    pub rhat_max: f64,
    pub ess_min: f64,
    pub divergences: usize,
}

/// Metrics of one posterior fit against the truth and a held-out set.
pub fn evaluate(draws: &ChainDraws<PriorDraw>, data: &Dataset) -> Result<MetricsReport> {
    let all: Vec<&PriorDraw> = draws.iter().collect();
    let subset_rmse = |s| match rmse_posterior(&all, &data.b, s) {
        Ok(v) => Ok(v),
        Err(e) if e.is_domain() => Ok(f64::NAN),
        Err(e) => Err(e),
    };
    let iv = coverage_and_roc(&all, &data.b, &data.active, &roc_levels())?;
    let head = coverage_and_roc(&all, &data.b, &data.active, &[HEADLINE_LEVEL])?;

    let p = data.b.len();
    let mut quantities: Vec<Vec<Vec<f64>>> = (0..p).map(|j| draws.quantity(|d, _| d.b[j])).collect();
    quantities.push(draws.quantity(|d, _| d.tau2.ln()));
    quantities.push(draws.quantity(|d, _| 0.5 * d.sigma2.ln()));
    quantities.push(draws.quantity(|d, _| d.b0));
    let mut rhat_max: f64 = 0.0;
    let mut ess_min = f64::INFINITY;
    for q in &quantities {
        if draws.n_chains() >= 2 {
            rhat_max = rhat_max.max(rhat(q)?);
        } else {
            rhat_max = f64::NAN;
        }
        ess_min = ess_min.min(ess(q)?);
    }

    Ok(MetricsReport {
        elpd: elpd(&data.y_test, &data.x_test, &all)?,
        rmse_all: subset_rmse(Subset::All)?,
        rmse_zero: subset_rmse(Subset::Zero)?,
        rmse_nonzero: subset_rmse(Subset::Nonzero)?,
        coverage95: head.coverage[0],
        interval_width_mean: head.mean_width[0],
        sensitivity: head.sensitivity[0],
        specificity: head.specificity[0],
        roc_points: iv.roc_points(),
        rhat_max,
        ess_min,
        divergences: draws.n_divergent(),
    })
}

/// Fits `preset` to `data` and evaluates it.
pub fn fit_and_evaluate(
    data: &Dataset,
    structure: &GroupStructure,
    preset: PriorPreset,
    config: &SamplerConfig,
) -> Result<MetricsReport> {
    let hyper = preset.resolve(structure)?;
    let s = preset.model_structure(structure);
    let reg = RegressionData::new(data.y.clone(), data.x.clone(), s)?;
    let draws = fit(reg, hyper, config)?;
    evaluate(&draws, data)
}

/// A grouped and a nongrouped fit on the same replication data.
#[derive(Debug, Clone)]
pub struct PairedReplication {
    pub replication: u64,
    pub grouped: Result<MetricsReport>,
    pub nongrouped: Result<MetricsReport>,
}

impl PairedReplication {
    /// `ΔQ` for a metric picked by `f`, if both fits succeeded.
    pub fn delta(&self, f: impl Fn(&MetricsReport) -> f64, transform: DeltaTransform) -> Option<f64> {
        match (&self.grouped, &self.nongrouped) {
            (Ok(g), Ok(n)) => Some(delta_metric(f(g), f(n), transform)),
            _ => None,
        }
    }
}

/// Runs replications `0..n_reps` of `spec`, fitting `grouped` and its paired
/// nongrouped prior to identical data. Each replication derives its data and
/// sampler seeds from `spec.seed`; results come back in replication order.
pub fn run_paired(
    spec: &ScenarioSpec,
    grouped: PriorPreset,
    nongrouped: PriorPreset,
    config: &SamplerConfig,
    n_reps: u64,
) -> Result<Vec<PairedReplication>> {
    let scenario = Scenario::new(spec.clone())?;
    let structure = spec.structure()?;
    let out: Vec<PairedReplication> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let cfg = SamplerConfig { seed: derive_seed(spec.seed, &[rep, 1]), ..*config };
            match scenario.simulate(rep) {
                Ok(data) => PairedReplication {
                    replication: rep,
                    grouped: fit_and_evaluate(&data, &structure, grouped, &cfg),
                    nongrouped: fit_and_evaluate(&data, &structure, nongrouped, &cfg),
                },
                Err(e) => PairedReplication { replication: rep, grouped: Err(e.clone()), nongrouped: Err(e) },
            }
        })
        .collect();
    Ok(out)
}
