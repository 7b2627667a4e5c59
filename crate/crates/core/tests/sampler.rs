mod common;

use common::*;
use groupr2::model::GroupR2Model;
use groupr2::rng::{seeded, std_normal};
use groupr2::sampler::{ess, mcse_mean, rhat, sample, Target};
use groupr2::{GroupStructure, Hyperparams, RegressionData, Result, SamplerConfig};

/// Gaussian with independent coordinates.
struct Diagonal {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Target for Diagonal {
    type Draw = ();
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut lp = 0.0;
        for i in 0..theta.len() {
            let u = (theta[i] - self.mean[i]) / self.sd[i];
            lp -= 0.5 * u * u;
            grad[i] = -u / self.sd[i];
        }
        Ok(lp)
    }
    fn transform(&self, _: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Bivariate normal with unit variances and correlation `rho`.
struct Correlated {
    rho: f64,
}

impl Target for Correlated {
    type Draw = ();
    fn dim(&self) -> usize {
        2
    }
    fn log_density_grad(&self, t: &[f64], grad: &mut [f64]) -> Result<f64> {
        let k = 1.0 / (1.0 - self.rho * self.rho);
        grad[0] = -k * (t[0] - self.rho * t[1]);
        grad[1] = -k * (t[1] - self.rho * t[0]);
        Ok(-0.5 * k * (t[0] * t[0] - 2.0 * self.rho * t[0] * t[1] + t[1] * t[1]))
    }
    fn transform(&self, _: &[f64]) -> Result<()> {
        Ok(())
    }
}

fn within(chains: &[Vec<f64>], truth: f64, k: f64) -> (bool, f64, f64) {
    let m = mean(&chains.concat());
    let se = mcse_mean(chains).unwrap();
    ((m - truth).abs() < k * se, m, se)
}

fn quick(seed: u64) -> SamplerConfig {
    SamplerConfig { n_warmup: 500, n_samples: 1000, target_accept: 0.8, seed, ..Default::default() }
}

#[test]
fn standard_normal_moments() {
    let t = Diagonal { mean: vec![0.0; 10], sd: vec![1.0; 10] };
    let d = sample(&t, None, &quick(14)).unwrap();
    assert_eq!(d.total(), 4000);
    for i in 0..10 {
        let x = d.coordinate(i);
        let (ok, m, se) = within(&x, 0.0, 3.0);
        assert!(ok, "coordinate {i}: mean {m}, mcse {se}");
        let sq: Vec<Vec<f64>> = x.iter().map(|c| c.iter().map(|v| v * v).collect()).collect();
        let (ok, m, se) = within(&sq, 1.0, 3.0);
        assert!(ok, "coordinate {i}: variance {m}, mcse {se}");
    }
    assert_eq!(d.n_divergent(), 0);
    assert!(d.ebfmi().iter().all(|&e| e > 0.3));
}

/// y_i ~ N(μ, 1) with μ ~ N(m0, s0²).
struct NormalMean {
    y: Vec<f64>,
    m0: f64,
    s0: f64,
}

impl Target for NormalMean {
    type Draw = f64;
    fn dim(&self) -> usize {
        1
    }
    fn log_density_grad(&self, t: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mu = t[0];
        let u = (mu - self.m0) / self.s0;
        let mut lp = -0.5 * u * u;
        grad[0] = -u / self.s0;
        for &y in &self.y {
            lp -= 0.5 * (y - mu).powi(2);
            grad[0] += y - mu;
        }
        Ok(lp)
    }
    fn transform(&self, t: &[f64]) -> Result<f64> {
        Ok(t[0])
    }
}

#[test]
fn mcse_z_scores_are_calibrated_across_seeds() {
    // (estimate - truth) / mcse over 20 runs x 10 coordinates should look standard normal
    let t = Diagonal { mean: vec![0.0; 10], sd: vec![1.0; 10] };
    let mut z = Vec::new();
    for seed in 0..20 {
        let cfg = SamplerConfig { n_warmup: 300, n_samples: 500, target_accept: 0.8, seed: 1000 + seed, ..Default::default() };
        let d = sample(&t, None, &cfg).unwrap();
        for i in 0..10 {
            let x = d.coordinate(i);
            z.push(mean(&x.concat()) / mcse_mean(&x).unwrap());
        }
    }
    let rms = (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt();
    assert!((0.8..1.25).contains(&rms), "rms z {rms}");
    assert!(mean(&z).abs() < 0.25, "mean z {}", mean(&z));
}

#[test]
fn conjugate_normal_mean() {
    let mut rng = seeded(12);
    let y: Vec<f64> = (0..15).map(|_| 2.0 + std_normal(&mut rng)).collect();
    let (m0, s0) = (-1.0, 0.5);
    let prec = 1.0 / (s0 * s0) + y.len() as f64;
    let post_var = 1.0 / prec;
    let post_mean = post_var * (m0 / (s0 * s0) + y.iter().sum::<f64>());
    let d = sample(&NormalMean { y, m0, s0 }, None, &quick(13)).unwrap();
    let mu = d.quantity(|m, _| *m);
    let (ok, m, se) = within(&mu, post_mean, 3.0);
    assert!(ok, "mean {m} vs {post_mean}, mcse {se}");
    let sq: Vec<Vec<f64>> = mu.iter().map(|c| c.iter().map(|v| (v - post_mean).powi(2)).collect()).collect();
    let (ok, v, se) = within(&sq, post_var, 3.0);
    assert!(ok, "variance {v} vs {post_var}, mcse {se}");
}

#[test]
fn same_seed_same_draws_and_chain_streams_are_independent_of_count() {
    let t = Diagonal { mean: vec![1.0, -2.0, 0.5], sd: vec![1.0, 0.1, 3.0] };
    let cfg = SamplerConfig { n_warmup: 200, n_samples: 200, seed: 99, ..Default::default() };
    let a = sample(&t, None, &cfg).unwrap();
    let b = sample(&t, None, &cfg).unwrap();
    for (ca, cb) in a.chains.iter().zip(&b.chains) {
        assert_eq!(ca.theta, cb.theta);
    }
    let one = sample(&t, None, &SamplerConfig { n_chains: 1, ..cfg }).unwrap();
    assert_eq!(one.chains[0].theta, a.chains[0].theta);
}

#[test]
fn two_dimensional_gaussian_covariance_over_seeds() {
    let rho = 0.8;
    for seed in 0..10 {
        let d = sample(&Correlated { rho }, None, &quick(500 + seed)).unwrap();
        let x = d.coordinate(0);
        let y = d.coordinate(1);
        let xy: Vec<Vec<f64>> = x.iter().zip(&y).map(|(a, b)| a.iter().zip(b).map(|(u, v)| u * v).collect()).collect();
        let (ok, m, se) = within(&xy, rho, 3.0);
        assert!(ok, "seed {seed}: covariance {m}, mcse {se}");
        for (i, c) in [x, y].iter().enumerate() {
            let sq: Vec<Vec<f64>> = c.iter().map(|c| c.iter().map(|v| v * v).collect()).collect();
            let (ok, m, se) = within(&sq, 1.0, 3.0);
            assert!(ok, "seed {seed}: variance {i} {m}, mcse {se}");
        }
    }
}

#[test]
fn bad_configs_are_rejected() {
    let t = Diagonal { mean: vec![0.0], sd: vec![1.0] };
    for cfg in [
        SamplerConfig { n_warmup: 100, ..Default::default() },
        SamplerConfig { target_accept: 0.5, ..Default::default() },
        SamplerConfig { max_tree_depth: 13, ..Default::default() },
        SamplerConfig { n_chains: 0, ..Default::default() },
    ] {
        assert!(sample(&t, None, &cfg).unwrap_err().is_domain());
    }
    assert!(sample(&t, Some(&[0.0, 1.0]), &SamplerConfig::default()).is_err());
}

struct Nowhere;

impl Target for Nowhere {
    type Draw = ();
    fn dim(&self) -> usize {
        1
    }
    fn log_density_grad(&self, _: &[f64], _: &mut [f64]) -> Result<f64> {
        Ok(f64::NEG_INFINITY)
    }
    fn transform(&self, _: &[f64]) -> Result<()> {
        Ok(())
    }
}

#[test]
fn init_failure_is_an_error() {
    assert!(matches!(sample(&Nowhere, None, &SamplerConfig::default()), Err(groupr2::Error::Sampler(_))));
}

fn iid_chains(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..m).map(|_| (0..n).map(|_| std_normal(&mut rng)).collect()).collect()
}

#[test]
fn rhat_examples() {
    let r = rhat(&iid_chains(4, 1000, 21)).unwrap();
    assert!((0.99..=1.01).contains(&r), "iid R-hat {r}");
    let mut shifted = iid_chains(4, 1000, 22);
    shifted[2].iter_mut().for_each(|v| *v += 5.0);
    let r = rhat(&shifted).unwrap();
    assert!(r > 1.2, "shifted R-hat {r}");
    assert_eq!(rhat(&vec![vec![3.0; 100]; 4]).unwrap(), 1.0);
    assert!(rhat(&iid_chains(1, 100, 1)).unwrap_err().is_domain());
    assert!(rhat(&iid_chains(2, 3, 1)).unwrap_err().is_domain());
}

#[test]
fn ess_examples() {
    let e = ess(&iid_chains(4, 1000, 23)).unwrap();
    assert!((0.8..=1.2).contains(&(e / 4000.0)), "iid ESS {e}");
    let rho: f64 = 0.9;
    let mut rng = seeded(24);
    let ar: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let mut x = std_normal(&mut rng);
            (0..1000)
                .map(|_| {
                    x = rho * x + (1.0 - rho * rho).sqrt() * std_normal(&mut rng);
                    x
                })
                .collect()
        })
        .collect();
    let want = 4000.0 * (1.0 - rho) / (1.0 + rho);
    let e = ess(&ar).unwrap();
    assert!((e / want - 1.0).abs() < 0.3, "AR(1) ESS {e}, expected {want}");
    assert_eq!(ess(&vec![vec![1.5; 50]; 2]).unwrap(), 100.0);
}

#[test]
fn prior_mode_recovers_direct_prior_marginals() {
    // a1 = G a_G, so τ_g² ~ BetaPrime(a_G, a2) as well
    let s = GroupStructure::equal(2, 2).unwrap();
    let h = Hyperparams::coupled(2.0, 1.0, 1.0, &s).unwrap();
    let model = GroupR2Model::new(RegressionData::empty(s.clone()), h).unwrap();
    let cfg = SamplerConfig { n_warmup: 1000, n_samples: 5000, target_accept: 0.9, seed: 31, ..Default::default() };
    let d = sample(&model, None, &cfg).unwrap();
    type Getter = Box<dyn Fn(&groupr2::PriorDraw) -> f64>;
    let checks: [(&str, Getter, f64, f64); 3] = [
        ("tau2", Box::new(|p| p.tau2), 2.0, 1.0),
        ("tau2_g", Box::new(|p| p.tau2_group(1)), 1.0, 1.0),
        ("lambda2", Box::new(|p| p.lambda2[2]), 0.5, 1.0),
    ];
    for (name, f, s1, s2) in checks {
        let eff = d.ess(|p, _| f(p)).unwrap();
        let r = d.rhat(|p, _| f(p)).unwrap();
        let draws: Vec<f64> = d.iter().map(&f).collect();
        let ks = ks_distance(draws, betaprime_cdf(s1, s2));
        assert!(eff >= 2000.0, "{name}: ESS {eff}");
        assert!(r < 1.01, "{name}: R-hat {r}");
        assert!(ks < 0.02, "{name}: KS {ks} at ESS {eff}");
    }
}
