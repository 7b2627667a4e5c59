mod common;

use common::*;
use groupr2::rng::{seeded, std_normal};
use groupr2::simharness::*;
use groupr2::{PriorDraw, PriorPreset, SamplerConfig, ScenarioSpec, Signal};
use nalgebra::DMatrix;

fn draw(b: Vec<f64>, b0: f64, sigma2: f64) -> PriorDraw {
    let p = b.len();
    PriorDraw { tau2: 1.0, phi: vec![1.0], varphi: vec![vec![1.0 / p as f64; p]], sigma2, lambda2: vec![1.0; p], b, b0 }
}

fn column(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

#[test]
fn design_correlations() {
    let spec = ScenarioSpec::standard(5000, 20, 0.5, Signal::Concentrated, 3);
    let x = gen_design(&spec, &mut seeded(3)).unwrap();
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for i in 0..20 {
        let v = column(&x, i);
        assert!((mean(&v)).abs() < 1e-10);
        assert!((covariance(&v, &v) - 1.0).abs() < 1e-10);
        for j in 0..i {
            let r = correlation(&v, &column(&x, j));
            if i / 10 == j / 10 {
                assert!((r - 0.8).abs() < 0.03, "within ({i}, {j}): {r}");
                within.push(r);
            } else {
                between.push(r);
            }
        }
    }
    assert!((mean(&between) - 0.2).abs() < 0.03, "between {}", mean(&between));

    let indep = ScenarioSpec { rho_in: 0.0, rho_out: 0.0, ..spec };
    let x = gen_design(&indep, &mut seeded(4)).unwrap();
    for i in 0..20 {
        for j in 0..i {
            let r = correlation(&column(&x, i), &column(&x, j));
            assert!(r.abs() < 0.06, "({i}, {j}): {r}");
        }
    }
}

#[test]
fn bad_scenarios_are_rejected() {
    let ok = ScenarioSpec::standard(50, 40, 0.5, Signal::Distributed, 1);
    for bad in [
        ScenarioSpec { p: 45, ..ok.clone() },
        ScenarioSpec { group_size: 5, p: 40, ..ok.clone() },
        ScenarioSpec { r2_target: 1.0, ..ok.clone() },
        ScenarioSpec { rho_in: 0.0, rho_out: 0.9, ..ok.clone() },
    ] {
        assert!(Scenario::new(bad).unwrap_err().is_domain());
    }
    // small groups are fine for the concentrated patterns
    Scenario::new(ScenarioSpec { group_size: 5, signal: Signal::Concentrated, ..ok }).unwrap();
}

#[test]
fn fixed_coefficient_patterns() {
    let mut rng = seeded(1);
    let (b, mask) = gen_coefficients(&ScenarioSpec::standard(50, 100, 0.5, Signal::Concentrated, 1), &mut rng).unwrap();
    let nz: Vec<usize> = (0..100).filter(|&i| b[i] != 0.0).collect();
    assert_eq!(nz, (0..10).map(|g| 10 * g).collect::<Vec<_>>());
    assert!(nz.iter().all(|&i| b[i] == 2.0 && mask[i]));
    assert_eq!(mask.iter().filter(|&&m| m).count(), 10);

    let (b, mask) = gen_coefficients(&ScenarioSpec::standard(50, 100, 0.5, Signal::Distributed, 1), &mut rng).unwrap();
    assert_eq!(&b[..10], &[0.5, 0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0]);
    assert!(b[10..].iter().all(|&v| v == 0.0));
    assert_eq!(mask.iter().filter(|&&m| m).count(), 10);

    let (b, _) = gen_coefficients(&ScenarioSpec::standard(50, 40, 0.5, Signal::RandomConcentrated, 1), &mut rng).unwrap();
    assert!((0..40).all(|i| (b[i] != 0.0) == (i % 10 == 0)));
    let (b, _) = gen_coefficients(&ScenarioSpec::standard(50, 40, 0.5, Signal::RandomDistributed, 1), &mut rng).unwrap();
    assert!((0..40).all(|i| (b[i] != 0.0) == (i < 10)));
}

#[test]
fn random_coefficient_frequencies() {
    let spec = ScenarioSpec::standard(50, 40, 0.5, Signal::RandomCoefficients, 0);
    let sc = Scenario::new(spec).unwrap();
    let (mut active, mut total, mut conc) = (0usize, 0usize, 0usize);
    for seed in 0..10_000 {
        let (b, _) = sc.gen_coefficients(&mut seeded(seed));
        assert!(b[..10].iter().any(|&v| v != 0.0), "seed {seed}: first group empty");
        conc += usize::from(b[1] == 0.0);
        for g in 1..4 {
            total += 1;
            active += usize::from(b[10 * g..10 * g + 10].iter().any(|&v| v != 0.0));
        }
    }
    let f = active as f64 / total as f64;
    assert!((f - 0.4).abs() < 0.02, "active frequency {f}");
    let f = conc as f64 / 10_000.0;
    assert!((f - 0.5).abs() < 0.03, "first group concentrated {f}");
}

#[test]
fn sigma_from_r2_arithmetic() {
    let id = DMatrix::<f64>::identity(2, 2);
    assert!((sigma_from_r2(&[1.0, 0.0], &id, 0.5).unwrap() - 1.0).abs() < 1e-15);
    let s = block_correlation(4, 2, 0.8, 0.2);
    let b = [1.0, -0.5, 0.3, 2.0];
    let quad: f64 = (0..4).map(|i| (0..4).map(|j| b[i] * s[(i, j)] * b[j]).sum::<f64>()).sum();
    assert!((sigma_from_r2(&b, &s, 0.8).unwrap() - 0.25 * quad).abs() < 1e-12);
    assert!(sigma_from_r2(&[0.0; 4], &s, 0.5).unwrap_err().is_domain());
    assert!(sigma_from_r2(&b, &s, 0.0).unwrap_err().is_domain());
}

#[test]
fn simulated_r2_hits_target() {
    for signal in Signal::ALL {
        let spec = ScenarioSpec { n_test: Some(1), ..ScenarioSpec::standard(100_000, 40, 0.6, signal, 11) };
        let d = Scenario::new(spec).unwrap().simulate(0).unwrap();
        let b = nalgebra::DVector::from_column_slice(&d.b);
        let fitted: Vec<f64> = (&d.x * b).iter().copied().collect();
        let r2 = covariance(&fitted, &fitted) / covariance(&d.y, &d.y);
        assert!((r2 - 0.6).abs() < 0.01, "{signal:?}: R² {r2}");
    }
}

#[test]
fn test_set_uses_training_scaling() {
    let spec = ScenarioSpec { n_test: Some(20_000), ..ScenarioSpec::standard(200, 20, 0.5, Signal::Concentrated, 5) };
    let d = Scenario::new(spec).unwrap().simulate(2).unwrap();
    assert_eq!(d.x_test.nrows(), 20_000);
    for j in 0..20 {
        let v = column(&d.x_test, j);
        // close to standardized, but not exactly
        assert!(mean(&v).abs() < 0.2 && (covariance(&v, &v) - 1.0).abs() < 0.3);
        assert!((covariance(&v, &v) - 1.0).abs() > 1e-9);
    }
}

#[test]
fn elpd_instances() {
    let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]);
    let y = [0.3, -1.2];
    let draws = [draw(vec![0.1, 0.2], 0.0, 1.0), draw(vec![-0.5, 1.0], 0.3, 0.25), draw(vec![0.0, 0.0], -0.1, 4.0)];
    assert!((elpd(&y, &x, &draws).unwrap() - -3.119507824846644).abs() < 1e-12);

    let one = elpd(&y, &x, &draws[..1]).unwrap();
    let direct: f64 = (0..2)
        .map(|i| {
            let mu = 0.1 * x[(i, 0)] + 0.2 * x[(i, 1)];
            -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * (y[i] - mu).powi(2)
        })
        .sum();
    assert!((one - direct).abs() < 1e-12);

    let doubled: Vec<&PriorDraw> = draws.iter().chain(draws.iter()).collect();
    let reversed: Vec<&PriorDraw> = draws.iter().rev().collect();
    let base = elpd(&y, &x, &draws).unwrap();
    assert!((elpd(&y, &x, &doubled).unwrap() - base).abs() < 1e-12);
    assert!((elpd(&y, &x, &reversed).unwrap() - base).abs() < 1e-12);

    assert!(elpd(&y[..1], &x, &draws).unwrap_err().is_domain());
    assert!(elpd::<PriorDraw>(&y, &x, &[]).unwrap_err().is_domain());
}

#[test]
fn rmse_instances() {
    let truth = [0.0, 0.0, 3.0];
    let rows = [[0.2, -1.0, 3.1], [0.0, 0.4, 2.5], [-0.3, -0.2, 2.9], [0.5, 0.1, 3.6]];
    let draws: Vec<PriorDraw> = rows.iter().map(|r| draw(r.to_vec(), 0.0, 1.0)).collect();
    assert!((rmse_posterior(&draws, &truth, Subset::All).unwrap() - 0.41836113226937915).abs() < 1e-14);
    assert!((rmse_posterior(&draws, &truth, Subset::Zero).unwrap() - 0.42911035007422443).abs() < 1e-14);
    assert!((rmse_posterior(&draws, &truth, Subset::Nonzero).unwrap() - 0.39686269665968865).abs() < 1e-14);

    let exact = vec![draw(truth.to_vec(), 0.0, 1.0); 3];
    assert_eq!(rmse_posterior(&exact, &truth, Subset::All).unwrap(), 0.0);
    let pm = [draw(vec![3.0], 0.0, 1.0), draw(vec![1.0], 0.0, 1.0)];
    assert!((rmse_posterior(&pm, &[2.0], Subset::All).unwrap() - 1.0).abs() < 1e-15);
    assert!(rmse_posterior(&pm, &[2.0], Subset::Zero).unwrap_err().is_domain());
}

#[test]
fn delta_values() {
    assert_eq!(delta_metric(1.5, 1.5, DeltaTransform::Identity), 0.0);
    assert_eq!(delta_metric(0.7, 0.7, DeltaTransform::Asinh), 0.0);
    assert_eq!(delta_metric(3.0, 1.0, DeltaTransform::Asinh), -delta_metric(1.0, 3.0, DeltaTransform::Asinh));
    assert!((delta_metric(12.0, 2.0, DeltaTransform::Asinh) - 2.99822295029797).abs() < 1e-14);
    assert_eq!(delta_metric(-2.0, 1.0, DeltaTransform::Identity), -3.0);
}

#[test]
fn point_mass_intervals() {
    let truth = [2.0, 0.0, -1.0, 0.0];
    let active = [true, false, true, false];
    let draws = vec![draw(truth.to_vec(), 0.0, 1.0); 20];
    let m = coverage_and_roc(&draws, &truth, &active, &roc_levels()).unwrap();
    assert!(m.coverage.iter().all(|&c| c == 1.0));
    assert!(m.sensitivity.iter().chain(&m.specificity).all(|&v| v == 1.0));
    assert!(coverage_and_roc(&draws[..19], &truth, &active, &[0.95]).is_err());
    assert!(coverage_and_roc(&draws, &truth, &active, &[1.0]).unwrap_err().is_domain());
}

#[test]
fn calibrated_null_gives_specificity_at_level() {
    // posterior N(m, 1) with m ~ N(0, 1) and true b = 0: P(interval covers 0) = level
    let (p, s) = (3000, 1000);
    let mut rng = seeded(8);
    let centers: Vec<f64> = (0..p).map(|_| std_normal(&mut rng)).collect();
    let draws: Vec<PriorDraw> =
        (0..s).map(|_| draw(centers.iter().map(|m| m + std_normal(&mut rng)).collect(), 0.0, 1.0)).collect();
    let truth = vec![0.0; p];
    let levels = [0.5, 0.8, 0.95];
    let m = coverage_and_roc(&draws, &truth, &vec![false; p], &levels).unwrap();
    for (k, &l) in levels.iter().enumerate() {
        assert!((m.specificity[k] - l).abs() < 0.03, "level {l}: specificity {}", m.specificity[k]);
        assert_eq!(m.coverage[k], m.specificity[k]);
        assert_eq!(m.sensitivity[k], 1.0);
    }
}

#[test]
fn roc_is_monotone_with_limiting_endpoints() {
    let (p, s) = (400, 400);
    let mut rng = seeded(9);
    let truth: Vec<f64> = (0..p).map(|i| if i % 4 == 0 { 1.5 } else { 0.0 }).collect();
    let active: Vec<bool> = truth.iter().map(|&b| b != 0.0).collect();
    let centers: Vec<f64> = truth.iter().map(|b| b + std_normal(&mut rng)).collect();
    let draws: Vec<PriorDraw> =
        (0..s).map(|_| draw(centers.iter().map(|m| m + std_normal(&mut rng)).collect(), 0.0, 1.0)).collect();
    let m = coverage_and_roc(&draws, &truth, &active, &roc_levels()).unwrap();
    for w in m.sensitivity.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for w in m.specificity.windows(2) {
        assert!(w[1] >= w[0]);
    }
    let pts = m.roc_points();
    for w in pts.windows(2) {
        assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1, "{w:?}");
    }
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    assert!(first.0 < 0.02 && first.1 < 0.1, "{first:?}");
    assert!(last.0 > 0.95 && last.1 > 0.95, "{last:?}");
}

#[test]
fn paired_replications_share_data_and_are_deterministic() {
    let spec = ScenarioSpec { n_test: Some(20), ..ScenarioSpec::standard(30, 10, 0.7, Signal::Concentrated, 21) };
    let sc = Scenario::new(spec.clone()).unwrap();
    let (a, b) = (sc.simulate(1).unwrap(), sc.simulate(1).unwrap());
    assert_eq!((&a.x, &a.y, &a.b), (&b.x, &b.y, &b.b));
    assert_ne!(a.y, sc.simulate(2).unwrap().y);

    let cfg = SamplerConfig { n_chains: 2, n_warmup: 150, n_samples: 100, target_accept: 0.8, ..Default::default() };
    let g = PriorPreset::GroupR2 { a_g: 0.5 };
    let run = || run_paired(&spec, g, g.nongrouped_counterpart(), &cfg, 2).unwrap();
    let (r1, r2) = (run(), run());
    for (x, y) in r1.iter().zip(&r2) {
        let (xg, yg) = (x.grouped.as_ref().unwrap(), y.grouped.as_ref().unwrap());
        assert_eq!(xg, yg);
        assert_eq!(x.nongrouped.as_ref().unwrap(), y.nongrouped.as_ref().unwrap());
        for v in [xg.coverage95, xg.sensitivity, xg.specificity] {
            assert!((0.0..=1.0).contains(&v));
        }
        let d = x.delta(|m| m.elpd, DeltaTransform::Identity).unwrap();
        assert_eq!(d, xg.elpd - x.nongrouped.as_ref().unwrap().elpd);
    }
    assert_eq!(r1.iter().map(|r| r.replication).collect::<Vec<_>>(), vec![0, 1]);
}
