use groupr2::hyperopt::{Coupling, SignalKind};
use groupr2::{recommend, resolve_preset, GroupStructure, Knowledge, PriorPreset};

fn shape(h: &groupr2::Hyperparams) -> (f64, f64, f64, Vec<f64>) {
    (h.a1(), h.a2(), h.a_g(), h.c().to_vec())
}

#[test]
fn preset_values() {
    let s = GroupStructure::equal(10, 10).unwrap();
    assert_eq!(shape(&resolve_preset("R2-0.5", &s).unwrap()), (5.0, 0.5, 0.5, vec![0.5; 10]));
    assert_eq!(shape(&resolve_preset("R2-u", &s).unwrap()), (1.0, 1.0, 1.0, vec![1.0; 10]));
    let c = resolve_preset("R2-c", &s).unwrap();
    let d = resolve_preset("R2-d", &s).unwrap();
    for (h, a_g, cg) in [(&c, 1.0, 0.5), (&d, 0.5, 1.0)] {
        assert!((h.a1() - 1.0).abs() < 1e-12 && (h.a2() - 2.0).abs() < 1e-12);
        assert_eq!((h.a_g(), h.c()[0]), (a_g, cg));
    }
    assert!(resolve_preset("R2-x", &s).unwrap_err().is_domain());
    assert!(resolve_preset("lasso", &s).unwrap_err().is_domain());
}

#[test]
fn presets_are_pure() {
    let s = GroupStructure::new(vec![3, 7, 10]).unwrap();
    for name in ["R2-0.1", "R2-1", "R2-u", "R2-c", "R2-d", "R2D2-0.5"] {
        assert_eq!(resolve_preset(name, &s).unwrap(), resolve_preset(name, &s).unwrap());
    }
}

#[test]
fn nongrouped_counterpart_shares_the_r2_prior() {
    let s = GroupStructure::equal(4, 10).unwrap();
    let g = PriorPreset::GroupR2 { a_g: 1.0 };
    let n = g.nongrouped_counterpart();
    assert_eq!(n.to_string(), "R2D2-1.0");
    let (hg, hn) = (g.resolve(&s).unwrap(), n.resolve(&s).unwrap());
    assert_eq!((hg.a1(), hg.a2()), (hn.a1(), hn.a2()));
}

#[test]
fn no_knowledge_is_uniform() {
    let s = GroupStructure::equal(3, 4).unwrap();
    let r = recommend(&Knowledge::default(), &s).unwrap();
    assert_eq!(r.hyper, resolve_preset("R2-u", &s).unwrap());
    assert!(!r.rationale.is_empty());
}

#[test]
fn concentrated_everywhere() {
    let s = GroupStructure::equal(5, 10).unwrap();
    let k = Knowledge { group_signal: Some(vec![SignalKind::Concentrated]), ..Default::default() };
    let h = recommend(&k, &s).unwrap().hyper;
    assert_eq!((h.a_g(), h.a2(), h.c()), (0.1, 0.5, &[0.5; 5][..]));
    let k = Knowledge { group_signal: Some(vec![SignalKind::Distributed; 5]), ..Default::default() };
    assert_eq!(recommend(&k, &s).unwrap().hyper.a_g(), 1.0);
    let mut kinds = vec![SignalKind::Distributed; 5];
    kinds[2] = SignalKind::Concentrated;
    let k = Knowledge { group_signal: Some(kinds), ..Default::default() };
    assert_eq!(recommend(&k, &s).unwrap().hyper.a_g(), 0.5);
}

#[test]
fn coupling_directions() {
    let s = GroupStructure::equal(5, 10).unwrap();
    let k = Knowledge { coupling: Some(Coupling::FromCg(vec![1.0; 5])), ..Default::default() };
    assert_eq!(recommend(&k, &s).unwrap().hyper.a_g(), 10.0);
    let k = Knowledge {
        group_signal: Some(vec![SignalKind::Distributed]),
        coupling: Some(Coupling::FromAg),
        ..Default::default()
    };
    let h = recommend(&k, &s).unwrap().hyper;
    assert_eq!((h.a_g(), h.c()[0]), (1.0, 0.1));
}

#[test]
fn contradictory_inputs_are_rejected() {
    let s = GroupStructure::equal(2, 10).unwrap();
    let both = Knowledge {
        group_signal: Some(vec![SignalKind::Concentrated]),
        coupling: Some(Coupling::FromCg(vec![0.1, 0.1])),
        ..Default::default()
    };
    assert!(recommend(&both, &s).unwrap_err().is_domain());
    let unequal = Knowledge { coupling: Some(Coupling::FromCg(vec![0.1, 0.2])), ..Default::default() };
    assert!(recommend(&unequal, &s).unwrap_err().is_domain());
    let precision_only = Knowledge { r2_precision: Some(3.0), ..Default::default() };
    assert!(recommend(&precision_only, &s).unwrap_err().is_domain());
    let wrong_len = Knowledge { group_signal: Some(vec![SignalKind::Concentrated; 3]), ..Default::default() };
    assert!(recommend(&wrong_len, &s).unwrap_err().is_domain());
}

#[test]
fn r2_knowledge_sets_beta_shapes() {
    let s = GroupStructure::equal(2, 5).unwrap();
    let k = Knowledge { r2_mean: Some(1.0 / 3.0), r2_precision: Some(3.0), ..Default::default() };
    let h = recommend(&k, &s).unwrap().hyper;
    assert!((h.a1() - 1.0).abs() < 1e-12 && (h.a2() - 2.0).abs() < 1e-12);
    let k = Knowledge { r2_mean: Some(0.2), ..Default::default() };
    let h = recommend(&k, &s).unwrap().hyper;
    assert_eq!(h.a2(), 0.5);
    assert!((h.mu_r2() - 0.2).abs() < 1e-12);
}

#[test]
fn recommendation_is_deterministic() {
    let s = GroupStructure::new(vec![4, 6]).unwrap();
    let k = Knowledge { r2_mean: Some(0.4), group_signal: Some(vec![SignalKind::Distributed]), ..Default::default() };
    assert_eq!(recommend(&k, &s).unwrap(), recommend(&k, &s).unwrap());
}
