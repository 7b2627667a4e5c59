//! Shared fixtures for the benchmarks.

use groupr2::simharness::Scenario;
use groupr2::{GroupStructure, Hyperparams, PriorPreset, RegressionData, ScenarioSpec, Signal};

/// A simulated regression problem with groups of ten and its default prior.
pub fn problem(n: usize, p: usize, seed: u64) -> (RegressionData, Hyperparams) {
    let spec = ScenarioSpec::standard(n, p, 0.5, Signal::Distributed, seed);
    let structure = spec.structure().unwrap();
    let data = Scenario::new(spec).unwrap().simulate(0).unwrap();
    let hyper = PriorPreset::GroupR2 { a_g: 0.5 }.resolve(&structure).unwrap();
    (RegressionData::new(data.y, data.x, structure).unwrap(), hyper)
}

pub fn groups(g: usize, size: usize) -> GroupStructure {
    GroupStructure::equal(g, size).unwrap()
}
