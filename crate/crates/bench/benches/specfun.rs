use criterion::{criterion_group, criterion_main, Criterion};
use groupr2::specfun::{hyp_2f1, ln_gamma, ln_hyp_u, trigamma};
use std::hint::black_box;

fn specfun(c: &mut Criterion) {
    c.bench_function("ln_gamma", |b| b.iter(|| ln_gamma(black_box(7.3))));
    c.bench_function("trigamma", |b| b.iter(|| trigamma(black_box(0.37))));
    let mut g = c.benchmark_group("ln_hyp_u");
    // small, moderate and large argument regimes
    for z in [1e-6, 0.8, 60.0] {
        g.bench_function(format!("z={z}"), |b| b.iter(|| ln_hyp_u(black_box(0.7), black_box(0.3), black_box(z))));
    }
    g.finish();
    c.bench_function("hyp_2f1", |b| b.iter(|| hyp_2f1(black_box(0.5), black_box(2.0), black_box(3.5), black_box(0.9))));
}

criterion_group!(benches, specfun);
criterion_main!(benches);
