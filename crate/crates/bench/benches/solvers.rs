use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use coopfront::pde::{Simulator, StationaryOptions};
use coopfront::{DomainSpec, GridSpec, InitialData};
use coopfront_bench::oscillating;

fn eigen(c: &mut Criterion) {
    let set = oscillating();
    c.bench_function("k_of_lambda/oscillating", |b| {
        b.iter(|| coopfront::eigen::k_of_lambda(&set, black_box(0.8), GridSpec::periodic(64)).unwrap())
    });
    c.bench_function("spreading_speeds/oscillating", |b| {
        b.iter(|| coopfront::speeds::spreading_speeds(black_box(&set), GridSpec::periodic(64)).unwrap())
    });
}

fn pde(c: &mut Criterion) {
    let set = oscillating();
    let domain = DomainSpec::new(-100.0, 100.0, 4096);
    let init = InitialData::RightFrontLike {
        amplitude: 0.25,
        k1: -60.0,
        k2: -55.0,
    };
    let mut sim = Simulator::new(&set, &domain, &init, 0.02, false).unwrap();
    c.bench_function("pde_step/4096_nodes", |b| b.iter(|| sim.step().unwrap()));

    let opts = StationaryOptions::default();
    let mut group = c.benchmark_group("stationary");
    group.sample_size(10);
    group.bench_function("oscillating", |b| {
        b.iter(|| coopfront::pde::stationary_profile(black_box(&set), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, eigen, pde);
criterion_main!(benches);
