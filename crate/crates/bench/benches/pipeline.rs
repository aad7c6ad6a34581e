use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mee_bench::lin2d_dataset;
use mee_core::eirl::run_eirl;
use mee_core::sim::ode::OdeOptions;
use mee_core::sim::plants::lin2d_probing;
use mee_core::sim::{simulate_closed_loop, SampleSpec};
use mee_core::study::{run_study, StudyConfig};
use nalgebra::DMatrix;

fn bench_simulate(c: &mut Criterion) {
    let (plant, _) = lin2d_dataset();
    let probing = lin2d_probing();
    let samples = SampleSpec::uniform(0.1, 5);
    let opts = OdeOptions::default();
    c.bench_function("simulate_lin2d", |b| {
        b.iter(|| {
            simulate_closed_loop(&plant, &DMatrix::zeros(2, 2), &probing, &[-0.215, 0.035], 0.5, &samples, &opts).unwrap()
        })
    });
}

fn bench_eirl(c: &mut Criterion) {
    let (plant, ds) = lin2d_dataset();
    c.bench_function("eirl_lin2d", |b| b.iter(|| run_eirl(&plant, &DMatrix::zeros(2, 2), black_box(&ds), 5).unwrap()));
}

fn bench_study(c: &mut Criterion) {
    let cfg = StudyConfig::lin2d();
    c.bench_function("study_lin2d", |b| b.iter(|| run_study(black_box(&cfg)).unwrap()));
}

criterion_group!(benches, bench_simulate, bench_eirl, bench_study);
criterion_main!(benches);
