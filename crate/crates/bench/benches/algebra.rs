use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mee_bench::{ale, dense};
use mee_core::lyap::solve_ale_svec;
use mee_core::skron;

fn bench_skron(c: &mut Criterion) {
    let mut g = c.benchmark_group("skron");
    for n in [2, 4, 8] {
        let (a, b) = (dense(n, 1), dense(n, 2));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| bch.iter(|| skron(black_box(&a), black_box(&b)).unwrap()));
    }
    g.finish();
}

fn bench_ale(c: &mut Criterion) {
    let mut g = c.benchmark_group("ale_svec");
    for n in [2, 4, 8] {
        let p = ale(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| bch.iter(|| solve_ale_svec(black_box(&p)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_skron, bench_ale);
criterion_main!(benches);
