use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jmgt_bench::simulator_fixture;
use jmgt_core::modal::{propagator_squaring, symbol_matrix, ModeEigensystem};
use jmgt_core::ModelParams;

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft");
    for n in [16, 32] {
        let (sim, s0) = simulator_fixture(n).unwrap();
        let field = sim.sg.inverse(&s0.u);
        group.bench_with_input(BenchmarkId::new("forward", n), &field, |b, f| b.iter(|| sim.sg.forward(black_box(f))));
        group.bench_with_input(BenchmarkId::new("inverse", n), &s0.u, |b, s| b.iter(|| sim.sg.inverse(black_box(s))));
    }
    group.finish();
}

fn propagator(c: &mut Criterion) {
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let m = symbol_matrix(4.0, &p).unwrap();
    c.bench_function("propagator/eigen", |b| {
        b.iter(|| ModeEigensystem::new(black_box(m)).propagator(0.1).unwrap())
    });
    c.bench_function("propagator/squaring", |b| b.iter(|| propagator_squaring(black_box(&m), 0.1)));
}

fn lawson_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("lawson_step");
    group.sample_size(10);
    for n in [16, 32] {
        let (sim, s0) = simulator_fixture(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s0, |b, s| b.iter(|| sim.step(black_box(s)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, fft, propagator, lawson_step);
criterion_main!(benches);
