use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use decent_opt::algorithms;
use decent_opt::topology::{self, MixingMatrix};
use decent_opt::AlgorithmKind;
use decent_opt_bench::ring_quadratic;

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for kind in [AlgorithmKind::Edm, AlgorithmKind::Dmsgd, AlgorithmKind::Dsgt] {
        for n in [8, 32] {
            let fx = ring_quadratic(kind, n, 10).unwrap();
            group.bench_with_input(BenchmarkId::new(kind.name(), n), &fx, |b, fx| {
                let mut state = fx.state.clone();
                b.iter(|| {
                    algorithms::step(&mut state, &fx.spec, &fx.w, &fx.problem, 1).unwrap();
                    black_box(&state.x);
                })
            });
        }
    }
    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_profile");
    for n in [32, 128] {
        let w = topology::build_ring(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| {
            b.iter(|| {
                let fresh = MixingMatrix::from_dense(w.matrix().clone()).unwrap();
                black_box(fresh.lambda())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_step, bench_spectrum);
criterion_main!(benches);
