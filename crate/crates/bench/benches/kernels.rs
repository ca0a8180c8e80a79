use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spde_bench::{salt_pair, state, LEVELS};
use spde_core::engine::em_step;
use spde_core::operators::Calculus;
use spde_core::transform::{grid_size_for, PseudoSpectral};
use spde_core::{CutoffSpec, Workspace};

fn transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform_round_trip");
    for n in LEVELS {
        let size = grid_size_for(n, n);
        let mut ps = PseudoSpectral::new(size);
        let f = state(n, 3);
        let (mut a, mut b) = (vec![0.0; ps.points()], vec![0.0; ps.points()]);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| {
                ps.synthesize(n, |kx, ky| {
                    let v = f.get(kx, ky);
                    (v[0], v[1])
                }, &mut a, &mut b);
                black_box(ps.analyze_vector(&a, &b, n))
            })
        });
    }
    group.finish();
}

fn salt_evaluate(c: &mut Criterion) {
    let pair = salt_pair();
    let mut group = c.benchmark_group("salt_evaluate_ito");
    for n in LEVELS {
        let u = state(n, 5);
        let mut ws = Workspace::new();
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |bench, u| {
            bench.iter(|| black_box(pair.evaluate(0.0, u, &mut ws, Calculus::Ito)))
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let pair = salt_pair();
    let dw = [0.01, -0.02, 0.005, 0.0];
    let cutoff = CutoffSpec::new(1e6).unwrap();
    let mut group = c.benchmark_group("em_step");
    for n in LEVELS {
        let u = state(n, 7);
        let mut ws = Workspace::new();
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |bench, u| {
            bench.iter(|| black_box(em_step(u, 0.0, 1e-3, &pair, &dw, &cutoff, &mut ws).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, transform, salt_evaluate, step);
criterion_main!(benches);
