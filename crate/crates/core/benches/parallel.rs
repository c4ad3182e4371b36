use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgeom::algebra::build_basis;
use qgeom::contraction::build_superoperator;
use qgeom::dynamics::{lindblad_vf, three_level_decay};
use qgeom::par::Execution;
use qgeom::scenario::bloch_ball_points;
use qgeom::tensor::{gradient_vf, sample_vf, Symmetry};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn superoperator(c: &mut Criterion) {
    let b = build_basis(3).unwrap();
    let z = lindblad_vf(&b, &three_level_decay().unwrap()).unwrap();
    let mut g = c.benchmark_group("superoperator_3level");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| build_superoperator(black_box(&z), Symmetry::Symmetric, e).unwrap())
        });
    }
    g.finish();
}

fn field_sampling(c: &mut Criterion) {
    let b = build_basis(2).unwrap();
    let y = gradient_vf(&b, &b.element(3)).unwrap();
    let pts = bloch_ball_points(50_000, 0);
    let mut g = c.benchmark_group("field_sampling_50k");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| sample_vf(black_box(&y), &pts, e))
        });
    }
    g.finish();
}

fn axioms(c: &mut Criterion) {
    let b = build_basis(4).unwrap();
    let mut g = c.benchmark_group("axioms_su4");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| b.tables().axioms_over_basis(e))
        });
    }
    g.finish();
}

criterion_group!(benches, superoperator, field_sampling, axioms);
criterion_main!(benches);
