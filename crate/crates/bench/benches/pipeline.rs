use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hardy_bench::{bump, solved, square_point_mesh};
use hardy_core::sensitivity::{shape_derivative, DerivativeOptions};
use hardy_core::{Discretization, MassOptions, SolverOptions};

fn mesh(c: &mut Criterion) {
    c.bench_function("triangulate h=0.1", |b| b.iter(|| square_point_mesh(black_box(0.1))));
}

fn assemble_and_solve(c: &mut Criterion) {
    let m = square_point_mesh(0.1);
    let mut g = c.benchmark_group("spectral");
    g.sample_size(10);
    g.bench_function("assemble", |b| b.iter(|| Discretization::new(m.clone(), &MassOptions::default()).unwrap()));
    let disc = Discretization::new(m.clone(), &MassOptions::default()).unwrap();
    g.bench_function("solve", |b| b.iter(|| disc.solve(&SolverOptions::default()).unwrap()));
    g.finish();
}

fn derivative(c: &mut Criterion) {
    let (disc, sol) = solved(0.1);
    let xi = bump();
    let mut g = c.benchmark_group("sensitivity");
    g.sample_size(10);
    g.bench_function("shape_derivative", |b| {
        b.iter(|| shape_derivative(&disc, &sol, &xi, &DerivativeOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, mesh, assemble_and_solve, derivative);
criterion_main!(benches);
