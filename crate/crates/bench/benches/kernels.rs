//! Criterion benchmarks for the hot kernels: pointwise conjugation, the
//! spectral inverse Laplacian, dual functional evaluation, and a full primal
//! Newton solve at desk scale.

use criterion::{criterion_group, criterion_main, Criterion};
use hamdual::{
    eval_j, grad_j, neg_laplacian, DiscreteField, DualPoint, GalerkinBasis, HamiltonianSpec,
    LaplacianSolver, Mesh,
};
use std::f64::consts::PI;
use std::hint::black_box;

fn bench_conjugate(c: &mut Criterion) {
    let plain = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
    let coupled = HamiltonianSpec::new(3.0, 3.0, 0.1, 2.0, 2.0, 0.5).unwrap();
    c.bench_function("conjugate_point_closed_form", |b| {
        b.iter(|| plain.conjugate(black_box(1.7), black_box(-2.3)).unwrap().value)
    });
    c.bench_function("conjugate_point_newton", |b| {
        b.iter(|| coupled.conjugate(black_box(1.7), black_box(-2.3)).unwrap().value)
    });
}

fn bench_laplacian(c: &mut Criterion) {
    let mesh1 = Mesh::new_1d(255).unwrap();
    let solver1 = LaplacianSolver::new(mesh1);
    let rhs1 = DiscreteField::from_fn(mesh1, |x, _| (3.0 * PI * x).sin() + x);
    c.bench_function("apply_a_1d_255", |b| {
        b.iter(|| solver1.apply_a(black_box(&rhs1)).unwrap())
    });
    let mesh2 = Mesh::new_2d(63).unwrap();
    let solver2 = LaplacianSolver::new(mesh2);
    let rhs2 = DiscreteField::from_fn(mesh2, |x, y| (PI * x).sin() * (2.0 * PI * y).sin());
    c.bench_function("apply_a_2d_63x63", |b| {
        b.iter(|| solver2.apply_a(black_box(&rhs2)).unwrap())
    });
    c.bench_function("neg_laplacian_2d_63x63", |b| {
        b.iter(|| neg_laplacian(black_box(&rhs2)))
    });
}

fn bench_functional(c: &mut Criterion) {
    let mesh = Mesh::new_1d(255).unwrap();
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
    let point = DualPoint {
        f: DiscreteField::from_fn(mesh, |x, _| 4.0 * (PI * x).sin()),
        g: DiscreteField::from_fn(mesh, |x, _| 4.0 * (PI * x).sin()),
    };
    c.bench_function("eval_j_1d_255", |b| {
        b.iter(|| eval_j(&spec, &solver, black_box(&point)).unwrap())
    });
    c.bench_function("grad_j_1d_255", |b| {
        b.iter(|| grad_j(&spec, &solver, black_box(&point)).unwrap())
    });
}

fn bench_basis_and_newton(c: &mut Criterion) {
    let mesh = Mesh::new_1d(255).unwrap();
    c.bench_function("build_basis_40_modes", |b| {
        b.iter(|| GalerkinBasis::build(black_box(mesh), 40).unwrap())
    });
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
    let shot = hamdual::shoot_1d(3.0, 3.0, 0, (1.0, 60.0)).unwrap();
    let (u0, v0) = shot.sample_on(mesh).unwrap();
    c.bench_function("newton_primal_ground_state_255", |b| {
        b.iter(|| hamdual::newton_primal(&spec, &solver, black_box(&u0), black_box(&v0)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_conjugate,
    bench_laplacian,
    bench_functional,
    bench_basis_and_newton
);
criterion_main!(benches);
