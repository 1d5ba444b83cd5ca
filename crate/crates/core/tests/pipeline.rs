//! Medium-scale end-to-end checks of the minimax pipelines on a coarse mesh;
//! the full desk-scale gate lives in the CLI crate's acceptance suite.

use hamdual::{
    calibrate_growth, newton_primal, pde_residual, shoot_1d, solve_sublinear_level,
    solve_superlinear_level, GalerkinBasis, HamiltonianSpec, LaplacianSolver, Mesh, SearchParams,
};

fn params(seed: u64) -> SearchParams {
    SearchParams {
        seed,
        ..SearchParams::default()
    }
}

#[test]
fn superlinear_level_one_finds_the_ground_state() {
    let mesh = Mesh::new_1d(127).unwrap();
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
    let basis = GalerkinBasis::build(mesh, 24).unwrap();
    let growth = calibrate_growth(&spec, 10_000, 5.0, 9).unwrap();
    let report = solve_superlinear_level(&spec, &basis, &solver, 1, &growth, &params(3)).unwrap();
    let rec = &report.record;
    assert!(report.converged, "level 1 did not converge");
    assert!(rec.residual_u < 1e-6 && rec.residual_v < 1e-6);
    assert!(rec.identity_gap <= 1e-6 * (1.0 + rec.j_value.abs()));
    // the witness sits above the sampled linking floor
    assert!(
        rec.j_value >= report.bounds.lower_sphere * 0.95 - 1e-9,
        "level {} below sampled floor {}",
        rec.j_value,
        report.bounds.lower_sphere
    );
    // and matches the shooting oracle's ground state on this mesh
    let shot = shoot_1d(3.0, 3.0, 0, (1.0, 60.0)).unwrap();
    assert!(
        (rec.i_value - shot.energy_i).abs() <= 2e-3 * shot.energy_i,
        "I = {} vs oracle {}",
        rec.i_value,
        shot.energy_i
    );
    // fixed point of the direct primal solver
    let (u, v) = newton_primal(&spec, &solver, &rec.u, &rec.v).unwrap();
    let drift = u
        .sub(&rec.u)
        .unwrap()
        .lp_norm(2.0)
        .unwrap()
        .hypot(v.sub(&rec.v).unwrap().lp_norm(2.0).unwrap());
    assert!(drift <= 1e-8, "primal drift {drift}");
}

#[test]
fn superlinear_levels_increase_and_separate() {
    let mesh = Mesh::new_1d(127).unwrap();
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
    let basis = GalerkinBasis::build(mesh, 24).unwrap();
    let growth = calibrate_growth(&spec, 10_000, 5.0, 9).unwrap();
    let r1 = solve_superlinear_level(&spec, &basis, &solver, 1, &growth, &params(3)).unwrap();
    let r2 = solve_superlinear_level(&spec, &basis, &solver, 2, &growth, &params(3)).unwrap();
    assert!(r2.record.j_value > r1.record.j_value, "levels did not increase");
    assert!(r1.record.primal_distance(&r2.record) > 1e-3);
}

#[test]
fn sublinear_level_lands_in_its_bracket() {
    let mesh = Mesh::new_1d(127).unwrap();
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(0.5, 0.5).unwrap();
    let basis = GalerkinBasis::build(mesh, 24).unwrap();
    let growth = calibrate_growth(&spec, 10_000, 5.0, 9).unwrap();
    let report = solve_sublinear_level(&spec, &basis, &solver, 2, 8, &growth, &params(3)).unwrap();
    let rec = &report.record;
    assert!(report.converged, "sublinear level did not converge");
    assert!(rec.j_value < 0.0);
    assert!(rec.residual_u < 1e-6 && rec.residual_v < 1e-6);
    assert!(rec.identity_gap <= 1e-6 * (1.0 + rec.j_value.abs()));
    let d = report.bounds.ball_inf.unwrap();
    assert!(
        rec.j_value >= d - 0.5 * d.abs() && rec.j_value <= report.bounds.upper_sphere * 0.5,
        "level {} outside bracket [{d}, {}]",
        rec.j_value,
        report.bounds.upper_sphere
    );
}

#[test]
fn sublinear_solutions_verify_against_the_direct_solver() {
    let mesh = Mesh::new_1d(127).unwrap();
    let solver = LaplacianSolver::new(mesh);
    let spec = HamiltonianSpec::power_family(0.5, 0.5).unwrap();
    let basis = GalerkinBasis::build(mesh, 24).unwrap();
    let growth = calibrate_growth(&spec, 10_000, 5.0, 9).unwrap();
    let report = solve_sublinear_level(&spec, &basis, &solver, 2, 8, &growth, &params(3)).unwrap();
    let rec = &report.record;
    // the recovered pair solves the discrete system directly
    let (ru, rv) = pde_residual(&spec, &rec.u, &rec.v).unwrap();
    assert!(ru <= 1e-8 && rv <= 1e-8, "residuals ({ru}, {rv})");
    // nontrivial solution
    assert!(rec.u.lp_norm(2.0).unwrap() > 1e-3);
}
