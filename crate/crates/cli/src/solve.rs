//! The `solve` subcommand: run the regime-appropriate minimax pipeline over
//! the requested levels and write spectrum/manifest/field artifacts.

use crate::config::{required_modes, Prepared};
use crate::report::{fmt_f, Csv};
use anyhow::{Context, Result};
use hamdual::{
    calibrate_growth, fields_to_csv, GalerkinBasis, LaplacianSolver, LevelReport, Regime,
    SearchParams,
};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct LevelManifest {
    n: usize,
    m: Option<usize>,
    gamma: f64,
    r_n: f64,
    rho_n: f64,
    lower_sphere: f64,
    upper_sphere: f64,
    ball_inf: Option<f64>,
    sweeps: usize,
    converged: bool,
    j_value: f64,
    i_value: f64,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    config: crate::config::RunConfig,
    regime: Regime,
    seed: u64,
    k: f64,
    l: f64,
    c_lower: f64,
    c_upper: f64,
    basis_modes: usize,
    levels: Vec<LevelManifest>,
}

/// Distinctness rule shared with the spectrum flag: energies apart and primal
/// fields apart, signs identified.
fn distinct(a: &hamdual::SolutionRecord, b: &hamdual::SolutionRecord) -> bool {
    let energy_gap = (a.j_value - b.j_value).abs() > 1e-4 * (1.0 + a.j_value.abs());
    let field_gap = a.primal_distance(b) > 1e-3;
    energy_gap && field_gap
}

pub fn run(prepared: &Prepared, out_dir: &Path, seed: u64, quiet: bool) -> Result<u8> {
    let spec = prepared
        .build_spec()
        .map_err(|e| anyhow::anyhow!("hamiltonian rejected: {e}"))?;
    std::fs::create_dir_all(out_dir)?;
    let mesh = prepared.mesh;
    let solver = LaplacianSolver::new(mesh);
    let basis = GalerkinBasis::build(mesh, required_modes(prepared))
        .map_err(|e| anyhow::anyhow!("basis build failed: {e}"))?;
    let growth = calibrate_growth(&spec, 10_000, 5.0, seed ^ 0xca11)
        .map_err(|e| anyhow::anyhow!("growth calibration failed: {e}"))?;
    let (k, l) = hamdual::choose_exponents(spec.p(), spec.q(), prepared.regime)
        .map_err(|e| anyhow::anyhow!("exponent selection failed: {e}"))?;

    let tol = prepared.config.tolerances;
    let params = SearchParams {
        seed,
        ..SearchParams::default()
    };

    // independent levels run in parallel; artifacts are written in order
    let results: Vec<(usize, Option<usize>, Result<LevelReport, String>)> = prepared
        .config
        .levels
        .par_iter()
        .map(|level| {
            let n = level.n();
            let m = level.m();
            let report = match prepared.regime {
                Regime::Superlinear => {
                    hamdual::solve_superlinear_level(&spec, &basis, &solver, n, &growth, &params)
                }
                Regime::Sublinear => {
                    let m_val = m.unwrap_or(2 * n + 4);
                    hamdual::solve_sublinear_level(&spec, &basis, &solver, n, m_val, &growth, &params)
                }
            };
            (n, m, report.map_err(|e| e.to_string()))
        })
        .collect();

    let mut spectrum = Csv::new(&[
        "n",
        "m",
        "j_value",
        "i_value",
        "identity_gap",
        "residual_u",
        "residual_v",
        "distinct_from_previous",
    ]);
    let mut manifest_levels = Vec::new();
    let mut previous: Option<&hamdual::SolutionRecord> = None;
    let mut failure: Option<String> = None;
    for (n, m, result) in &results {
        match result {
            Ok(report) => {
                let rec = &report.record;
                // post-hoc certification mirrors the verify suite
                let identity_ok = rec.identity_gap <= tol.identity * (1.0 + rec.j_value.abs());
                let residual_ok = rec.residual_u <= tol.residual && rec.residual_v <= tol.residual;
                let converged = report.converged && identity_ok && residual_ok;
                let is_distinct = previous.map(|p| distinct(rec, p)).unwrap_or(true);
                spectrum.row(&[
                    n.to_string(),
                    rec.galerkin_m.to_string(),
                    fmt_f(rec.j_value),
                    fmt_f(rec.i_value),
                    fmt_f(rec.identity_gap),
                    fmt_f(rec.residual_u),
                    fmt_f(rec.residual_v),
                    (is_distinct as u8).to_string(),
                ]);
                manifest_levels.push(LevelManifest {
                    n: *n,
                    m: *m,
                    gamma: report.config.gamma,
                    r_n: report.config.r_n,
                    rho_n: report.config.rho_n,
                    lower_sphere: report.bounds.lower_sphere,
                    upper_sphere: report.bounds.upper_sphere,
                    ball_inf: report.bounds.ball_inf,
                    sweeps: report.sweeps,
                    converged,
                    j_value: rec.j_value,
                    i_value: rec.i_value,
                    error: None,
                });
                if !converged {
                    failure = Some(format!("level {n}: post-hoc certification failed"));
                }
                let field_csv = fields_to_csv(
                    mesh,
                    &[("u", &rec.u), ("v", &rec.v), ("f", &rec.dual.f), ("g", &rec.dual.g)],
                );
                std::fs::write(out_dir.join(format!("solution_n{n}.csv")), field_csv)?;
                std::fs::write(
                    out_dir.join(format!("solution_n{n}.json")),
                    serde_json::to_string_pretty(&rec.summary())?,
                )?;
                if !quiet {
                    println!(
                        "level {n}: J = {:.6e}, I = {:.6e}, gap = {:.2e}, residuals = ({:.2e}, {:.2e}), {}",
                        rec.j_value,
                        rec.i_value,
                        rec.identity_gap,
                        rec.residual_u,
                        rec.residual_v,
                        if converged { "converged" } else { "NOT converged" }
                    );
                }
                previous = Some(rec);
            }
            Err(e) => {
                failure = Some(format!("level {n}: {e}"));
                manifest_levels.push(LevelManifest {
                    n: *n,
                    m: *m,
                    gamma: f64::NAN,
                    r_n: f64::NAN,
                    rho_n: f64::NAN,
                    lower_sphere: f64::NAN,
                    upper_sphere: f64::NAN,
                    ball_inf: None,
                    sweeps: 0,
                    converged: false,
                    j_value: f64::NAN,
                    i_value: f64::NAN,
                    error: Some(e.clone()),
                });
            }
        }
    }

    let manifest = Manifest {
        schema_version: 1,
        config: prepared.config.clone(),
        regime: prepared.regime,
        seed,
        k,
        l,
        c_lower: 0.5 * growth.lower,
        c_upper: growth.upper,
        basis_modes: basis.m_max(),
        levels: manifest_levels,
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )
    .context("writing manifest")?;
    std::fs::write(out_dir.join("spectrum.csv"), spectrum.finish())?;

    if let Some(msg) = failure {
        eprintln!("solve failed: {msg}");
        return Ok(3);
    }
    Ok(0)
}
