//! The `spectrum`, `basis`, and `conjugate-table` subcommands.

use crate::config::Prepared;
use crate::report::{fmt_f, Csv};
use anyhow::{bail, Context, Result};
use hamdual::{gap_constants, positivity_constant, GalerkinBasis};
use std::path::Path;

/// Plot data from a completed run directory: (level index, energy) pairs and
/// the schedule curves γ_n, r_n, ρ_n.
pub fn spectrum(run_dir: &Path, out: Option<&Path>) -> Result<u8> {
    let spectrum_path = run_dir.join("spectrum.csv");
    let manifest_path = run_dir.join("manifest.json");
    if !spectrum_path.exists() || !manifest_path.exists() {
        bail!(
            "missing run: {} must contain spectrum.csv and manifest.json",
            run_dir.display()
        );
    }
    let out_dir = out.unwrap_or(run_dir);
    std::fs::create_dir_all(out_dir)?;

    let text = std::fs::read_to_string(&spectrum_path)?;
    let mut plot = Csv::new(&["level_index", "energy"]);
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 4 {
            continue;
        }
        plot.row(&[cells[0].to_string(), cells[3].to_string()]);
    }
    std::fs::write(out_dir.join("spectrum_plot.csv"), plot.finish())?;

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)
            .context("manifest.json is not valid JSON")?;
    let mut schedule = Csv::new(&["n", "gamma", "r_n", "rho_n"]);
    if let Some(levels) = manifest.get("levels").and_then(|l| l.as_array()) {
        for level in levels {
            let get = |k: &str| level.get(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            schedule.row(&[
                level.get("n").and_then(|v| v.as_u64()).unwrap_or(0).to_string(),
                fmt_f(get("gamma")),
                fmt_f(get("r_n")),
                fmt_f(get("rho_n")),
            ]);
        }
    }
    std::fs::write(out_dir.join("schedule.csv"), schedule.finish())?;
    println!(
        "wrote {} and {}",
        out_dir.join("spectrum_plot.csv").display(),
        out_dir.join("schedule.csv").display()
    );
    Ok(0)
}

/// Eigenvalue, gap-constant, and positivity tables for the configured mesh.
pub fn basis(prepared: &Prepared, out_dir: &Path, seed: u64) -> Result<u8> {
    let spec = prepared
        .build_spec()
        .map_err(|e| anyhow::anyhow!("hamiltonian rejected: {e}"))?;
    std::fs::create_dir_all(out_dir)?;
    let m_max = 40.min(prepared.mesh.n_nodes() / 2).max(8);
    let basis = GalerkinBasis::build(prepared.mesh, m_max)
        .map_err(|e| anyhow::anyhow!("basis build failed: {e}"))?;

    let mut modes = Csv::new(&["j", "jx", "jy", "lambda"]);
    for j in 1..=basis.m_max() {
        let (jx, jy) = basis.label(j);
        modes.row(&[
            j.to_string(),
            jx.to_string(),
            jy.to_string(),
            fmt_f(basis.lambda(j)),
        ]);
    }
    std::fs::write(out_dir.join("eigenvalues.csv"), modes.finish())?;

    let n_table = (basis.m_max() - 1).min(20);
    let mut gaps = Csv::new(&["n", "alpha_n", "beta_n", "gamma_n", "positivity_c"]);
    for n in 1..=n_table {
        let g = gap_constants(&basis, n, spec.p(), spec.q(), seed)
            .map_err(|e| anyhow::anyhow!("gap constants failed at n {n}: {e}"))?;
        let c = positivity_constant(&basis, n, spec.p(), spec.q(), seed)
            .map_err(|e| anyhow::anyhow!("positivity constant failed at n {n}: {e}"))?;
        gaps.row(&[
            n.to_string(),
            fmt_f(g.alpha),
            fmt_f(g.beta),
            fmt_f(g.gamma),
            fmt_f(c),
        ]);
    }
    std::fs::write(out_dir.join("gap_constants.csv"), gaps.finish())?;
    println!(
        "wrote {} and {}",
        out_dir.join("eigenvalues.csv").display(),
        out_dir.join("gap_constants.csv").display()
    );
    Ok(0)
}

/// H* and ∇H* on a square grid of dual values.
pub fn conjugate_table(prepared: &Prepared, out_dir: &Path, radius: f64, points: usize) -> Result<u8> {
    let spec = prepared
        .build_spec()
        .map_err(|e| anyhow::anyhow!("hamiltonian rejected: {e}"))?;
    if points < 2 || !(radius > 0.0) {
        bail!("conjugate table needs points >= 2 and a positive radius");
    }
    std::fs::create_dir_all(out_dir)?;
    let mut table = Csv::new(&["f", "g", "value", "argmax_u", "argmax_v"]);
    for i in 0..points {
        let f = -radius + 2.0 * radius * i as f64 / (points - 1) as f64;
        for j in 0..points {
            let g = -radius + 2.0 * radius * j as f64 / (points - 1) as f64;
            let c = spec
                .conjugate(f, g)
                .map_err(|e| anyhow::anyhow!("conjugate failed at ({f}, {g}): {e}"))?;
            table.row(&[
                fmt_f(f),
                fmt_f(g),
                fmt_f(c.value),
                fmt_f(c.argmax_u),
                fmt_f(c.argmax_v),
            ]);
        }
    }
    std::fs::write(out_dir.join("conjugate_table.csv"), table.finish())?;
    println!("wrote {}", out_dir.join("conjugate_table.csv").display());
    Ok(0)
}
