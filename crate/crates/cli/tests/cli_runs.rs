//! End-to-end CLI checks: exit codes, artifact layout, and byte-identical
//! reruns on a small configuration.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hamdual"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hamdual-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_SUPERLINEAR: &str = r#"{
  "schema_version": 1,
  "domain": { "dim": 1, "n_per_axis": 127 },
  "hamiltonian": { "p": 3.0, "q": 3.0 },
  "levels": [ 1 ],
  "seed": 7
}"#;

#[test]
fn verify_passes_on_default_config() {
    let dir = tmp_dir("verify");
    let cfg = write_config(&dir, "cfg.json", SMALL_SUPERLINEAR);
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "verify failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
    let groups = report["groups"].as_array().unwrap();
    assert!(groups.len() >= 12, "only {} invariant groups", groups.len());
}

#[test]
fn verify_names_the_convexity_sampler_for_bad_eps() {
    let dir = tmp_dir("verify-eps");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{
  "schema_version": 1,
  "domain": { "dim": 1, "n_per_axis": 127 },
  "hamiltonian": { "p": 3.0, "q": 3.0, "eps": 40.0, "alpha": 2.0, "beta": 2.0 },
  "levels": [],
  "seed": 7
}"#,
    );
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("convexity_sampler") || stderr.contains("h1_sandwich"),
        "stderr should name the failing sampler: {stderr}"
    );
}

#[test]
fn config_with_pq_one_is_rejected_before_any_run() {
    let dir = tmp_dir("pq-one");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{
  "schema_version": 1,
  "domain": { "dim": 1, "n_per_axis": 127 },
  "hamiltonian": { "p": 1.0, "q": 1.0 },
  "levels": [ 1 ]
}"#,
    );
    for sub in ["verify", "solve"] {
        let out = bin()
            .args([sub, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{sub} should exit 2");
    }
}

#[test]
fn bad_mesh_size_is_a_config_error() {
    let dir = tmp_dir("mesh");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{
  "schema_version": 1,
  "domain": { "dim": 1, "n_per_axis": 100 },
  "hamiltonian": { "p": 3.0, "q": 3.0 },
  "levels": []
}"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_with_empty_levels_writes_manifest_only() {
    let dir = tmp_dir("empty");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{
  "schema_version": 1,
  "domain": { "dim": 1, "n_per_axis": 127 },
  "hamiltonian": { "p": 3.0, "q": 3.0 },
  "levels": []
}"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("manifest.json").exists());
    assert!(dir.join("spectrum.csv").exists());
    let spectrum = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 1, "header only");
}

#[test]
fn spectrum_on_missing_run_fails() {
    let dir = tmp_dir("missing-run");
    let out = bin()
        .args(["spectrum", "--run"])
        .arg(dir.join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing run"), "{stderr}");
}

#[test]
fn solve_then_spectrum_and_determinism() {
    let dir = tmp_dir("solve");
    let cfg = write_config(&dir, "cfg.json", SMALL_SUPERLINEAR);
    let run_a = dir.join("a");
    let run_b = dir.join("b");
    for run in [&run_a, &run_b] {
        let out = bin()
            .args(["solve", "--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(run)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "solve failed:\n{}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // identical config + seed reproduce byte-identical artifacts
    let a = std::fs::read(run_a.join("spectrum.csv")).unwrap();
    let b = std::fs::read(run_b.join("spectrum.csv")).unwrap();
    assert_eq!(a, b, "spectrum.csv differs between identical runs");

    assert!(run_a.join("solution_n1.csv").exists());
    assert!(run_a.join("solution_n1.json").exists());

    // spectrum plot data from the run directory
    let out = bin()
        .args(["spectrum", "--run"])
        .arg(&run_a)
        .output()
        .unwrap();
    assert!(out.status.success());
    let plot = std::fs::read_to_string(run_a.join("spectrum_plot.csv")).unwrap();
    assert!(plot.starts_with("level_index,energy"));
    assert_eq!(plot.lines().count(), 2);
    assert!(run_a.join("schedule.csv").exists());
}

#[test]
fn basis_and_conjugate_tables() {
    let dir = tmp_dir("tables");
    let cfg = write_config(&dir, "cfg.json", SMALL_SUPERLINEAR);
    let out = bin()
        .args(["basis", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let eig = std::fs::read_to_string(dir.join("eigenvalues.csv")).unwrap();
    assert!(eig.starts_with("j,jx,jy,lambda"));
    assert!(dir.join("gap_constants.csv").exists());

    let out = bin()
        .args(["conjugate-table", "--points", "11", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.join("conjugate_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 11 * 11);
}
