//! Configuration-driven runner: verification suite, minimax solves, plot-data
//! extraction, and basis/conjugate table dumps.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration error,
//! 3 convergence failure.

mod config;
mod report;
mod solve;
mod tables;
mod verify;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hamdual", version, about = "Dual variational solver for Hamiltonian elliptic systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every module invariant suite and write verify_report.json
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Report directory (defaults to the config's output_dir or ".")
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve the configured levels and write spectrum.csv + manifest.json
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress per-level progress lines
        #[arg(long)]
        quiet: bool,
    },
    /// Emit plot data (level energies and schedule curves) from a run directory
    Spectrum {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump eigenvalue and gap-constant tables for the configured mesh
    Basis {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Dump H* and its gradient on a grid of dual values
    ConjugateTable {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Half-width of the sampled (f, g) box
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        /// Samples per axis
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn out_dir(cli_out: &Option<PathBuf>, config: &config::RunConfig) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Verify {
            config,
            out,
            seed,
            threads,
        } => {
            init_threads(threads);
            let raw = config::load(&config)?;
            let seed = seed.unwrap_or(raw.seed);
            let dir = out_dir(&out, &raw);
            let prepared = config::prepare_structural(raw)?;
            verify::run(&prepared, &dir, seed)
        }
        Cmd::Solve {
            config,
            out,
            seed,
            threads,
            quiet,
        } => {
            init_threads(threads);
            let raw = config::load(&config)?;
            let seed = seed.unwrap_or(raw.seed);
            let dir = out_dir(&out, &raw);
            let prepared = config::prepare_structural(raw)?;
            solve::run(&prepared, &dir, seed, quiet)
        }
        Cmd::Spectrum { run, out } => tables::spectrum(&run, out.as_deref()),
        Cmd::Basis {
            config,
            out,
            seed,
            threads,
        } => {
            init_threads(threads);
            let raw = config::load(&config)?;
            let seed = seed.unwrap_or(raw.seed);
            let dir = out_dir(&out, &raw);
            let prepared = config::prepare_structural(raw)?;
            tables::basis(&prepared, &dir, seed)
        }
        Cmd::ConjugateTable {
            config,
            out,
            radius,
            points,
        } => {
            let raw = config::load(&config)?;
            let dir = out_dir(&out, &raw);
            let prepared = config::prepare_structural(raw)?;
            tables::conjugate_table(&prepared, &dir, radius, points)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
