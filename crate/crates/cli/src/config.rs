//! Run configuration: a flat JSON file with a schema version, validated into
//! the library's domain objects before anything runs.

use anyhow::{bail, Context, Result};
use hamdual::{HamiltonianSpec, Mesh, Regime};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainConfig,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub levels: Vec<LevelSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DomainConfig {
    pub dim: usize,
    pub n_per_axis: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HamiltonianConfig {
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_coupling")]
    pub alpha: f64,
    #[serde(default = "default_coupling")]
    pub beta: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_coupling() -> f64 {
    2.0
}

fn default_theta() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeConfig {
    #[default]
    Auto,
    Superlinear,
    Sublinear,
}

/// One requested level: bare `n`, or `{n, m}` with the Galerkin dimension for
/// sublinear runs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Bare(usize),
    WithGalerkin { n: usize, m: Option<usize> },
}

impl LevelSpec {
    pub fn n(&self) -> usize {
        match *self {
            LevelSpec::Bare(n) => n,
            LevelSpec::WithGalerkin { n, .. } => n,
        }
    }

    pub fn m(&self) -> Option<usize> {
        match *self {
            LevelSpec::Bare(_) => None,
            LevelSpec::WithGalerkin { m, .. } => m,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity: f64,
    pub residual: f64,
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-6,
            residual: 1e-6,
            newton: 1e-9,
        }
    }
}

/// A structurally validated configuration. The Hamiltonian validator runs
/// separately so the verify command can report its rejection as an invariant
/// failure rather than a configuration error.
pub struct Prepared {
    pub config: RunConfig,
    pub mesh: Mesh,
    pub regime: Regime,
}

impl Prepared {
    pub fn build_spec(&self) -> Result<HamiltonianSpec, hamdual::ConjugateError> {
        let h = self.config.hamiltonian;
        HamiltonianSpec::new(h.p, h.q, h.eps, h.alpha, h.beta, h.theta)
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).with_context(|| format!("bad JSON in {}", path.display()))?;
    Ok(config)
}

pub fn prepare_structural(config: RunConfig) -> Result<Prepared> {
    if config.schema_version != 1 {
        bail!("unsupported schema_version {}", config.schema_version);
    }
    let d = config.domain;
    if d.dim != 1 && d.dim != 2 {
        bail!("domain.dim must be 1 or 2, got {}", d.dim);
    }
    if !(d.n_per_axis + 1).is_power_of_two() || d.n_per_axis < 3 {
        bail!(
            "domain.n_per_axis must be a power of two minus one, got {}",
            d.n_per_axis
        );
    }
    let mesh = if d.dim == 1 {
        Mesh::new_1d(d.n_per_axis)?
    } else {
        Mesh::new_2d(d.n_per_axis)?
    };
    let h = config.hamiltonian;
    if !(h.p > 0.0 && h.q > 0.0) {
        bail!("exponents must be positive, got p {} q {}", h.p, h.q);
    }
    let regime = match config.regime {
        RegimeConfig::Auto => hamdual::regime_for(h.p, h.q)
            .map_err(|e| anyhow::anyhow!("regime resolution failed: {e}"))?,
        RegimeConfig::Superlinear => Regime::Superlinear,
        RegimeConfig::Sublinear => Regime::Sublinear,
    };
    // an explicit regime must still be admissible
    if hamdual::regime_for(h.p, h.q).map(|r| r != regime).unwrap_or(true) {
        bail!(
            "regime {:?} inconsistent with exponents p {} q {}",
            regime,
            h.p,
            h.q
        );
    }
    for level in &config.levels {
        let n = level.n();
        if n == 0 {
            bail!("level indices start at 1");
        }
        if regime == Regime::Sublinear {
            let m = level.m().unwrap_or(2 * n + 4);
            if m < 2 * n {
                bail!("sublinear level n {n} needs m >= 2n, got {m}");
            }
        }
    }
    Ok(Prepared {
        mesh,
        regime,
        config,
    })
}

/// Number of basis modes a run needs, with headroom for gap constants.
pub fn required_modes(prepared: &Prepared) -> usize {
    let mut need = 12;
    for level in &prepared.config.levels {
        let n = level.n();
        need = need.max(match prepared.regime {
            Regime::Superlinear => 4 * (2 * n + 1),
            Regime::Sublinear => level.m().unwrap_or(2 * n + 4).max(2 * n),
        });
    }
    let cap = prepared.mesh.n_nodes();
    (need + 8).min(cap)
}
