//! The dual functional J(f, g) = ∫ H*(f, g) − ∫ g A f, the primal energy
//! I(u, v) = ∫ ∇u·∇v − ∫ H(u, v), the primal recovery map (u, v) = ∇H*(f, g),
//! and the diagnostics tying them together: at a critical dual point the two
//! energies agree and the recovered pair solves the discrete system.

use crate::conjugate::{ConjugateError, Hamiltonian, HamiltonianSpec};
use crate::grid::{inner, neg_laplacian, DiscreteField, GridError, LaplacianSolver, Mesh};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
}

/// A dual pair (f, g); f multiplies the u-equation, g the v-equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub f: DiscreteField,
    pub g: DiscreteField,
}

impl DualPoint {
    pub fn zeros(mesh: Mesh) -> Self {
        DualPoint {
            f: DiscreteField::zeros(mesh),
            g: DiscreteField::zeros(mesh),
        }
    }

    pub fn mesh(&self) -> Mesh {
        self.f.mesh()
    }

    pub fn scaled(&self, c: f64) -> Self {
        DualPoint {
            f: self.f.scaled(c),
            g: self.g.scaled(c),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Sum norm |f|_{1+1/p} + |g|_{1+1/q} on X.
    pub fn x_norm(&self, spec: &HamiltonianSpec) -> Result<f64, GridError> {
        Ok(self.f.lp_norm(1.0 + 1.0 / spec.p())? + self.g.lp_norm(1.0 + 1.0 / spec.q())?)
    }

    /// L² norm of both components together.
    pub fn l2_norm(&self) -> f64 {
        let a = self.f.lp_norm(2.0).unwrap_or(0.0);
        let b = self.g.lp_norm(2.0).unwrap_or(0.0);
        (a * a + b * b).sqrt()
    }
}

/// Pointwise conjugate values over a field pair, reusing the previous node's
/// maximizer as the Newton warm start.
fn conjugate_sweep<T>(
    spec: &HamiltonianSpec,
    point: &DualPoint,
    mut take: impl FnMut(usize, crate::conjugate::ConjugateValue) -> T,
) -> Result<Vec<T>, ConjugateError> {
    let fv = point.f.values();
    let gv = point.g.values();
    let mut out = Vec::with_capacity(fv.len());
    let mut start = (0.0, 0.0);
    for i in 0..fv.len() {
        let c = spec.conjugate_from(fv[i], gv[i], start)?;
        start = (c.argmax_u, c.argmax_v);
        out.push(take(i, c));
    }
    Ok(out)
}

/// J(f, g) = ∫ H*(f, g) dx − ∫ g A f dx.
pub fn eval_j(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    point: &DualPoint,
) -> Result<f64, FunctionalError> {
    let w = point.mesh().weight();
    let values = conjugate_sweep(spec, point, |_, c| c.value)?;
    let conj: f64 = values.iter().map(|v| w * v).sum();
    let af = solver.apply_a(&point.f)?;
    Ok(conj - inner(&point.g, &af)?)
}

/// L²-gradient of J: (H*_u(f, g) − A g, H*_v(f, g) − A f) nodewise.
pub fn grad_j(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    point: &DualPoint,
) -> Result<DualPoint, FunctionalError> {
    let mesh = point.mesh();
    let argmax = conjugate_sweep(spec, point, |_, c| (c.argmax_u, c.argmax_v))?;
    let ag = solver.apply_a(&point.g)?;
    let af = solver.apply_a(&point.f)?;
    let mut df = vec![0.0; mesh.n_nodes()];
    let mut dg = vec![0.0; mesh.n_nodes()];
    for i in 0..df.len() {
        df[i] = argmax[i].0 - ag.values()[i];
        dg[i] = argmax[i].1 - af.values()[i];
    }
    Ok(DualPoint {
        f: DiscreteField::from_values(mesh, df)?,
        g: DiscreteField::from_values(mesh, dg)?,
    })
}

/// Primal recovery (u, v) = ∇H*(f, g) nodewise.
pub fn recover_primal(
    spec: &HamiltonianSpec,
    point: &DualPoint,
) -> Result<(DiscreteField, DiscreteField), FunctionalError> {
    let mesh = point.mesh();
    let argmax = conjugate_sweep(spec, point, |_, c| (c.argmax_u, c.argmax_v))?;
    let u: Vec<f64> = argmax.iter().map(|a| a.0).collect();
    let v: Vec<f64> = argmax.iter().map(|a| a.1).collect();
    Ok((
        DiscreteField::from_values(mesh, u)?,
        DiscreteField::from_values(mesh, v)?,
    ))
}

/// I(u, v) = ∫ ∇u·∇v − ∫ H(u, v), with the Dirichlet form taken through the
/// discrete operator so that it matches the pairing in J exactly.
pub fn eval_i(spec: &HamiltonianSpec, u: &DiscreteField, v: &DiscreteField) -> Result<f64, GridError> {
    let dirichlet = inner(&neg_laplacian(u), v)?;
    let w = u.mesh().weight();
    let h_int: f64 = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(&a, &b)| w * spec.eval(a, b))
        .sum();
    Ok(dirichlet - h_int)
}

/// |I(∇H*(f, g)) − J(f, g)|; small only near critical points of J.
pub fn energy_identity_gap(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    point: &DualPoint,
) -> Result<f64, FunctionalError> {
    let (u, v) = recover_primal(spec, point)?;
    let i_val = eval_i(spec, &u, &v)?;
    let j_val = eval_j(spec, solver, point)?;
    Ok((i_val - j_val).abs())
}

/// L² norms of (−Δu − H_v(u, v), −Δv − H_u(u, v)).
pub fn pde_residual(
    spec: &HamiltonianSpec,
    u: &DiscreteField,
    v: &DiscreteField,
) -> Result<(f64, f64), GridError> {
    let lu = neg_laplacian(u);
    let lv = neg_laplacian(v);
    let mesh = u.mesh();
    let mut ru = vec![0.0; mesh.n_nodes()];
    let mut rv = vec![0.0; mesh.n_nodes()];
    for i in 0..ru.len() {
        let (hu, hv) = spec.grad(u.values()[i], v.values()[i]);
        ru[i] = lu.values()[i] - hv;
        rv[i] = lv.values()[i] - hu;
    }
    let ru = DiscreteField::from_values(mesh, ru)?;
    let rv = DiscreteField::from_values(mesh, rv)?;
    Ok((ru.lp_norm(2.0)?, rv.lp_norm(2.0)?))
}

/// Which branch of the theory a solve ran under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Superlinear,
    Sublinear,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Superlinear => write!(f, "superlinear"),
            Regime::Sublinear => write!(f, "sublinear"),
        }
    }
}

/// One certified solution: dual witness, recovered primal pair, both energies,
/// and the defect diagnostics.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub dual: DualPoint,
    pub u: DiscreteField,
    pub v: DiscreteField,
    pub j_value: f64,
    pub i_value: f64,
    pub identity_gap: f64,
    pub residual_u: f64,
    pub residual_v: f64,
    pub galerkin_m: usize,
    pub level_index: usize,
    pub regime: Regime,
}

/// Scalar projection of a record for JSON export.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RecordSummary {
    pub level_index: usize,
    pub galerkin_m: usize,
    pub regime: Regime,
    pub j_value: f64,
    pub i_value: f64,
    pub identity_gap: f64,
    pub residual_u: f64,
    pub residual_v: f64,
}

impl SolutionRecord {
    pub fn assemble(
        spec: &HamiltonianSpec,
        solver: &LaplacianSolver,
        dual: DualPoint,
        galerkin_m: usize,
        level_index: usize,
        regime: Regime,
    ) -> Result<Self, FunctionalError> {
        let (u, v) = recover_primal(spec, &dual)?;
        let j_value = eval_j(spec, solver, &dual)?;
        let i_value = eval_i(spec, &u, &v)?;
        let (residual_u, residual_v) = pde_residual(spec, &u, &v)?;
        Ok(SolutionRecord {
            identity_gap: (i_value - j_value).abs(),
            dual,
            u,
            v,
            j_value,
            i_value,
            residual_u,
            residual_v,
            galerkin_m,
            level_index,
            regime,
        })
    }

    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            level_index: self.level_index,
            galerkin_m: self.galerkin_m,
            regime: self.regime,
            j_value: self.j_value,
            i_value: self.i_value,
            identity_gap: self.identity_gap,
            residual_u: self.residual_u,
            residual_v: self.residual_v,
        }
    }

    /// Sign-insensitive L² distance between the primal parts of two records.
    pub fn primal_distance(&self, other: &SolutionRecord) -> f64 {
        let d = |a: &DiscreteField, b: &DiscreteField, flip: f64| -> f64 {
            a.sub(&b.scaled(flip))
                .map(|d| d.lp_norm(2.0).unwrap_or(f64::INFINITY))
                .unwrap_or(f64::INFINITY)
        };
        let plain = d(&self.u, &other.u, 1.0).hypot(d(&self.v, &other.v, 1.0));
        let flipped = d(&self.u, &other.u, -1.0).hypot(d(&self.v, &other.v, -1.0));
        plain.min(flipped)
    }
}
