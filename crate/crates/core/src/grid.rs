//! Uniform Dirichlet grids on (0,1) and (0,1)^2, discrete fields with
//! quadrature, and the inverse Laplacian.
//!
//! Fields hold values at interior nodes only; homogeneous Dirichlet data is
//! implicit. The inverse of the 3-point / 5-point Laplacian is applied through
//! its sine eigenbasis, so `apply_a` inverts the difference operator to
//! rounding accuracy and the solve is reused for every right-hand side.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("Lebesgue exponent must satisfy r >= 1, got {0}")]
    BadExponent(f64),
    #[error("mesh needs at least 2 interior nodes per axis, got {0}")]
    TooCoarse(usize),
    #[error("value vector has length {got}, mesh has {want} nodes")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
}

/// Interior-node grid on the unit interval or unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    dim: usize,
    n_per_axis: usize,
}

impl Mesh {
    pub fn new_1d(n_per_axis: usize) -> Result<Self, GridError> {
        if n_per_axis < 2 {
            return Err(GridError::TooCoarse(n_per_axis));
        }
        Ok(Mesh { dim: 1, n_per_axis })
    }

    pub fn new_2d(n_per_axis: usize) -> Result<Self, GridError> {
        if n_per_axis < 2 {
            return Err(GridError::TooCoarse(n_per_axis));
        }
        Ok(Mesh { dim: 2, n_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    /// Node spacing h = 1/(n_per_axis+1).
    pub fn h(&self) -> f64 {
        1.0 / (self.n_per_axis as f64 + 1.0)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight shared by every interior node.
    pub fn weight(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Coordinates of node `idx`; the y entry is 0 on 1D meshes.
    /// 2D layout: idx = iy * n_per_axis + ix.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.h();
        match self.dim {
            1 => ((idx as f64 + 1.0) * h, 0.0),
            _ => {
                let ix = idx % self.n_per_axis;
                let iy = idx / self.n_per_axis;
                ((ix as f64 + 1.0) * h, (iy as f64 + 1.0) * h)
            }
        }
    }
}

/// Real values at the interior nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: Mesh) -> Self {
        DiscreteField {
            mesh,
            values: vec![0.0; mesh.n_nodes()],
        }
    }

    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != mesh.n_nodes() {
            return Err(GridError::LengthMismatch {
                got: values.len(),
                want: mesh.n_nodes(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(DiscreteField { mesh, values })
    }

    /// Sample a function of (x, y); the y argument is 0 on 1D meshes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(mesh: Mesh, f: F) -> Self {
        let values = (0..mesh.n_nodes())
            .map(|i| {
                let (x, y) = mesh.coords(i);
                f(x, y)
            })
            .collect();
        DiscreteField { mesh, values }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Quadrature L^r norm; requires r >= 1.
    pub fn lp_norm(&self, r: f64) -> Result<f64, GridError> {
        if !(r >= 1.0) {
            return Err(GridError::BadExponent(r));
        }
        let w = self.mesh.weight();
        let sum: f64 = self.values.iter().map(|v| w * v.abs().powf(r)).sum();
        Ok(sum.powf(1.0 / r))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        DiscreteField {
            mesh: self.mesh,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, GridError> {
        if self.mesh != rhs.mesh {
            return Err(GridError::MeshMismatch);
        }
        Ok(DiscreteField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, GridError> {
        if self.mesh != rhs.mesh {
            return Err(GridError::MeshMismatch);
        }
        Ok(DiscreteField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// Quadrature pairing ∫ a b dx (uniform interior weights).
pub fn inner(a: &DiscreteField, b: &DiscreteField) -> Result<f64, GridError> {
    if a.mesh != b.mesh {
        return Err(GridError::MeshMismatch);
    }
    let w = a.mesh.weight();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| w * x * y)
        .sum())
}

/// Apply the discrete -Δ with zero Dirichlet boundary (3-point / 5-point stencil).
pub fn neg_laplacian(field: &DiscreteField) -> DiscreteField {
    let mesh = field.mesh;
    let n = mesh.n_per_axis;
    let inv_h2 = 1.0 / (mesh.h() * mesh.h());
    let v = &field.values;
    let mut out = vec![0.0; v.len()];
    match mesh.dim {
        1 => {
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = (2.0 * v[i] - left - right) * inv_h2;
            }
        }
        _ => {
            for iy in 0..n {
                for ix in 0..n {
                    let idx = iy * n + ix;
                    let left = if ix > 0 { v[idx - 1] } else { 0.0 };
                    let right = if ix + 1 < n { v[idx + 1] } else { 0.0 };
                    let down = if iy > 0 { v[idx - n] } else { 0.0 };
                    let up = if iy + 1 < n { v[idx + n] } else { 0.0 };
                    out[idx] = (4.0 * v[idx] - left - right - down - up) * inv_h2;
                }
            }
        }
    }
    DiscreteField { mesh, values: out }
}

/// Inverse of the discrete Dirichlet Laplacian, diagonalized in the sine basis.
///
/// The sine matrix S, S_ij = sin((i+1)(j+1)πh), satisfies S² = ((n+1)/2) I,
/// so the solve is two dense transforms and an eigenvalue division.
pub struct LaplacianSolver {
    mesh: Mesh,
    sine: DMatrix<f64>,
    /// Eigenvalues of the 1D stencil per axis mode, λ_j = (2/h²)(1-cos(jπh)).
    lambda_axis: Vec<f64>,
}

impl LaplacianSolver {
    pub fn new(mesh: Mesh) -> Self {
        let n = mesh.n_per_axis;
        let h = mesh.h();
        let sine = DMatrix::from_fn(n, n, |i, j| {
            ((i as f64 + 1.0) * (j as f64 + 1.0) * std::f64::consts::PI * h).sin()
        });
        let lambda_axis = (1..=n)
            .map(|j| 2.0 / (h * h) * (1.0 - (j as f64 * std::f64::consts::PI * h).cos()))
            .collect();
        LaplacianSolver {
            mesh,
            sine,
            lambda_axis,
        }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    /// Discrete eigenvalue of axis mode j (1-based).
    pub fn lambda_axis(&self, j: usize) -> f64 {
        self.lambda_axis[j - 1]
    }

    /// Solve -Δ w = rhs with zero boundary.
    pub fn apply_a(&self, rhs: &DiscreteField) -> Result<DiscreteField, GridError> {
        if rhs.mesh != self.mesh {
            return Err(GridError::MeshMismatch);
        }
        let n = self.mesh.n_per_axis;
        let norm = 2.0 / (n as f64 + 1.0);
        let values = match self.mesh.dim {
            1 => {
                let r = nalgebra::DVector::from_column_slice(&rhs.values);
                let mut c = &self.sine * r;
                for j in 0..n {
                    c[j] *= norm / self.lambda_axis[j];
                }
                (&self.sine * c).as_slice().to_vec()
            }
            _ => {
                // node (ix, iy) at row ix, column iy
                let r = DMatrix::from_fn(n, n, |ix, iy| rhs.values[iy * n + ix]);
                let mut c = &self.sine * r * &self.sine;
                for jy in 0..n {
                    for jx in 0..n {
                        c[(jx, jy)] *=
                            norm * norm / (self.lambda_axis[jx] + self.lambda_axis[jy]);
                    }
                }
                let w = &self.sine * c * &self.sine;
                let mut out = vec![0.0; n * n];
                for iy in 0..n {
                    for ix in 0..n {
                        out[iy * n + ix] = w[(ix, iy)];
                    }
                }
                out
            }
        };
        Ok(DiscreteField {
            mesh: self.mesh,
            values,
        })
    }

    /// Discrete Dirichlet form ∫ ∇u·∇v computed through the stencil, so that
    /// inner(f, A g) = inner(∇u, ∇v) holds exactly at the discrete level.
    pub fn dirichlet_form(&self, u: &DiscreteField, v: &DiscreteField) -> Result<f64, GridError> {
        if u.mesh != self.mesh || v.mesh != self.mesh {
            return Err(GridError::MeshMismatch);
        }
        inner(&neg_laplacian(u), v)
    }

    /// Dense matrix of the inverse operator on 1D meshes,
    /// A = S diag(2/((n+1)λ)) S.
    pub(crate) fn dense_a(&self) -> DMatrix<f64> {
        assert_eq!(self.mesh.dim, 1, "dense inverse assembled for 1D only");
        let n = self.mesh.n_per_axis;
        let norm = 2.0 / (n as f64 + 1.0);
        let mut d = DMatrix::zeros(n, n);
        for j in 0..n {
            d[(j, j)] = norm / self.lambda_axis[j];
        }
        &self.sine * d * &self.sine
    }
}

/// Render named fields on one mesh as CSV with node coordinates.
pub fn fields_to_csv(mesh: Mesh, columns: &[(&str, &DiscreteField)]) -> String {
    let mut out = String::new();
    if mesh.dim() == 1 {
        out.push('x');
    } else {
        out.push_str("x,y");
    }
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..mesh.n_nodes() {
        let (x, y) = mesh.coords(i);
        if mesh.dim() == 1 {
            out.push_str(&format!("{:.16e}", x));
        } else {
            out.push_str(&format!("{:.16e},{:.16e}", x, y));
        }
        for (_, field) in columns {
            out.push_str(&format!(",{:.16e}", field.values()[i]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_of_constant_misses_only_boundary_cells() {
        // Interior-only weights integrate the unit constant to 1 - h: the
        // boundary cells carry no mass because fields vanish there.
        let mesh = Mesh::new_1d(255).unwrap();
        let one = DiscreteField::from_fn(mesh, |_, _| 1.0);
        for r in [1.0, 2.0, 3.5] {
            let val = one.lp_norm(r).unwrap();
            let expect = (1.0 - mesh.h()).powf(1.0 / r);
            assert_relative_eq!(val, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn lp_norm_of_sine_is_exact_in_l2() {
        let mesh = Mesh::new_1d(255).unwrap();
        let s = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin());
        // discrete sine orthogonality makes the L² norm exact
        assert_relative_eq!(s.lp_norm(2.0).unwrap(), (0.5f64).sqrt(), epsilon = 1e-14);
        // a generic exponent only matches the integral to O(h²)
        let l4 = s.lp_norm(4.0).unwrap();
        assert_relative_eq!(l4, (3.0f64 / 8.0).powf(0.25), epsilon = 1e-4);
    }

    #[test]
    fn lp_norm_rejects_small_exponent_and_is_homogeneous() {
        let mesh = Mesh::new_1d(31).unwrap();
        let s = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin());
        assert_eq!(s.lp_norm(0.5).unwrap_err(), GridError::BadExponent(0.5));
        let a = s.scaled(-2.5).lp_norm(3.0).unwrap();
        let b = 2.5 * s.lp_norm(3.0).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn inner_product_basics() {
        let mesh = Mesh::new_1d(255).unwrap();
        let s = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin());
        let z = DiscreteField::zeros(mesh);
        assert_relative_eq!(inner(&s, &s).unwrap(), 0.5, epsilon = 1e-13);
        assert_eq!(inner(&s, &z).unwrap(), 0.0);
        let other = DiscreteField::zeros(Mesh::new_1d(31).unwrap());
        assert_eq!(inner(&s, &other).unwrap_err(), GridError::MeshMismatch);
    }

    #[test]
    fn apply_a_matches_analytic_eigenpair_1d() {
        let mesh = Mesh::new_1d(255).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let rhs = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin());
        let w = solver.apply_a(&rhs).unwrap();
        let exact = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin() / (PI * PI));
        let err = w.sub(&exact).unwrap().max_abs();
        assert!(err < 10.0 * mesh.h() * mesh.h(), "error {err}");
    }

    #[test]
    fn apply_a_matches_analytic_eigenpair_2d() {
        let mesh = Mesh::new_2d(31).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let rhs = DiscreteField::from_fn(mesh, |x, y| (PI * x).sin() * (PI * y).sin());
        let w = solver.apply_a(&rhs).unwrap();
        let exact = rhs.scaled(1.0 / (2.0 * PI * PI));
        let err = w.sub(&exact).unwrap().max_abs();
        assert!(err < 20.0 * mesh.h() * mesh.h(), "error {err}");
    }

    #[test]
    fn apply_a_inverts_the_stencil() {
        for mesh in [Mesh::new_1d(63).unwrap(), Mesh::new_2d(15).unwrap()] {
            let solver = LaplacianSolver::new(mesh);
            let w = DiscreteField::from_fn(mesh, |x, y| x * (1.0 - x) * (0.3 + y));
            let back = solver.apply_a(&neg_laplacian(&w)).unwrap();
            let err = back.sub(&w).unwrap().max_abs();
            assert!(err < 1e-10, "round trip error {err}");
        }
    }

    #[test]
    fn apply_a_of_zero_is_zero() {
        let mesh = Mesh::new_1d(31).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let w = solver.apply_a(&DiscreteField::zeros(mesh)).unwrap();
        assert!(w.max_abs() < 1e-14);
    }

    #[test]
    fn apply_a_is_self_adjoint_and_monotone() {
        let mesh = Mesh::new_1d(63).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let a = DiscreteField::from_fn(mesh, |x, _| (3.0 * PI * x).sin() + 0.2 * x);
        let b = DiscreteField::from_fn(mesh, |x, _| x * x * (1.0 - x));
        let lhs = inner(&a, &solver.apply_a(&b).unwrap()).unwrap();
        let rhs = inner(&solver.apply_a(&a).unwrap(), &b).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-10);

        // discrete maximum principle: nonnegative data gives nonnegative solution
        let pos = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin().abs() + 0.1);
        let w = solver.apply_a(&pos).unwrap();
        assert!(w.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn second_order_convergence_under_refinement() {
        let errs: Vec<f64> = [127usize, 255]
            .iter()
            .map(|&n| {
                let mesh = Mesh::new_1d(n).unwrap();
                let solver = LaplacianSolver::new(mesh);
                let rhs = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin());
                let w = solver.apply_a(&rhs).unwrap();
                let exact = DiscreteField::from_fn(mesh, |x, _| (PI * x).sin() / (PI * PI));
                w.sub(&exact).unwrap().max_abs()
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "refinement ratio {ratio} outside [3.5, 4.5]"
        );
    }

    #[test]
    fn csv_has_coordinates_and_columns() {
        let mesh = Mesh::new_1d(3).unwrap();
        let s = DiscreteField::from_fn(mesh, |x, _| x);
        let csv = fields_to_csv(mesh, &[("u", &s)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,u");
        assert_eq!(csv.lines().count(), 4);
    }
}
