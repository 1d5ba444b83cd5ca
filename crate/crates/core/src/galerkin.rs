//! Biorthogonal Galerkin decomposition built on the Dirichlet sine eigenbasis.
//!
//! The eigenfields g_j are discretely L²-orthonormal, the dual fields are
//! f_j = λ_j g_j, and the biorthogonality ∫ f_j A g_k = δ_jk holds to
//! rounding. Gap constants α_n, β_n measure the inverse Laplacian on the
//! truncated complements and drive the minimax radius schedules.

use crate::grid::{inner, DiscreteField, GridError, Mesh};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GalerkinError {
    #[error("requested {requested} modes, mesh resolves {available}")]
    TooManyModes { requested: usize, available: usize },
    #[error("subspace specification invalid: {0}")]
    BadSpec(String),
    #[error("ratio ascent stalled; best lower bounds alpha {alpha:e}, beta {beta:e}")]
    NonConvergence { alpha: f64, beta: f64 },
    #[error("positivity constant came out non-positive: {0:e}")]
    NonPositive(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Named subspaces of the decomposition; indices are 1-based mode counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceSpec {
    /// span{g_1..g_n} (single-field, either side: the two projections agree)
    En { n: usize },
    /// complement of En within the resolved modes
    EnPerp { n: usize },
    /// span{(f_j, g_j), j <= n} — paired coefficients
    Fn { n: usize },
    /// Ẽ_n × E_n
    Gn { n: usize },
    /// truncated complement Ẽ_n^⊥ × E_n^⊥
    GnPerp { n: usize },
    /// span{f_j: n<=j<=m} × span{g_j: n<=j<=m}
    GnM { n: usize, m: usize },
}

impl SubspaceSpec {
    /// Coefficient-space dimension within a basis of m_max modes.
    pub fn dim(&self, m_max: usize) -> usize {
        match *self {
            SubspaceSpec::En { n } => n,
            SubspaceSpec::EnPerp { n } => m_max - n,
            SubspaceSpec::Fn { n } => n,
            SubspaceSpec::Gn { n } => 2 * n,
            SubspaceSpec::GnPerp { n } => 2 * (m_max - n),
            SubspaceSpec::GnM { n, m } => 2 * (m - n + 1),
        }
    }

    pub fn validate(&self, m_max: usize) -> Result<(), GalerkinError> {
        let ok = match *self {
            SubspaceSpec::En { n } | SubspaceSpec::Fn { n } | SubspaceSpec::Gn { n } => {
                n >= 1 && n <= m_max
            }
            SubspaceSpec::EnPerp { n } | SubspaceSpec::GnPerp { n } => n < m_max,
            SubspaceSpec::GnM { n, m } => n >= 1 && n <= m && m <= m_max,
        };
        if ok {
            Ok(())
        } else {
            Err(GalerkinError::BadSpec(format!("{self:?} with m_max {m_max}")))
        }
    }
}

/// Dirichlet eigenpairs with the dual basis realizing the biorthogonality.
pub struct GalerkinBasis {
    mesh: Mesh,
    lambdas: Vec<f64>,
    modes: Vec<DiscreteField>,
    /// axis indices (j_x, j_y); j_y = 0 on 1D meshes
    labels: Vec<(usize, usize)>,
}

/// Gap constants of one truncation level.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GapConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GalerkinBasis {
    /// Build the first `m_max` sine eigenpairs sorted by eigenvalue
    /// (lexicographic axis-index tie break in 2D).
    pub fn build(mesh: Mesh, m_max: usize) -> Result<Self, GalerkinError> {
        let n = mesh.n_per_axis();
        let available = mesh.n_nodes();
        if m_max == 0 || m_max > available {
            return Err(GalerkinError::TooManyModes {
                requested: m_max,
                available,
            });
        }
        let h = mesh.h();
        let axis_lambda =
            |j: usize| 2.0 / (h * h) * (1.0 - (j as f64 * std::f64::consts::PI * h).cos());
        let mut entries: Vec<(f64, (usize, usize))> = match mesh.dim() {
            1 => (1..=n).map(|j| (axis_lambda(j), (j, 0))).collect(),
            _ => {
                let mut v = Vec::with_capacity(n * n);
                for jx in 1..=n {
                    for jy in 1..=n {
                        v.push((axis_lambda(jx) + axis_lambda(jy), (jx, jy)));
                    }
                }
                v
            }
        };
        entries.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1 .0.cmp(&b.1 .0))
                .then(a.1 .1.cmp(&b.1 .1))
        });
        entries.truncate(m_max);

        let pi = std::f64::consts::PI;
        let mut lambdas = Vec::with_capacity(m_max);
        let mut modes = Vec::with_capacity(m_max);
        let mut labels = Vec::with_capacity(m_max);
        for (lam, (jx, jy)) in entries {
            let field = match mesh.dim() {
                1 => DiscreteField::from_fn(mesh, |x, _| {
                    std::f64::consts::SQRT_2 * (jx as f64 * pi * x).sin()
                }),
                _ => DiscreteField::from_fn(mesh, |x, y| {
                    2.0 * (jx as f64 * pi * x).sin() * (jy as f64 * pi * y).sin()
                }),
            };
            lambdas.push(lam);
            modes.push(field);
            labels.push((jx, jy));
        }
        Ok(GalerkinBasis {
            mesh,
            lambdas,
            modes,
            labels,
        })
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn m_max(&self) -> usize {
        self.modes.len()
    }

    /// Eigenvalue λ_j (1-based).
    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j - 1]
    }

    /// L²-normalized eigenfield g_j (1-based).
    pub fn mode(&self, j: usize) -> &DiscreteField {
        &self.modes[j - 1]
    }

    /// Dual field f_j = λ_j g_j.
    pub fn dual_mode(&self, j: usize) -> DiscreteField {
        self.modes[j - 1].scaled(self.lambdas[j - 1])
    }

    /// Axis labels (j_x, j_y) of mode j; j_y = 0 on 1D meshes.
    pub fn label(&self, j: usize) -> (usize, usize) {
        self.labels[j - 1]
    }

    /// Linear combination Σ c_j g_{j0+j}.
    pub fn combine_modes(&self, first: usize, coeffs: &[f64]) -> DiscreteField {
        let mut out = DiscreteField::zeros(self.mesh);
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let m = &self.modes[first - 1 + k];
            for (o, x) in out.values_mut().iter_mut().zip(m.values()) {
                *o += c * x;
            }
        }
        out
    }

    /// Modal coefficients ⟨field, g_j⟩ for j = 1..=m_max.
    pub fn coefficients(&self, field: &DiscreteField) -> Result<Vec<f64>, GalerkinError> {
        (1..=self.m_max())
            .map(|j| inner(field, self.mode(j)).map_err(Into::into))
            .collect()
    }
}

/// Projection of a single field onto a modal subspace. The f-side and g-side
/// projections coincide because f_j is a scalar multiple of g_j, so `En`
/// covers both; pair-valued subspaces are rejected.
pub fn project(
    field: &DiscreteField,
    basis: &GalerkinBasis,
    spec: &SubspaceSpec,
) -> Result<DiscreteField, GalerkinError> {
    spec.validate(basis.m_max())?;
    match *spec {
        SubspaceSpec::En { n } => {
            let mut out = DiscreteField::zeros(basis.mesh());
            for j in 1..=n {
                let c = inner(field, basis.mode(j))?;
                for (o, x) in out.values_mut().iter_mut().zip(basis.mode(j).values()) {
                    *o += c * x;
                }
            }
            Ok(out)
        }
        SubspaceSpec::EnPerp { n } => {
            let head = project(field, basis, &SubspaceSpec::En { n })?;
            Ok(field.sub(&head)?)
        }
        other => Err(GalerkinError::BadSpec(format!(
            "project acts on single fields; {other:?} is pair-valued"
        ))),
    }
}

/// Norm-ratio ascent shared by the gap constants: maximize
/// |num_mat · c|_{r_num} / |den_mat · c|_{r_den} over coefficients c.
struct RatioProblem<'a> {
    /// columns: field values of each complement mode, numerator side
    num_cols: Vec<&'a [f64]>,
    num_scale: Vec<f64>,
    den_cols: Vec<&'a [f64]>,
    den_scale: Vec<f64>,
    r_num: f64,
    r_den: f64,
    weight: f64,
}

impl RatioProblem<'_> {
    fn field(values: &mut [f64], cols: &[&[f64]], scale: &[f64], c: &[f64]) {
        for v in values.iter_mut() {
            *v = 0.0;
        }
        for ((col, &s), &ck) in cols.iter().zip(scale).zip(c) {
            let cs = s * ck;
            if cs == 0.0 {
                continue;
            }
            for (v, x) in values.iter_mut().zip(*col) {
                *v += cs * x;
            }
        }
    }

    fn norm(values: &[f64], r: f64, w: f64) -> f64 {
        values
            .iter()
            .map(|v| w * v.abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    }

    fn ratio(&self, c: &[f64], scratch: &mut [f64]) -> f64 {
        Self::field(scratch, &self.num_cols, &self.num_scale, c);
        let num = Self::norm(scratch, self.r_num, self.weight);
        Self::field(scratch, &self.den_cols, &self.den_scale, c);
        let den = Self::norm(scratch, self.r_den, self.weight);
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Gradient of log(ratio) with respect to c.
    fn log_ratio_grad(&self, c: &[f64], grad: &mut [f64], scratch: &mut [f64]) {
        let w = self.weight;
        for side in 0..2 {
            let (cols, scale, r, sign) = if side == 0 {
                (&self.num_cols, &self.num_scale, self.r_num, 1.0)
            } else {
                (&self.den_cols, &self.den_scale, self.r_den, -1.0)
            };
            Self::field(scratch, cols, scale, c);
            let norm = Self::norm(scratch, r, w);
            if norm == 0.0 {
                continue;
            }
            // d|u|_r/dc_k = |u|_r^{1-r} Σ w |u_i|^{r-1} sgn(u_i) col_k(i)
            let pref = norm.powf(1.0 - r);
            for (k, (col, &s)) in cols.iter().zip(scale).enumerate() {
                let mut acc = 0.0;
                for (u, x) in scratch.iter().zip(*col) {
                    if *u != 0.0 {
                        acc += w * u.abs().powf(r - 1.0) * u.signum() * x;
                    }
                }
                grad[k] += sign * pref * s * acc / norm;
            }
        }
    }

    /// Ascent from one start; returns the best ratio reached.
    fn ascend(&self, start: &[f64], iters: usize) -> f64 {
        let dim = start.len();
        let mut c: Vec<f64> = start.to_vec();
        normalize(&mut c);
        let mut scratch = vec![0.0; self.num_cols[0].len()];
        let mut grad = vec![0.0; dim];
        let mut val = self.ratio(&c, &mut scratch);
        let mut step = 0.5;
        for _ in 0..iters {
            grad.iter_mut().for_each(|g| *g = 0.0);
            self.log_ratio_grad(&c, &mut grad, &mut scratch);
            // project out the radial component; the ratio is 0-homogeneous
            let cg: f64 = c.iter().zip(&grad).map(|(a, b)| a * b).sum();
            for (g, &ck) in grad.iter_mut().zip(&c) {
                *g -= cg * ck;
            }
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-13 {
                break;
            }
            let mut advanced = false;
            for _ in 0..40 {
                let mut cn: Vec<f64> = c
                    .iter()
                    .zip(&grad)
                    .map(|(a, g)| a + step * g / gnorm)
                    .collect();
                normalize(&mut cn);
                let vn = self.ratio(&cn, &mut scratch);
                if vn > val {
                    c = cn;
                    val = vn;
                    advanced = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        val
    }
}

fn normalize(c: &mut [f64]) {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|x| *x /= n);
    }
}

fn ratio_sup(problem: &RatioProblem, dim: usize, starts: usize, seed: u64) -> f64 {
    let mut start_list: Vec<Vec<f64>> = Vec::with_capacity(starts + 1);
    // the lowest complement mode is the natural candidate
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    start_list.push(e1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..starts {
        start_list.push((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let best_ascent = start_list
        .par_iter()
        .map(|s| problem.ascend(s, 400))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0_f64, f64::max);
    // random-direction lower bound; the optimizer must dominate it
    let mut sampled: f64 = 0.0;
    let mut scratch = vec![0.0; problem.num_cols[0].len()];
    for _ in 0..2000 {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sampled = sampled.max(problem.ratio(&c, &mut scratch));
    }
    best_ascent.max(sampled)
}

/// Gap constants α_n, β_n over the resolved complement of the first n modes,
/// and γ_n = min(α_n, β_n).
pub fn gap_constants(
    basis: &GalerkinBasis,
    n: usize,
    p: f64,
    q: f64,
    seed: u64,
) -> Result<GapConstants, GalerkinError> {
    if n >= basis.m_max() {
        return Err(GalerkinError::BadSpec(format!(
            "gap constants need n < m_max, got n {n}, m_max {}",
            basis.m_max()
        )));
    }
    let tail: Vec<usize> = (n + 1..=basis.m_max()).collect();
    let dim = tail.len();
    let cols: Vec<&[f64]> = tail.iter().map(|&j| basis.mode(j).values()).collect();
    let ones = vec![1.0; dim];
    let inv_lambda: Vec<f64> = tail.iter().map(|&j| 1.0 / basis.lambda(j)).collect();
    let lambda: Vec<f64> = tail.iter().map(|&j| basis.lambda(j)).collect();
    let weight = basis.mesh().weight();

    // α_n: sup |A g|_{p+1} / |g|_{1+1/q}; A g_j = g_j / λ_j
    let alpha_problem = RatioProblem {
        num_cols: cols.clone(),
        num_scale: inv_lambda.clone(),
        den_cols: cols.clone(),
        den_scale: ones.clone(),
        r_num: p + 1.0,
        r_den: 1.0 + 1.0 / q,
        weight,
    };
    let alpha = ratio_sup(&alpha_problem, dim, 20, seed ^ 0xa1);

    // β_n: sup |A f|_{q+1} / |f|_{1+1/p}; f = Σ c λ g, A f = Σ c g
    let beta_problem = RatioProblem {
        num_cols: cols.clone(),
        num_scale: ones,
        den_cols: cols,
        den_scale: lambda,
        r_num: q + 1.0,
        r_den: 1.0 + 1.0 / p,
        weight,
    };
    let beta = ratio_sup(&beta_problem, dim, 20, seed ^ 0xb2);

    if !(alpha > 0.0 && beta > 0.0) {
        return Err(GalerkinError::NonConvergence { alpha, beta });
    }
    Ok(GapConstants {
        alpha,
        beta,
        gamma: alpha.min(beta),
    })
}

/// Positive-definiteness constant of the pairing on F_n:
/// C(n) = min { ∫ f A g : (f, g) ∈ F_n, ‖(f, g)‖_X = 1 }.
///
/// On F_n the pairing equals Σ c_j², so the minimum over the unit X-sphere is
/// 1 / (max_d Σ-norm)² with the maximum of |f(d)|_{1+1/p} + |g(d)|_{1+1/q}
/// taken over Euclidean-unit coefficient directions.
pub fn positivity_constant(
    basis: &GalerkinBasis,
    n: usize,
    p: f64,
    q: f64,
    seed: u64,
) -> Result<f64, GalerkinError> {
    if n < 1 || n > basis.m_max() {
        return Err(GalerkinError::BadSpec(format!(
            "positivity constant needs 1 <= n <= m_max, got {n}"
        )));
    }
    let cols: Vec<&[f64]> = (1..=n).map(|j| basis.mode(j).values()).collect();
    let lambda: Vec<f64> = (1..=n).map(|j| basis.lambda(j)).collect();
    let ones = vec![1.0; n];
    let weight = basis.mesh().weight();
    let n_nodes = basis.mesh().n_nodes();

    // X-norm of the paired combination and its coefficient gradient
    let xnorm_grad = |c: &[f64], scratch: &mut [f64], grad: Option<&mut [f64]>| -> f64 {
        let mut total = 0.0;
        let mut acc: Option<&mut [f64]> = grad;
        if let Some(g) = acc.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        for (scale, r) in [(&lambda, 1.0 + 1.0 / p), (&ones, 1.0 + 1.0 / q)] {
            RatioProblem::field(scratch, &cols, scale, c);
            let norm = RatioProblem::norm(scratch, r, weight);
            total += norm;
            if norm == 0.0 {
                continue;
            }
            if let Some(g) = acc.as_deref_mut() {
                let pref = norm.powf(1.0 - r);
                for (k, (col, &s)) in cols.iter().zip(scale.iter()).enumerate() {
                    let mut a = 0.0;
                    for (u, x) in scratch.iter().zip(*col) {
                        if *u != 0.0 {
                            a += weight * u.abs().powf(r - 1.0) * u.signum() * x;
                        }
                    }
                    g[k] += pref * s * a;
                }
            }
        }
        total
    };

    // maximize the X-norm over the Euclidean sphere by multistart ascent
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc3);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for j in 0..n.min(4) {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        starts.push(e);
    }
    for _ in 0..16 {
        starts.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let best = starts
        .par_iter()
        .map(|start| {
            let mut c = start.clone();
            normalize(&mut c);
            let mut scratch = vec![0.0; n_nodes];
            let mut grad = vec![0.0; n];
            let mut val = xnorm_grad(&c, &mut scratch, None);
            let mut step = 0.3;
            for _ in 0..300 {
                xnorm_grad(&c, &mut scratch, Some(&mut grad));
                let cg: f64 = c.iter().zip(&grad).map(|(a, b)| a * b).sum();
                for (g, &ck) in grad.iter_mut().zip(&c) {
                    *g -= cg * ck;
                }
                let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if gnorm < 1e-12 {
                    break;
                }
                let mut advanced = false;
                for _ in 0..40 {
                    let mut cn: Vec<f64> = c
                        .iter()
                        .zip(&grad)
                        .map(|(a, g)| a + step * g / gnorm)
                        .collect();
                    normalize(&mut cn);
                    let vn = xnorm_grad(&cn, &mut scratch, None);
                    if vn > val {
                        c = cn;
                        val = vn;
                        advanced = true;
                        step *= 1.5;
                        break;
                    }
                    step *= 0.5;
                }
                if !advanced {
                    break;
                }
            }
            val
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0_f64, f64::max);

    if !(best > 0.0) {
        return Err(GalerkinError::NonPositive(best));
    }
    Ok(1.0 / (best * best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{neg_laplacian, LaplacianSolver};
    use approx::assert_relative_eq;

    fn basis_1d() -> GalerkinBasis {
        GalerkinBasis::build(Mesh::new_1d(255).unwrap(), 40).unwrap()
    }

    #[test]
    fn ground_eigenvalue_near_pi_squared() {
        let basis = basis_1d();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((basis.lambda(1) - pi2).abs() / pi2 < 1e-3);
        // single-mode basis is fine too
        let tiny = GalerkinBasis::build(Mesh::new_1d(31).unwrap(), 1).unwrap();
        assert_eq!(tiny.m_max(), 1);
    }

    #[test]
    fn eigenfields_satisfy_the_stencil() {
        let basis = basis_1d();
        for j in [1usize, 5, 17, 40] {
            let lhs = neg_laplacian(basis.mode(j));
            let rhs = basis.mode(j).scaled(basis.lambda(j));
            let err = lhs.sub(&rhs).unwrap().max_abs() / rhs.max_abs();
            assert!(err < 1e-8, "mode {j} residual {err}");
        }
    }

    #[test]
    fn biorthogonality_matrix_is_identity() {
        let basis = basis_1d();
        let solver = LaplacianSolver::new(basis.mesh());
        let mut worst = 0.0_f64;
        for j in 1..=basis.m_max() {
            let fj = basis.dual_mode(j);
            for k in 1..=basis.m_max() {
                let agk = solver.apply_a(basis.mode(k)).unwrap();
                let val = inner(&fj, &agk).unwrap();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((val - target).abs());
            }
        }
        assert!(worst < 1e-9, "worst biorthogonality deviation {worst}");
    }

    #[test]
    fn eigenvalues_sorted_and_2d_ties_deterministic() {
        let basis = GalerkinBasis::build(Mesh::new_2d(15).unwrap(), 12).unwrap();
        for j in 2..=basis.m_max() {
            assert!(basis.lambda(j) >= basis.lambda(j - 1));
        }
        // modes 2 and 3 are the degenerate (1,2)/(2,1) pair, in lex order
        assert_eq!(basis.label(2), (1, 2));
        assert_eq!(basis.label(3), (2, 1));
    }

    #[test]
    fn projections_split_fields_exactly() {
        let basis = basis_1d();
        let g1 = basis.mode(1).clone();
        let p = project(&g1, &basis, &SubspaceSpec::En { n: 1 }).unwrap();
        assert!(p.sub(&g1).unwrap().max_abs() < 1e-12);
        let g2 = basis.mode(2).clone();
        let p = project(&g2, &basis, &SubspaceSpec::En { n: 1 }).unwrap();
        assert!(p.max_abs() < 1e-12);

        let field = DiscreteField::from_fn(basis.mesh(), |x, _| x * (1.0 - x) * (2.0 + x).sin());
        let head = project(&field, &basis, &SubspaceSpec::En { n: 7 }).unwrap();
        let tail = project(&field, &basis, &SubspaceSpec::EnPerp { n: 7 }).unwrap();
        let back = head.add(&tail).unwrap();
        assert!(back.sub(&field).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn projection_error_decreases_with_n() {
        let basis = basis_1d();
        let field = DiscreteField::from_fn(basis.mesh(), |x, _| x * (1.0 - x).powi(2));
        let mut last = f64::INFINITY;
        for n in [1usize, 5, 15, 40] {
            let p = project(&field, &basis, &SubspaceSpec::En { n }).unwrap();
            let err = p.sub(&field).unwrap().lp_norm(2.0).unwrap();
            assert!(err <= last + 1e-15, "n {n}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn subspace_dims_match_the_decomposition() {
        let m_max = 12;
        assert_eq!(SubspaceSpec::Fn { n: 4 }.dim(m_max), 4);
        assert_eq!(SubspaceSpec::Gn { n: 4 }.dim(m_max), 8);
        assert_eq!(SubspaceSpec::GnM { n: 3, m: 8 }.dim(m_max), 12);
        assert_eq!(SubspaceSpec::GnPerp { n: 4 }.dim(m_max), 16);
        assert!(SubspaceSpec::GnM { n: 9, m: 8 }.validate(m_max).is_err());
    }

    #[test]
    fn gap_constants_match_rayleigh_quotient_for_l2() {
        // p = q = 1 turns both sides into L² and α_n = 1/λ_{n+1} exactly
        let basis = basis_1d();
        for n in [1usize, 3, 10] {
            let g = gap_constants(&basis, n, 1.0, 1.0, 99).unwrap();
            let exact = 1.0 / basis.lambda(n + 1);
            assert!(
                (g.alpha - exact).abs() < 1e-8,
                "alpha_{n} = {}, want {exact}",
                g.alpha
            );
            assert!((g.beta - exact).abs() < 1e-8);
            assert_relative_eq!(g.gamma, exact, epsilon = 1e-8);
        }
    }

    #[test]
    fn gap_constants_decay_and_dominate_samples() {
        let basis = basis_1d();
        let (p, q) = (3.0, 3.0);
        let g1 = gap_constants(&basis, 1, p, q, 5).unwrap();
        let g5 = gap_constants(&basis, 5, p, q, 5).unwrap();
        let g20 = gap_constants(&basis, 20, p, q, 5).unwrap();
        assert!(g5.gamma < g1.gamma && g20.gamma < g5.gamma);
        assert!(g20.gamma < 0.1 * g1.gamma);

        // optimizer value must dominate a fresh random sweep of the ratio
        let n = 1usize;
        let gap = gap_constants(&basis, n, p, q, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let dim = basis.m_max() - n;
        let mut sampled: f64 = 0.0;
        for _ in 0..10_000 {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g_field = basis.combine_modes(n + 1, &c);
            let ag: Vec<f64> = c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck / basis.lambda(n + 1 + k))
                .collect();
            let ag_field = basis.combine_modes(n + 1, &ag);
            let num = ag_field.lp_norm(p + 1.0).unwrap();
            let den = g_field.lp_norm(1.0 + 1.0 / q).unwrap();
            sampled = sampled.max(num / den);
        }
        assert!(
            gap.alpha >= sampled * (1.0 - 1e-9),
            "ascent {} below sampled {}",
            gap.alpha,
            sampled
        );
    }

    #[test]
    fn positivity_constant_single_mode_closed_form() {
        let basis = basis_1d();
        let (p, q) = (3.0, 3.0);
        let c1 = positivity_constant(&basis, 1, p, q, 7).unwrap();
        let f1 = basis.dual_mode(1);
        let g1 = basis.mode(1);
        let s = f1.lp_norm(1.0 + 1.0 / p).unwrap() + g1.lp_norm(1.0 + 1.0 / q).unwrap();
        assert_relative_eq!(c1, 1.0 / (s * s), max_relative = 1e-9);
    }

    #[test]
    fn positivity_constant_positive_and_nonincreasing() {
        let basis = basis_1d();
        let (p, q) = (3.0, 3.0);
        let mut last = f64::INFINITY;
        for n in 1..=20 {
            let c = positivity_constant(&basis, n, p, q, 7).unwrap();
            assert!(c > 0.0, "C({n}) = {c}");
            assert!(c <= last * (1.0 + 1e-9), "C({n}) = {c} above C({}) = {last}", n - 1);
            last = c;
        }
    }
}
