//! Fountain and dual-fountain minimax searches over the Galerkin
//! decomposition: exponent selection, radius schedules, scaled linking
//! surfaces, greedy odd deformations, and Newton refinement to certified
//! critical points of the dual functional.
//!
//! The deformed surface is one admissible member of the odd/pinned map family
//! evolved greedily, so the reported level is an upper (superlinear) or lower
//! (sublinear) approximation of the true minimax value; correctness of each
//! solution is certified afterwards by Newton convergence, the energy
//! identity, and the PDE residuals, not by the level estimate itself.

use crate::conjugate::{ConjugateError, GrowthConstants, Hamiltonian, HamiltonianSpec};
use crate::functional::{
    eval_j, grad_j, recover_primal, DualPoint, FunctionalError, Regime, SolutionRecord,
};
use crate::galerkin::{gap_constants, GalerkinBasis, GalerkinError, GapConstants, SubspaceSpec};
use crate::grid::{neg_laplacian, DiscreteField, GridError, LaplacianSolver};
use crate::linalg::{gmres, lu_solve};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MinimaxError {
    #[error("exponents (p, q) = ({p}, {q}) sit on the wrong side of the regime split (1/(p+1)+1/(q+1) = {sum})")]
    RegimeMismatch { p: f64, q: f64, sum: f64 },
    #[error("radius schedule failed: {0}")]
    ScheduleFailure(String),
    #[error("deformation stalled at level {level}; best gradient norm {grad_norm:e}")]
    DeformationStall { level: f64, grad_norm: f64 },
    #[error("refined level {level} left the bracket [{lower}, {upper})")]
    LevelOutOfBracket { level: f64, lower: f64, upper: f64 },
    #[error("newton refinement stalled at gradient norm {grad_norm:e} after {steps} steps")]
    NonConvergence { grad_norm: f64, steps: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
}

/// Regime detection from the exponents: 1/(p+1) + 1/(q+1) below 1 is
/// superlinear, above is sublinear, pq = 1 is excluded.
pub fn regime_for(p: f64, q: f64) -> Result<Regime, MinimaxError> {
    let sum = 1.0 / (p + 1.0) + 1.0 / (q + 1.0);
    if (sum - 1.0).abs() < 1e-12 {
        return Err(MinimaxError::RegimeMismatch { p, q, sum });
    }
    Ok(if sum < 1.0 {
        Regime::Superlinear
    } else {
        Regime::Sublinear
    })
}

/// Scaling exponents k, l > 1 for the linking sets. The admissible share
/// s = k/(k+l) fills an open interval in each regime; the midpoint is scaled
/// so both exponents clear 1 strictly.
pub fn choose_exponents(p: f64, q: f64, regime: Regime) -> Result<(f64, f64), MinimaxError> {
    if regime_for(p, q)? != regime {
        let sum = 1.0 / (p + 1.0) + 1.0 / (q + 1.0);
        return Err(MinimaxError::RegimeMismatch { p, q, sum });
    }
    let (lo, hi) = match regime {
        Regime::Superlinear => (1.0 / (q + 1.0), p / (p + 1.0)),
        Regime::Sublinear => (p / (p + 1.0), 1.0 / (q + 1.0)),
    };
    debug_assert!(lo < hi);
    let s = 0.5 * (lo + hi);
    let t = 1.0 / s.min(1.0 - s) + 1.0;
    Ok((s * t, (1.0 - s) * t))
}

/// The scaling map (t^k f, t^l g) underlying all linking sets.
pub fn scaled_embed(t: f64, f: &DiscreteField, g: &DiscreteField, k: f64, l: f64) -> DualPoint {
    DualPoint {
        f: f.scaled(t.powf(k)),
        g: g.scaled(t.powf(l)),
    }
}

/// Coefficient frame over the first `m` modes of both sides. On this span the
/// pairing ∫ g A f collapses to the coefficient dot product, so J and its
/// gradient never touch the solver.
pub struct CoeffFrame<'a> {
    basis: &'a GalerkinBasis,
    m: usize,
    /// node values of f_j = λ_j g_j, column je
    fmat: DMatrix<f64>,
    /// node values of g_j
    gmat: DMatrix<f64>,
}

impl<'a> CoeffFrame<'a> {
    pub fn new(basis: &'a GalerkinBasis, m: usize) -> Result<Self, MinimaxError> {
        if m < 1 || m > basis.m_max() {
            return Err(MinimaxError::Unsupported(format!(
                "frame over {m} modes, basis holds {}",
                basis.m_max()
            )));
        }
        let n = basis.mesh().n_nodes();
        let mut fmat = DMatrix::zeros(n, m);
        let mut gmat = DMatrix::zeros(n, m);
        for j in 1..=m {
            let lam = basis.lambda(j);
            for (i, &v) in basis.mode(j).values().iter().enumerate() {
                gmat[(i, j - 1)] = v;
                fmat[(i, j - 1)] = lam * v;
            }
        }
        Ok(CoeffFrame {
            basis,
            m,
            fmat,
            gmat,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    fn node_values(&self, c: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let a = c.rows(0, self.m);
        let b = c.rows(self.m, self.m);
        (&self.fmat * a, &self.gmat * b)
    }

    pub fn realize(&self, c: &DVector<f64>) -> DualPoint {
        let (fv, gv) = self.node_values(c);
        let mesh = self.basis.mesh();
        DualPoint {
            f: DiscreteField::from_values(mesh, fv.as_slice().to_vec()).expect("finite"),
            g: DiscreteField::from_values(mesh, gv.as_slice().to_vec()).expect("finite"),
        }
    }

    /// Modal coefficients of a dual point (exact for points inside the span).
    pub fn project(&self, point: &DualPoint) -> Result<DVector<f64>, MinimaxError> {
        let mut c = DVector::zeros(2 * self.m);
        for j in 1..=self.m {
            let gj = self.basis.mode(j);
            c[j - 1] = crate::grid::inner(&point.f, gj)? / self.basis.lambda(j);
            c[self.m + j - 1] = crate::grid::inner(&point.g, gj)?;
        }
        Ok(c)
    }

    /// J restricted to the frame: quadrature of H* minus the coefficient
    /// pairing a·b.
    pub fn j_value(&self, spec: &HamiltonianSpec, c: &DVector<f64>) -> Result<f64, MinimaxError> {
        let (fv, gv) = self.node_values(c);
        let w = self.basis.mesh().weight();
        let mut conj = 0.0;
        let mut start = (0.0, 0.0);
        for i in 0..fv.len() {
            let cv = spec.conjugate_from(fv[i], gv[i], start)?;
            start = (cv.argmax_u, cv.argmax_v);
            conj += w * cv.value;
        }
        let a = c.rows(0, self.m);
        let b = c.rows(self.m, self.m);
        Ok(conj - a.dot(&b))
    }

    /// Coefficient gradient of J on the frame.
    pub fn grad(&self, spec: &HamiltonianSpec, c: &DVector<f64>) -> Result<DVector<f64>, MinimaxError> {
        let (fv, gv) = self.node_values(c);
        let w = self.basis.mesh().weight();
        let n = fv.len();
        let mut hu = DVector::zeros(n);
        let mut hv = DVector::zeros(n);
        let mut start = (0.0, 0.0);
        for i in 0..n {
            let cv = spec.conjugate_from(fv[i], gv[i], start)?;
            start = (cv.argmax_u, cv.argmax_v);
            hu[i] = w * cv.argmax_u;
            hv[i] = w * cv.argmax_v;
        }
        let mut out = DVector::zeros(2 * self.m);
        let ga = self.fmat.transpose() * hu;
        let gb = self.gmat.transpose() * hv;
        for j in 0..self.m {
            out[j] = ga[j] - c[self.m + j];
            out[self.m + j] = gb[j] - c[j];
        }
        Ok(out)
    }

    pub fn x_norm(&self, spec: &HamiltonianSpec, c: &DVector<f64>) -> Result<f64, MinimaxError> {
        Ok(self.realize(c).x_norm(spec)?)
    }
}

/// A coefficient point of one named subspace, X-normalized by `sphere_sample`.
#[derive(Debug, Clone)]
pub struct SubspacePoint {
    pub subspace: SubspaceSpec,
    pub coeffs: Vec<f64>,
}

impl SubspacePoint {
    /// Mode range (first..=last, paired?) of the subspace inside the basis.
    fn layout(&self, m_max: usize) -> Result<(usize, usize, bool), MinimaxError> {
        match self.subspace {
            SubspaceSpec::Fn { n } => Ok((1, n, true)),
            SubspaceSpec::Gn { n } => Ok((1, n, false)),
            SubspaceSpec::GnM { n, m } => Ok((n, m, false)),
            SubspaceSpec::GnPerp { n } => Ok((n + 1, m_max, false)),
            other => Err(MinimaxError::Unsupported(format!(
                "{other:?} does not span dual pairs"
            ))),
        }
    }

    /// Realize the pair of fields.
    pub fn realize(&self, basis: &GalerkinBasis) -> Result<DualPoint, MinimaxError> {
        let (first, last, paired) = self.layout(basis.m_max())?;
        let width = last - first + 1;
        let (fa, fb) = if paired {
            (&self.coeffs[..width], &self.coeffs[..width])
        } else {
            (&self.coeffs[..width], &self.coeffs[width..])
        };
        let mut f = DiscreteField::zeros(basis.mesh());
        let mut g = DiscreteField::zeros(basis.mesh());
        for (k, (&ca, &cb)) in fa.iter().zip(fb).enumerate() {
            let j = first + k;
            let gj = basis.mode(j);
            let lam = basis.lambda(j);
            for ((fv, gv), &x) in f
                .values_mut()
                .iter_mut()
                .zip(g.values_mut().iter_mut())
                .zip(gj.values())
            {
                *fv += ca * lam * x;
                *gv += cb * x;
            }
        }
        // the borrow above writes through two fields at once; recreate cleanly
        Ok(DualPoint { f, g })
    }

    /// Ambient frame coefficients (a | b).
    pub fn ambient(&self, frame: &CoeffFrame) -> Result<DVector<f64>, MinimaxError> {
        let (first, last, paired) = self.layout(frame.basis.m_max())?;
        if last > frame.m {
            return Err(MinimaxError::Unsupported(format!(
                "subspace reaches mode {last}, frame holds {}",
                frame.m
            )));
        }
        let width = last - first + 1;
        let mut c = DVector::zeros(frame.dim());
        for k in 0..width {
            let j = first + k - 1;
            c[j] = self.coeffs[k];
            c[frame.m + j] = if paired {
                self.coeffs[k]
            } else {
                self.coeffs[width + k]
            };
        }
        Ok(c)
    }
}

/// Golden-ratio Kronecker sequence mapped to Gaussians: deterministic
/// low-discrepancy directions, emitted in antipodal pairs and normalized to
/// X-norm 1.
pub fn sphere_sample(
    subspace: SubspaceSpec,
    basis: &GalerkinBasis,
    spec: &HamiltonianSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<SubspacePoint>, MinimaxError> {
    subspace.validate(basis.m_max())?;
    let d = subspace.dim(basis.m_max());
    if d == 0 {
        return Err(MinimaxError::Unsupported("empty subspace".into()));
    }
    if matches!(subspace, SubspaceSpec::En { .. } | SubspaceSpec::EnPerp { .. }) {
        return Err(MinimaxError::Unsupported(
            "sphere sampling acts on pair subspaces".into(),
        ));
    }
    let pairs = count.div_ceil(2);
    // generalized golden ratio: unique root in (1, 2) of x^{d+1} = x + 1
    let du = 2 * d.div_ceil(2);
    let mut phi = 1.5_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (du as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=du).map(|i| (phi.powi(-(i as i32))).fract()).collect();

    let mut out = Vec::with_capacity(2 * pairs);
    let mut k = 1 + (seed % 65536) as usize;
    while out.len() < 2 * pairs {
        let uni: Vec<f64> = alphas
            .iter()
            .map(|a| {
                let u = (0.5 + a * k as f64).fract();
                u.clamp(1e-12, 1.0 - 1e-12)
            })
            .collect();
        k += 1;
        let mut z = Vec::with_capacity(d);
        for c in uni.chunks(2) {
            let r = (-2.0 * c[0].ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * c[1];
            z.push(r * th.cos());
            if z.len() < d {
                z.push(r * th.sin());
            }
        }
        let candidate = SubspacePoint {
            subspace,
            coeffs: z,
        };
        let point = candidate.realize(basis)?;
        let norm = point.x_norm(spec)?;
        if norm < 1e-12 {
            continue;
        }
        let coeffs: Vec<f64> = candidate.coeffs.iter().map(|c| c / norm).collect();
        let neg: Vec<f64> = coeffs.iter().map(|c| -c).collect();
        out.push(SubspacePoint { subspace, coeffs });
        out.push(SubspacePoint {
            subspace,
            coeffs: neg,
        });
    }
    Ok(out)
}

/// Geometry of one minimax level: scaling exponents, radii, and the
/// calibrated growth constants that produced them.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LinkingConfig {
    pub regime: Regime,
    pub n: usize,
    /// Galerkin dimension (sublinear runs); superlinear runs derive their
    /// ambient dimension from n.
    pub m: Option<usize>,
    pub k: f64,
    pub l: f64,
    pub r_n: f64,
    pub rho_n: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub gamma: f64,
}

/// Sampled boundary estimates of one level.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LevelBounds {
    /// a_n (superlinear) or ã_n (sublinear): inf of J on the S-sphere.
    pub lower_sphere: f64,
    /// b_n or b̃_n: sup of J on the Q-sphere.
    pub upper_sphere: f64,
    /// d̃_n: inf of J over the scaled full ball (sublinear only).
    pub ball_inf: Option<f64>,
}

/// Search resolution and stopping control.
#[derive(Debug, Clone)]
pub struct SearchParams {
    pub seed: u64,
    /// sphere directions per linking dimension
    pub dirs_per_dim: usize,
    pub t_samples: usize,
    pub max_sweeps: usize,
    pub stall_window: usize,
    pub bound_samples: usize,
    /// how many times a stalled deformation may double its resolution
    pub max_doublings: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            seed: 0,
            dirs_per_dim: 16,
            t_samples: 17,
            max_sweeps: 3000,
            stall_window: 30,
            bound_samples: 64,
            max_doublings: 1,
        }
    }
}

/// Assemble the level geometry: exponents, gap constant, and radii satisfying
/// the sign conditions. Superlinear levels take `m = None`.
pub fn plan_level(
    spec: &HamiltonianSpec,
    basis: &GalerkinBasis,
    regime: Regime,
    n: usize,
    m: Option<usize>,
    growth: &GrowthConstants,
    params: &SearchParams,
) -> Result<LinkingConfig, MinimaxError> {
    let (k, l) = choose_exponents(spec.p(), spec.q(), regime)?;
    let (p, q) = (spec.p(), spec.q());
    let (ek, el) = (k * (1.0 + 1.0 / p), l * (1.0 + 1.0 / q));
    let c_lower = 0.5 * growth.lower;
    let gap_index = match regime {
        Regime::Superlinear => n,
        Regime::Sublinear => n - 1,
    };
    if gap_index == 0 {
        return Err(MinimaxError::Unsupported(
            "sublinear levels start at n = 2 so that the gap index n-1 is positive".into(),
        ));
    }
    let gaps: GapConstants = gap_constants(basis, gap_index, p, q, params.seed ^ 0x9a9)?;
    let gamma = gaps.gamma;

    match regime {
        Regime::Superlinear => {
            let denom = k + l - ek.min(el);
            debug_assert!(denom > 0.0);
            let r_n = (c_lower / (2.0 * gamma)).powf(1.0 / denom);
            // grow ρ by doubling until J on the sampled Q-sphere is ≤ 0
            let q_dim = 2 * n + 1;
            if q_dim > basis.m_max() {
                return Err(MinimaxError::Unsupported(format!(
                    "level {n} needs {q_dim} modes, basis holds {}",
                    basis.m_max()
                )));
            }
            let frame = CoeffFrame::new(basis, q_dim)?;
            let dirs = sphere_sample(
                SubspaceSpec::Fn { n: q_dim },
                basis,
                spec,
                params.bound_samples,
                params.seed ^ 0x51,
            )?;
            let mut rho = 2.0 * r_n.max(1e-6);
            let mut ok = false;
            for _ in 0..60 {
                let sup = sup_on_scaled(&frame, spec, &dirs, rho, k, l)?;
                if sup <= 0.0 {
                    ok = true;
                    break;
                }
                rho *= 2.0;
            }
            if !ok {
                return Err(MinimaxError::ScheduleFailure(format!(
                    "sup J on the Q-sphere stayed positive up to rho {rho}"
                )));
            }
            Ok(LinkingConfig {
                regime,
                n,
                m,
                k,
                l,
                r_n,
                rho_n: rho,
                c_lower,
                c_upper: growth.upper,
                gamma,
            })
        }
        Regime::Sublinear => {
            let m_val = m.ok_or_else(|| {
                MinimaxError::Unsupported("sublinear levels need a Galerkin dimension m".into())
            })?;
            if m_val < 2 * n || m_val > basis.m_max() {
                return Err(MinimaxError::Unsupported(format!(
                    "sublinear level needs 2n <= m <= m_max, got n {n}, m {m_val}"
                )));
            }
            let denom = ek.max(el) - (k + l);
            debug_assert!(denom > 0.0);
            let rho = (2.0 * gamma / c_lower).powf(1.0 / denom);
            // shrink r by halving until J on the sampled Q-sphere is < 0
            let q_dim = 2 * n;
            let frame = CoeffFrame::new(basis, q_dim)?;
            let dirs = sphere_sample(
                SubspaceSpec::Fn { n: q_dim },
                basis,
                spec,
                params.bound_samples,
                params.seed ^ 0x52,
            )?;
            let mut r = 0.5 * rho;
            let mut ok = false;
            for _ in 0..60 {
                let sup = sup_on_scaled(&frame, spec, &dirs, r, k, l)?;
                if sup < 0.0 {
                    ok = true;
                    break;
                }
                r *= 0.5;
            }
            if !ok {
                return Err(MinimaxError::ScheduleFailure(format!(
                    "sup J on the Q-sphere stayed nonnegative down to r {r}"
                )));
            }
            Ok(LinkingConfig {
                regime,
                n,
                m: Some(m_val),
                k,
                l,
                r_n: r,
                rho_n: rho,
                c_lower,
                c_upper: growth.upper,
                gamma,
            })
        }
    }
}

fn sup_on_scaled(
    frame: &CoeffFrame,
    spec: &HamiltonianSpec,
    dirs: &[SubspacePoint],
    t: f64,
    k: f64,
    l: f64,
) -> Result<f64, MinimaxError> {
    let vals = dirs
        .iter()
        .map(|d| {
            let mut c = d.ambient(frame)?;
            scale_coeffs(&mut c, frame.m, t, k, l);
            frame.j_value(spec, &c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn scale_coeffs(c: &mut DVector<f64>, m: usize, t: f64, k: f64, l: f64) {
    let (tk, tl) = (t.powf(k), t.powf(l));
    for j in 0..m {
        c[j] *= tk;
        c[m + j] *= tl;
    }
}

/// Sampled boundary estimates for one planned level.
pub fn level_bounds(
    config: &LinkingConfig,
    basis: &GalerkinBasis,
    spec: &HamiltonianSpec,
    params: &SearchParams,
) -> Result<LevelBounds, MinimaxError> {
    let full = CoeffFrame::new(basis, basis.m_max())?;
    let (k, l) = (config.k, config.l);
    let inf_on = |sub: SubspaceSpec, t: f64, seed: u64| -> Result<f64, MinimaxError> {
        let dirs = sphere_sample(sub, basis, spec, params.bound_samples, seed)?;
        let vals = dirs
            .iter()
            .map(|d| {
                let mut c = d.ambient(&full)?;
                scale_coeffs(&mut c, full.m, t, k, l);
                full.j_value(spec, &c)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
    };
    match config.regime {
        Regime::Superlinear => {
            let n = config.n;
            let a_n = inf_on(SubspaceSpec::GnPerp { n }, config.r_n, params.seed ^ 0x61)?;
            let frame_q = CoeffFrame::new(basis, 2 * n + 1)?;
            let dirs = sphere_sample(
                SubspaceSpec::Fn { n: 2 * n + 1 },
                basis,
                spec,
                params.bound_samples,
                params.seed ^ 0x62,
            )?;
            let b_n = sup_on_scaled(&frame_q, spec, &dirs, config.rho_n, k, l)?;
            Ok(LevelBounds {
                lower_sphere: a_n,
                upper_sphere: b_n,
                ball_inf: None,
            })
        }
        Regime::Sublinear => {
            let n = config.n;
            let a_t = inf_on(
                SubspaceSpec::GnPerp { n: n - 1 },
                config.rho_n,
                params.seed ^ 0x63,
            )?;
            let frame_q = CoeffFrame::new(basis, 2 * n)?;
            let dirs = sphere_sample(
                SubspaceSpec::Fn { n: 2 * n },
                basis,
                spec,
                params.bound_samples,
                params.seed ^ 0x64,
            )?;
            let b_t = sup_on_scaled(&frame_q, spec, &dirs, config.r_n, k, l)?;
            // d̃_n: sampled inf over the scaled full ball
            let dirs = sphere_sample(
                SubspaceSpec::GnPerp { n: 0 },
                basis,
                spec,
                params.bound_samples,
                params.seed ^ 0x65,
            )?;
            let mut d_t = f64::INFINITY;
            for it in 1..=8 {
                let t = config.rho_n * it as f64 / 8.0;
                for d in &dirs {
                    let mut c = d.ambient(&full)?;
                    scale_coeffs(&mut c, full.m, t, k, l);
                    d_t = d_t.min(full.j_value(spec, &c)?);
                }
            }
            Ok(LevelBounds {
                lower_sphere: a_t,
                upper_sphere: b_t,
                ball_inf: Some(d_t),
            })
        }
    }
}

/// Result of a minimax search or refinement.
#[derive(Debug, Clone)]
pub struct MinimaxOutcome {
    pub level_value: f64,
    pub witness: DualPoint,
    pub iterations: usize,
    /// full-space gradient norm at the witness
    pub grad_norm: f64,
    /// whether |grad J| ≤ 1e−9 (1 + ‖witness‖_X) in the full space
    pub converged: bool,
}

fn full_grad_norm(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    point: &DualPoint,
) -> Result<f64, MinimaxError> {
    let g = grad_j(spec, solver, point)?;
    Ok(g.l2_norm())
}

fn outcome_from(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    witness: DualPoint,
    iterations: usize,
) -> Result<MinimaxOutcome, MinimaxError> {
    let grad_norm = full_grad_norm(spec, solver, &witness)?;
    let level_value = eval_j(spec, solver, &witness)?;
    let scale = 1.0 + witness.x_norm(spec)?;
    Ok(MinimaxOutcome {
        level_value,
        converged: grad_norm <= 1e-9 * scale,
        witness,
        iterations,
        grad_norm,
    })
}

/// Damped Newton on the coefficient gradient of J restricted to the first
/// `galerkin_m` modes; the Jacobian is taken by central differences and the
/// result lifted back to the mesh.
pub fn newton_refine(
    candidate: &DualPoint,
    galerkin_m: usize,
    basis: &GalerkinBasis,
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
) -> Result<MinimaxOutcome, MinimaxError> {
    let frame = CoeffFrame::new(basis, galerkin_m)?;
    let c0 = frame.project(candidate)?;
    let (c, steps) = newton_refine_coeffs(&frame, spec, c0)?;
    outcome_from(spec, solver, frame.realize(&c), steps)
}

fn newton_refine_coeffs(
    frame: &CoeffFrame,
    spec: &HamiltonianSpec,
    mut c: DVector<f64>,
) -> Result<(DVector<f64>, usize), MinimaxError> {
    let dim = frame.dim();
    let tol = 1e-9;
    let mut g = frame.grad(spec, &c)?;
    let mut gnorm = g.norm();
    let mut mu = 0.0_f64;
    for step in 0..100 {
        if gnorm <= tol {
            return Ok((c, step));
        }
        let fd = 1e-6 * (1.0 + c.norm());
        let mut jac = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut cp = c.clone();
            cp[j] += fd;
            let mut cm = c.clone();
            cm[j] -= fd;
            let gp = frame.grad(spec, &cp)?;
            let gm = frame.grad(spec, &cm)?;
            for i in 0..dim {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * fd);
            }
        }
        // the coefficient Hessian is symmetric; average out FD noise
        let jac = 0.5 * (&jac + jac.transpose());
        let mut advanced = false;
        for _ in 0..12 {
            let mut shifted = jac.clone();
            for i in 0..dim {
                shifted[(i, i)] += mu;
            }
            if let Some(delta) = lu_solve(shifted, &g) {
                let mut lam = 1.0;
                for _ in 0..30 {
                    let cn = &c - lam * &delta;
                    let gn = frame.grad(spec, &cn)?;
                    let gn_norm = gn.norm();
                    if gn_norm < gnorm * (1.0 - 1e-4 * lam) || gn_norm <= tol {
                        c = cn;
                        g = gn;
                        gnorm = gn_norm;
                        advanced = true;
                        break;
                    }
                    lam *= 0.5;
                }
            }
            if advanced {
                mu = (mu * 0.25).max(0.0);
                break;
            }
            mu = if mu == 0.0 { 1e-8 * (1.0 + gnorm) } else { mu * 16.0 };
        }
        if !advanced {
            return Err(MinimaxError::NonConvergence {
                grad_norm: gnorm,
                steps: step,
            });
        }
    }
    if gnorm <= tol {
        Ok((c, 100))
    } else {
        Err(MinimaxError::NonConvergence {
            grad_norm: gnorm,
            steps: 100,
        })
    }
}

/// Full-space polish of a near-critical dual point. The side with bounded
/// second derivatives carries the Newton iteration: superlinear exponents
/// polish the primal system, sublinear exponents polish the dual gradient
/// itself (dense, 1D meshes).
fn polish_full(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    start: &DualPoint,
) -> Result<(DualPoint, usize), MinimaxError> {
    if spec.p().min(spec.q()) >= 1.0 {
        polish_primal(spec, solver, start)
    } else if solver.mesh().dim() == 1 {
        polish_dual_dense(spec, solver, start)
    } else {
        Err(MinimaxError::Unsupported(
            "sublinear polish needs a 1D mesh; 2D sublinear is out of scope".into(),
        ))
    }
}

/// Newton on F(u, v) = (−Δu − H_v, −Δv − H_u) from the recovered primal pair;
/// the final dual witness is ∇H(u, v), which is exactly critical for J when
/// (u, v) solves the discrete system.
fn polish_primal(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    start: &DualPoint,
) -> Result<(DualPoint, usize), MinimaxError> {
    let mesh = solver.mesh();
    let n = mesh.n_nodes();
    let (mut u, mut v) = recover_primal(spec, start)?;
    let residual = |u: &DiscreteField, v: &DiscreteField| -> (DVector<f64>, f64) {
        let lu = neg_laplacian(u);
        let lv = neg_laplacian(v);
        let mut r = DVector::zeros(2 * n);
        for i in 0..n {
            let (hu, hv) = spec.grad(u.values()[i], v.values()[i]);
            r[i] = lu.values()[i] - hv;
            r[n + i] = lv.values()[i] - hu;
        }
        let norm = r.norm() * mesh.weight().sqrt();
        (r, norm)
    };
    let (mut r, mut rnorm) = residual(&u, &v);
    let tol = 1e-11;
    let mut steps = 0;
    for step in 0..80 {
        if rnorm <= tol {
            break;
        }
        steps = step + 1;
        let delta = primal_direction(spec, solver, &u, &v, &r)?;
        let mut lam = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let mut un = u.clone();
            let mut vn = v.clone();
            for i in 0..n {
                un.values_mut()[i] -= lam * delta[i];
                vn.values_mut()[i] -= lam * delta[n + i];
            }
            let (rn, rn_norm) = residual(&un, &vn);
            if rn_norm < rnorm * (1.0 - 1e-4 * lam) || rn_norm <= tol {
                u = un;
                v = vn;
                r = rn;
                rnorm = rn_norm;
                advanced = true;
                break;
            }
            lam *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if rnorm > 1e-9 {
        return Err(MinimaxError::NonConvergence {
            grad_norm: rnorm,
            steps,
        });
    }
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    for i in 0..n {
        let (hu, hv) = spec.grad(u.values()[i], v.values()[i]);
        f[i] = hu;
        g[i] = hv;
    }
    Ok((
        DualPoint {
            f: DiscreteField::from_values(mesh, f)?,
            g: DiscreteField::from_values(mesh, g)?,
        },
        steps,
    ))
}

fn primal_direction(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    u: &DiscreteField,
    v: &DiscreteField,
    r: &DVector<f64>,
) -> Result<DVector<f64>, MinimaxError> {
    let mesh = solver.mesh();
    let n = mesh.n_nodes();
    let mut huu = vec![0.0; n];
    let mut huv = vec![0.0; n];
    let mut hvv = vec![0.0; n];
    for i in 0..n {
        let (a, b, c) = spec.hessian(u.values()[i], v.values()[i]);
        huu[i] = a;
        huv[i] = b;
        hvv[i] = c;
    }
    if mesh.dim() == 1 {
        let nn = mesh.n_per_axis();
        let inv_h2 = 1.0 / (mesh.h() * mesh.h());
        let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..nn {
            a[(i, i)] += 2.0 * inv_h2;
            a[(n + i, n + i)] += 2.0 * inv_h2;
            if i > 0 {
                a[(i, i - 1)] -= inv_h2;
                a[(n + i, n + i - 1)] -= inv_h2;
            }
            if i + 1 < nn {
                a[(i, i + 1)] -= inv_h2;
                a[(n + i, n + i + 1)] -= inv_h2;
            }
            a[(i, i)] -= huv[i];
            a[(i, n + i)] -= hvv[i];
            a[(n + i, i)] -= huu[i];
            a[(n + i, n + i)] -= huv[i];
        }
        lu_solve(a, r).ok_or(MinimaxError::NonConvergence {
            grad_norm: f64::INFINITY,
            steps: 0,
        })
    } else {
        let apply = |x: &DVector<f64>| -> DVector<f64> {
            let xu = DiscreteField::from_values(mesh, x.as_slice()[..n].to_vec()).unwrap();
            let xv = DiscreteField::from_values(mesh, x.as_slice()[n..].to_vec()).unwrap();
            let lxu = neg_laplacian(&xu);
            let lxv = neg_laplacian(&xv);
            let mut r1 = vec![0.0; n];
            let mut r2 = vec![0.0; n];
            for i in 0..n {
                r1[i] = lxu.values()[i] - huv[i] * xu.values()[i] - hvv[i] * xv.values()[i];
                r2[i] = lxv.values()[i] - huu[i] * xu.values()[i] - huv[i] * xv.values()[i];
            }
            let ar1 = solver
                .apply_a(&DiscreteField::from_values(mesh, r1).unwrap())
                .unwrap();
            let ar2 = solver
                .apply_a(&DiscreteField::from_values(mesh, r2).unwrap())
                .unwrap();
            let mut out = DVector::zeros(2 * n);
            for i in 0..n {
                out[i] = ar1.values()[i];
                out[n + i] = ar2.values()[i];
            }
            out
        };
        let ru = solver.apply_a(&DiscreteField::from_values(mesh, r.as_slice()[..n].to_vec())?)?;
        let rv = solver.apply_a(&DiscreteField::from_values(mesh, r.as_slice()[n..].to_vec())?)?;
        let mut rhs = DVector::zeros(2 * n);
        for i in 0..n {
            rhs[i] = ru.values()[i];
            rhs[n + i] = rv.values()[i];
        }
        gmres(apply, &rhs, 1e-12, 400).ok_or(MinimaxError::NonConvergence {
            grad_norm: f64::INFINITY,
            steps: 0,
        })
    }
}

/// Dense damped Newton on the full dual gradient; used for sublinear
/// exponents where H* is the smooth side.
fn polish_dual_dense(
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    start: &DualPoint,
) -> Result<(DualPoint, usize), MinimaxError> {
    let mesh = solver.mesh();
    let n = mesh.n_nodes();
    let a_dense = solver.dense_a();
    let mut point = start.clone();
    let grad = |p: &DualPoint| -> Result<(DVector<f64>, f64), MinimaxError> {
        let g = grad_j(spec, solver, p)?;
        let mut r = DVector::zeros(2 * n);
        for i in 0..n {
            r[i] = g.f.values()[i];
            r[n + i] = g.g.values()[i];
        }
        let norm = r.norm() * mesh.weight().sqrt();
        Ok((r, norm))
    };
    let (mut r, mut rnorm) = grad(&point)?;
    let tol = 1e-11;
    let mut steps = 0;
    for step in 0..80 {
        if rnorm <= tol {
            break;
        }
        steps = step + 1;
        // Jacobian [[diag(H*_uu), diag(H*_uv) − A], [diag(H*_uv) − A, diag(H*_vv)]]
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            let (huu, huv, hvv) =
                spec.conjugate_hessian(point.f.values()[i], point.g.values()[i])?;
            jac[(i, i)] = huu;
            jac[(i, n + i)] += huv;
            jac[(n + i, i)] += huv;
            jac[(n + i, n + i)] = hvv;
        }
        for i in 0..n {
            for j in 0..n {
                jac[(i, n + j)] -= a_dense[(i, j)];
                jac[(n + i, j)] -= a_dense[(i, j)];
            }
        }
        let delta = lu_solve(jac, &r).ok_or(MinimaxError::NonConvergence {
            grad_norm: rnorm,
            steps,
        })?;
        let mut lam = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let mut cand = point.clone();
            for i in 0..n {
                cand.f.values_mut()[i] -= lam * delta[i];
                cand.g.values_mut()[i] -= lam * delta[n + i];
            }
            let (rn, rn_norm) = grad(&cand)?;
            if rn_norm < rnorm * (1.0 - 1e-4 * lam) || rn_norm <= tol {
                point = cand;
                r = rn;
                rnorm = rn_norm;
                advanced = true;
                break;
            }
            lam *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if rnorm > 1e-9 {
        return Err(MinimaxError::NonConvergence {
            grad_norm: rnorm,
            steps,
        });
    }
    Ok((point, steps))
}

/// One linking surface: a (direction × t) grid of ambient coefficient points.
/// Directions come in antipodal pairs; only the even half evolves and the odd
/// half mirrors it, so oddness is preserved bitwise. The t = 0 column is the
/// origin and the t = ρ column is pinned boundary data.
struct Surface {
    nt: usize,
    n_dirs: usize,
    points: Vec<DVector<f64>>,
    j: Vec<f64>,
    step: Vec<f64>,
}

impl Surface {
    fn build(
        frame: &CoeffFrame,
        spec: &HamiltonianSpec,
        dirs: &[SubspacePoint],
        rho: f64,
        k: f64,
        l: f64,
        nt: usize,
    ) -> Result<Self, MinimaxError> {
        let n_dirs = dirs.len();
        let mut points = Vec::with_capacity(n_dirs * nt);
        for dir in dirs {
            let base = dir.ambient(frame)?;
            for it in 0..nt {
                let t = rho * it as f64 / (nt - 1) as f64;
                let mut c = base.clone();
                scale_coeffs(&mut c, frame.m, t, k, l);
                points.push(c);
            }
        }
        let j = points
            .par_iter()
            .map(|c| frame.j_value(spec, c))
            .collect::<Result<Vec<_>, _>>()?;
        let step = vec![1.0; points.len()];
        Ok(Surface {
            nt,
            n_dirs,
            points,
            j,
            step,
        })
    }

    fn idx(&self, dir: usize, it: usize) -> usize {
        dir * self.nt + it
    }

    /// interior indices of the evolving (even-direction) half
    fn half_interior(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for dir in (0..self.n_dirs).step_by(2) {
            for it in 1..self.nt - 1 {
                out.push(self.idx(dir, it));
            }
        }
        out
    }

    /// copy the evolved half onto its antipodal partners
    fn mirror(&mut self) {
        for dir in (0..self.n_dirs).step_by(2) {
            for it in 0..self.nt {
                let src = self.idx(dir, it);
                let dst = self.idx(dir + 1, it);
                self.points[dst] = -&self.points[src];
                self.j[dst] = self.j[src];
                self.step[dst] = self.step[src];
            }
        }
    }

    fn extremum(&self, maximize: bool) -> (usize, f64) {
        let mut best = if maximize {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        let mut arg = 0;
        for (i, &v) in self.j.iter().enumerate() {
            if (maximize && v > best) || (!maximize && v < best) {
                best = v;
                arg = i;
            }
        }
        (arg, best)
    }
}

/// One Armijo line-search step along ±grad; returns the new value if moved.
fn flow_step(
    frame: &CoeffFrame,
    spec: &HamiltonianSpec,
    c: &mut DVector<f64>,
    j_val: &mut f64,
    step: &mut f64,
    ascend: bool,
) -> Result<bool, MinimaxError> {
    let g = frame.grad(spec, c)?;
    let gn2 = g.norm_squared();
    if gn2.sqrt() <= 1e-12 * (1.0 + j_val.abs()) {
        return Ok(false);
    }
    let sign = if ascend { 1.0 } else { -1.0 };
    let mut s = *step;
    for _ in 0..30 {
        let cand = &*c + (sign * s) * &g;
        let jn = frame.j_value(spec, &cand)?;
        let gain = sign * (jn - *j_val);
        if gain >= 1e-4 * s * gn2 {
            *c = cand;
            *j_val = jn;
            *step = (s * 1.5).min(1e4);
            return Ok(true);
        }
        s *= 0.5;
    }
    *step = (s * 4.0).max(1e-14);
    Ok(false)
}

/// Fountain construction for one superlinear level: descend the interior of
/// the sampled ball B^{2n+1}_ρ with the boundary pinned, track the running
/// max, refine its argmax in the ambient frame, then polish in the full space.
pub fn fountain_search(
    config: &LinkingConfig,
    basis: &GalerkinBasis,
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    params: &SearchParams,
) -> Result<MinimaxOutcome, MinimaxError> {
    debug_assert_eq!(config.regime, Regime::Superlinear);
    let link_dim = 2 * config.n + 1;
    let ambient = (4 * link_dim).min(basis.m_max());
    let frame = CoeffFrame::new(basis, ambient)?;

    let mut dirs_count = params.dirs_per_dim * link_dim;
    let mut nt = params.t_samples;
    let mut total_sweeps = 0usize;
    let mut best_failure: Option<(f64, f64)> = None;
    for doubling in 0..=params.max_doublings {
        let dirs = sphere_sample(
            SubspaceSpec::Fn { n: link_dim },
            basis,
            spec,
            dirs_count,
            params.seed ^ (0x71 + doubling as u64),
        )?;
        let mut surface = Surface::build(&frame, spec, &dirs, config.rho_n, config.k, config.l, nt)?;
        let interior = surface.half_interior();
        let mut history: Vec<f64> = Vec::new();
        for sweep in 0..params.max_sweeps {
            total_sweeps = sweep + 1;
            let updates: Vec<(usize, DVector<f64>, f64, f64)> = interior
                .par_iter()
                .map(|&i| {
                    let mut c = surface.points[i].clone();
                    let mut jv = surface.j[i];
                    let mut st = surface.step[i];
                    flow_step(&frame, spec, &mut c, &mut jv, &mut st, false).map(|_| (i, c, jv, st))
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (i, c, jv, st) in updates {
                surface.points[i] = c;
                surface.j[i] = jv;
                surface.step[i] = st;
            }
            surface.mirror();
            let (_, max_j) = surface.extremum(true);
            history.push(max_j);
            let w = params.stall_window;
            if history.len() > w {
                let past = history[history.len() - 1 - w];
                if past - max_j <= 1e-10 * (1.0 + max_j.abs()) {
                    break;
                }
            }
        }
        let (argmax, _) = surface.extremum(true);
        match newton_refine_coeffs(&frame, spec, surface.points[argmax].clone()) {
            Ok((c, _)) => {
                let coarse = frame.realize(&c);
                if coarse.x_norm(spec)? < 1e-8 {
                    best_failure = Some((0.0, f64::NAN));
                } else {
                    let (witness, _) = polish_full(spec, solver, &coarse)?;
                    return outcome_from(spec, solver, witness, total_sweeps);
                }
            }
            Err(MinimaxError::NonConvergence { grad_norm, .. }) => {
                best_failure = Some((surface.j[argmax], grad_norm));
            }
            Err(other) => return Err(other),
        }
        dirs_count *= 2;
        nt = 2 * nt - 1;
    }
    let (level, grad_norm) = best_failure.unwrap_or((f64::NAN, f64::NAN));
    Err(MinimaxError::DeformationStall { level, grad_norm })
}

/// Dual-fountain construction for one sublinear level pair (n, m): ascend the
/// lowest stratum of the sampled ball B^{n,m}_ρ inside G_m with the boundary
/// pinned, track the running min, refine its argmin, polish, and verify the
/// level bracket [d̃_n, 0).
pub fn dual_fountain_search(
    config: &LinkingConfig,
    basis: &GalerkinBasis,
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    params: &SearchParams,
) -> Result<MinimaxOutcome, MinimaxError> {
    debug_assert_eq!(config.regime, Regime::Sublinear);
    let n = config.n;
    let m = config.m.ok_or_else(|| {
        MinimaxError::Unsupported("dual fountain needs the Galerkin dimension m".into())
    })?;
    let frame = CoeffFrame::new(basis, m)?;
    let bounds = level_bounds(config, basis, spec, params)?;
    let d_tilde = bounds.ball_inf.unwrap_or(f64::NEG_INFINITY);
    let bracket_lo = d_tilde - 0.5 * d_tilde.abs();

    let sub = SubspaceSpec::GnM { n, m };
    let mut dirs_count = params.dirs_per_dim * sub.dim(basis.m_max()) / 2;
    let mut nt = params.t_samples;
    let mut total_sweeps = 0usize;
    let mut best_failure: Option<(f64, f64)> = None;
    for doubling in 0..=params.max_doublings {
        let dirs = sphere_sample(sub, basis, spec, dirs_count, params.seed ^ (0x81 + doubling as u64))?;
        let mut surface = Surface::build(&frame, spec, &dirs, config.rho_n, config.k, config.l, nt)?;
        let interior = surface.half_interior();
        let mut history: Vec<f64> = Vec::new();
        for sweep in 0..params.max_sweeps {
            total_sweeps = sweep + 1;
            // ascend only the lowest stratum; the rest of the surface stands
            let mut order: Vec<usize> = interior.clone();
            order.sort_by(|&a, &b| surface.j[a].partial_cmp(&surface.j[b]).unwrap());
            let active = &order[..order.len().div_ceil(8)];
            let updates: Vec<(usize, DVector<f64>, f64, f64)> = active
                .par_iter()
                .map(|&i| {
                    let mut c = surface.points[i].clone();
                    let mut jv = surface.j[i];
                    let mut st = surface.step[i];
                    flow_step(&frame, spec, &mut c, &mut jv, &mut st, true).map(|_| (i, c, jv, st))
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (i, c, jv, st) in updates {
                surface.points[i] = c;
                surface.j[i] = jv;
                surface.step[i] = st;
            }
            surface.mirror();
            let (_, min_j) = surface.extremum(false);
            history.push(min_j);
            let w = params.stall_window;
            if history.len() > w {
                let past = history[history.len() - 1 - w];
                if min_j - past <= 1e-10 * (1.0 + min_j.abs()) {
                    break;
                }
            }
        }
        let (argmin, _) = surface.extremum(false);
        match newton_refine_coeffs(&frame, spec, surface.points[argmin].clone()) {
            Ok((c, _)) => {
                let coarse = frame.realize(&c);
                let coarse_level = frame.j_value(spec, &c)?;
                if coarse.x_norm(spec)? < 1e-8 || coarse_level >= 0.0 {
                    best_failure = Some((coarse_level, f64::NAN));
                } else {
                    let (witness, _) = polish_full(spec, solver, &coarse)?;
                    let outcome = outcome_from(spec, solver, witness, total_sweeps)?;
                    if outcome.level_value < bracket_lo || outcome.level_value >= 0.0 {
                        return Err(MinimaxError::LevelOutOfBracket {
                            level: outcome.level_value,
                            lower: bracket_lo,
                            upper: 0.0,
                        });
                    }
                    return Ok(outcome);
                }
            }
            Err(MinimaxError::NonConvergence { grad_norm, .. }) => {
                best_failure = Some((surface.j[argmin], grad_norm));
            }
            Err(other) => return Err(other),
        }
        dirs_count *= 2;
        nt = 2 * nt - 1;
    }
    let (level, grad_norm) = best_failure.unwrap_or((f64::NAN, f64::NAN));
    Err(MinimaxError::DeformationStall { level, grad_norm })
}

/// Everything a caller needs to report one solved level.
#[derive(Debug)]
pub struct LevelReport {
    pub record: SolutionRecord,
    pub config: LinkingConfig,
    pub bounds: LevelBounds,
    pub sweeps: usize,
    pub converged: bool,
}

/// Plan, search, and certify one superlinear level.
pub fn solve_superlinear_level(
    spec: &HamiltonianSpec,
    basis: &GalerkinBasis,
    solver: &LaplacianSolver,
    n: usize,
    growth: &GrowthConstants,
    params: &SearchParams,
) -> Result<LevelReport, MinimaxError> {
    let config = plan_level(spec, basis, Regime::Superlinear, n, None, growth, params)?;
    let bounds = level_bounds(&config, basis, spec, params)?;
    let outcome = fountain_search(&config, basis, spec, solver, params)?;
    let m = (4 * (2 * n + 1)).min(basis.m_max());
    let record = SolutionRecord::assemble(
        spec,
        solver,
        outcome.witness.clone(),
        m,
        n,
        Regime::Superlinear,
    )?;
    Ok(LevelReport {
        converged: outcome.converged,
        record,
        config,
        bounds,
        sweeps: outcome.iterations,
    })
}

/// Plan, search, and certify one sublinear level pair (n, m).
pub fn solve_sublinear_level(
    spec: &HamiltonianSpec,
    basis: &GalerkinBasis,
    solver: &LaplacianSolver,
    n: usize,
    m: usize,
    growth: &GrowthConstants,
    params: &SearchParams,
) -> Result<LevelReport, MinimaxError> {
    let config = plan_level(spec, basis, Regime::Sublinear, n, Some(m), growth, params)?;
    let bounds = level_bounds(&config, basis, spec, params)?;
    let outcome = dual_fountain_search(&config, basis, spec, solver, params)?;
    let record =
        SolutionRecord::assemble(spec, solver, outcome.witness.clone(), m, n, Regime::Sublinear)?;
    Ok(LevelReport {
        converged: outcome.converged,
        record,
        config,
        bounds,
        sweeps: outcome.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::calibrate_growth;
    use crate::grid::Mesh;
    use approx::assert_relative_eq;

    #[test]
    fn regime_detection_and_rejection() {
        assert_eq!(regime_for(3.0, 3.0).unwrap(), Regime::Superlinear);
        assert_eq!(regime_for(0.5, 0.5).unwrap(), Regime::Sublinear);
        assert!(matches!(
            regime_for(1.0, 1.0),
            Err(MinimaxError::RegimeMismatch { .. })
        ));
        // pq = 1 off the diagonal
        assert!(matches!(
            regime_for(2.0, 0.5),
            Err(MinimaxError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn exponent_choice_frozen_cases() {
        let (k, l) = choose_exponents(3.0, 3.0, Regime::Superlinear).unwrap();
        assert_relative_eq!(k, 1.5, epsilon = 1e-12);
        assert_relative_eq!(l, 1.5, epsilon = 1e-12);
        let (k, l) = choose_exponents(0.5, 0.5, Regime::Sublinear).unwrap();
        assert_relative_eq!(k, 1.5, epsilon = 1e-12);
        assert_relative_eq!(l, 1.5, epsilon = 1e-12);
        assert!(choose_exponents(3.0, 3.0, Regime::Sublinear).is_err());
    }

    #[test]
    fn exponent_choice_satisfies_strict_inequalities() {
        for (p, q) in [(2.0, 4.0), (3.0, 3.0), (1.2, 5.0)] {
            let (k, l) = choose_exponents(p, q, Regime::Superlinear).unwrap();
            assert!(k > 1.0 && l > 1.0);
            assert!(p / (p + 1.0) > k / (k + l));
            assert!(q / (q + 1.0) > l / (k + l));
        }
        for (p, q) in [(0.5, 0.5), (0.3, 0.9), (0.8, 0.2)] {
            let (k, l) = choose_exponents(p, q, Regime::Sublinear).unwrap();
            assert!(k > 1.0 && l > 1.0);
            assert!(p / (p + 1.0) < k / (k + l));
            assert!(q / (q + 1.0) < l / (k + l));
        }
    }

    #[test]
    fn scaled_embed_basics() {
        let mesh = Mesh::new_1d(31).unwrap();
        let f = DiscreteField::from_fn(mesh, |x, _| x);
        let g = DiscreteField::from_fn(mesh, |x, _| 1.0 - x);
        let z = scaled_embed(0.0, &f, &g, 1.5, 2.5);
        assert_eq!(z.f.max_abs(), 0.0);
        assert_eq!(z.g.max_abs(), 0.0);
        let o = scaled_embed(1.0, &f, &g, 1.5, 2.5);
        assert_eq!(o.f.values(), f.values());
        let a = scaled_embed(2.0, &f, &g, 1.5, 2.5);
        let b = scaled_embed(2.0, &f.scaled(-1.0), &g.scaled(-1.0), 1.5, 2.5);
        assert_eq!(a.f.values(), b.negated().f.values());
    }

    #[test]
    fn sphere_samples_are_unit_and_antipodal() {
        let mesh = Mesh::new_1d(63).unwrap();
        let basis = GalerkinBasis::build(mesh, 12).unwrap();
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let pts = sphere_sample(SubspaceSpec::Fn { n: 3 }, &basis, &spec, 16, 1).unwrap();
        assert_eq!(pts.len(), 16);
        for pair in pts.chunks(2) {
            for c in pair[0].coeffs.iter().zip(&pair[1].coeffs) {
                assert_eq!(*c.0, -c.1);
            }
            let norm = pair[0].realize(&basis).unwrap().x_norm(&spec).unwrap();
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
        }
        // a single direction pair
        let two = sphere_sample(SubspaceSpec::Fn { n: 1 }, &basis, &spec, 2, 5).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].coeffs.len(), 1);
    }

    #[test]
    fn frame_j_matches_field_evaluation() {
        let mesh = Mesh::new_1d(63).unwrap();
        let basis = GalerkinBasis::build(mesh, 10).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let frame = CoeffFrame::new(&basis, 10).unwrap();
        let mut c = DVector::zeros(20);
        c[0] = 0.8;
        c[3] = -0.4;
        c[10] = 0.5;
        c[12] = 1.1;
        let point = frame.realize(&c);
        let j_frame = frame.j_value(&spec, &c).unwrap();
        let j_field = eval_j(&spec, &solver, &point).unwrap();
        assert_relative_eq!(j_frame, j_field, epsilon = 1e-10);
        // projection of a span point is exact
        let back = frame.project(&point).unwrap();
        assert!((&back - &c).norm() < 1e-10);
        // coefficient gradient matches the projected field gradient
        let g_frame = frame.grad(&spec, &c).unwrap();
        let g_field = grad_j(&spec, &solver, &point).unwrap();
        for j in 1..=10 {
            let want_a = crate::grid::inner(&g_field.f, &basis.dual_mode(j)).unwrap();
            assert_relative_eq!(g_frame[j - 1], want_a, epsilon = 1e-9);
        }
    }

    #[test]
    fn schedule_radii_ordered_and_sign_conditions_hold() {
        let mesh = Mesh::new_1d(127).unwrap();
        let basis = GalerkinBasis::build(mesh, 24).unwrap();
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let growth = calibrate_growth(&spec, 2000, 5.0, 2).unwrap();
        let params = SearchParams::default();
        let mut last_r = 0.0;
        for n in [1usize, 2, 3] {
            let cfg =
                plan_level(&spec, &basis, Regime::Superlinear, n, None, &growth, &params).unwrap();
            assert!(cfg.r_n < cfg.rho_n, "r {} rho {}", cfg.r_n, cfg.rho_n);
            assert!(cfg.r_n >= last_r, "r_n not nondecreasing");
            last_r = cfg.r_n;
        }

        let spec = HamiltonianSpec::power_family(0.5, 0.5).unwrap();
        let growth = calibrate_growth(&spec, 2000, 5.0, 2).unwrap();
        let mut last_rho = f64::INFINITY;
        for n in [2usize, 3, 4, 5] {
            let cfg = plan_level(
                &spec,
                &basis,
                Regime::Sublinear,
                n,
                Some(2 * n + 4),
                &growth,
                &params,
            )
            .unwrap();
            assert!(cfg.r_n < cfg.rho_n);
            assert!(cfg.rho_n < last_rho, "rho_n not decreasing");
            last_rho = cfg.rho_n;
        }
    }

    #[test]
    fn sublinear_bounds_bracket_zero_correctly() {
        let mesh = Mesh::new_1d(127).unwrap();
        let basis = GalerkinBasis::build(mesh, 24).unwrap();
        let spec = HamiltonianSpec::power_family(0.5, 0.5).unwrap();
        let growth = calibrate_growth(&spec, 2000, 5.0, 2).unwrap();
        let params = SearchParams::default();
        let mut last_ball = f64::NEG_INFINITY;
        for n in [2usize, 4, 6] {
            let cfg = plan_level(
                &spec,
                &basis,
                Regime::Sublinear,
                n,
                Some(2 * n + 4),
                &growth,
                &params,
            )
            .unwrap();
            let b = level_bounds(&cfg, &basis, &spec, &params).unwrap();
            assert!(b.lower_sphere > 0.0, "ã_{n} = {}", b.lower_sphere);
            assert!(b.upper_sphere < 0.0, "b̃_{n} = {}", b.upper_sphere);
            let d = b.ball_inf.unwrap();
            assert!(d <= b.upper_sphere);
            assert!(d >= last_ball, "d̃ not increasing toward 0");
            last_ball = d;
        }
    }

    #[test]
    fn superlinear_sphere_bound_grows() {
        let mesh = Mesh::new_1d(127).unwrap();
        let basis = GalerkinBasis::build(mesh, 24).unwrap();
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let growth = calibrate_growth(&spec, 2000, 5.0, 2).unwrap();
        let params = SearchParams::default();
        let mut a_prev = 0.0;
        for n in [1usize, 3] {
            let cfg =
                plan_level(&spec, &basis, Regime::Superlinear, n, None, &growth, &params).unwrap();
            let b = level_bounds(&cfg, &basis, &spec, &params).unwrap();
            assert!(b.lower_sphere > 0.0, "a_{n} = {}", b.lower_sphere);
            assert!(b.upper_sphere <= 0.0, "b_{n} = {}", b.upper_sphere);
            assert!(b.lower_sphere > a_prev, "a_n not increasing");
            a_prev = b.lower_sphere;
        }
    }

    #[test]
    fn newton_refine_fixes_the_origin() {
        let mesh = Mesh::new_1d(63).unwrap();
        let basis = GalerkinBasis::build(mesh, 12).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let outcome =
            newton_refine(&DualPoint::zeros(mesh), 8, &basis, &spec, &solver).unwrap();
        assert_eq!(outcome.level_value, 0.0);
        assert!(outcome.converged);
        assert_eq!(outcome.iterations, 0);
    }

    #[test]
    fn newton_refine_certifies_the_oracle_dual_image() {
        let shot = crate::oracle::shoot_1d(3.0, 3.0, 0, (1.0, 60.0)).unwrap();
        let mesh = Mesh::new_1d(255).unwrap();
        let basis = GalerkinBasis::build(mesh, 24).unwrap();
        let solver = LaplacianSolver::new(mesh);
        let spec = HamiltonianSpec::power_family(3.0, 3.0).unwrap();
        let (u, v) = shot.sample_on(mesh).unwrap();
        let mut f = DiscreteField::zeros(mesh);
        let mut g = DiscreteField::zeros(mesh);
        for i in 0..mesh.n_nodes() {
            let (hu, hv) = spec.grad(u.values()[i], v.values()[i]);
            f.values_mut()[i] = hu;
            g.values_mut()[i] = hv;
        }
        let candidate = DualPoint { f, g };
        let outcome = newton_refine(&candidate, 24, &basis, &spec, &solver).unwrap();
        assert!(outcome.iterations <= 5, "took {} steps", outcome.iterations);
        assert!(
            (outcome.level_value - shot.energy_i).abs() <= 1e-3 * (1.0 + shot.energy_i),
            "J = {} vs oracle I = {}",
            outcome.level_value,
            shot.energy_i
        );
    }
}
