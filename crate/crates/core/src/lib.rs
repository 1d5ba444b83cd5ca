//! Multiple solutions of Hamiltonian elliptic systems
//!   −Δu = H_v(u, v), −Δv = H_u(u, v), u = v = 0 on ∂Ω
//! through the dual variational method: the strictly convex even density H is
//! replaced by its Legendre–Fenchel conjugate, the dual functional
//! J(f, g) = ∫ H*(f, g) − ∫ g A f is minimax-searched over a biorthogonal
//! Galerkin decomposition, and every critical point maps back to a solution
//! via (u, v) = ∇H*(f, g) with I(u, v) = J(f, g).
//!
//! The superlinear branch produces solutions with energies growing in the
//! level index; the sublinear branch produces negative energies increasing
//! toward zero. An oracle suite (shooting, direct Newton, grid conjugation)
//! certifies both pipelines independently.

pub mod conjugate;
pub mod functional;
pub mod galerkin;
pub mod grid;
mod linalg;
pub mod minimax;
pub mod oracle;

pub use conjugate::{
    calibrate_growth, ConjugateError, ConjugateValue, GrowthConstants, Hamiltonian,
    HamiltonianSpec,
};
pub use functional::{
    energy_identity_gap, eval_i, eval_j, grad_j, pde_residual, recover_primal, DualPoint,
    FunctionalError, RecordSummary, Regime, SolutionRecord,
};
pub use galerkin::{
    gap_constants, positivity_constant, project, GalerkinBasis, GalerkinError, GapConstants,
    SubspaceSpec,
};
pub use grid::{
    fields_to_csv, inner, neg_laplacian, DiscreteField, GridError, LaplacianSolver, Mesh,
};
pub use minimax::{
    choose_exponents, dual_fountain_search, fountain_search, level_bounds, newton_refine,
    plan_level, regime_for, scaled_embed, solve_sublinear_level, solve_superlinear_level,
    sphere_sample, CoeffFrame, LevelBounds, LevelReport, LinkingConfig, MinimaxError,
    MinimaxOutcome, SearchParams, SubspacePoint,
};
pub use oracle::{brute_force_conjugate, newton_primal, shoot_1d, OracleError, ShootingResult};
