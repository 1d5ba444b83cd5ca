//! The `verify` subcommand: every module invariant suite in one pass with a
//! JSON report. Exit 0 only when all groups pass.

use crate::config::Prepared;
use anyhow::Result;
use hamdual::{
    brute_force_conjugate, calibrate_growth, energy_identity_gap, eval_i, eval_j, gap_constants,
    grad_j, inner, neg_laplacian, positivity_constant, recover_primal, DiscreteField, DualPoint,
    GalerkinBasis, Hamiltonian, HamiltonianSpec, LaplacianSolver, Mesh, Regime,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct Group {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub groups: Vec<Group>,
}

fn group(groups: &mut Vec<Group>, name: &str, outcome: Result<String, String>) {
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    println!("{} {name} — {detail}", if passed { "PASS" } else { "FAIL" });
    groups.push(Group {
        name: name.to_string(),
        passed,
        detail,
    });
}

/// Run all invariant groups; returns the process exit code.
pub fn run(prepared: &Prepared, out_dir: &Path, seed: u64) -> Result<u8> {
    let mut groups = Vec::new();

    // 1. the hamiltonian validator itself
    let spec = match prepared.build_spec() {
        Ok(spec) => {
            group(
                &mut groups,
                "hamiltonian_validator",
                Ok("sampled convexity, evenness, and growth sandwich hold".into()),
            );
            Some(spec)
        }
        Err(e) => {
            group(&mut groups, "hamiltonian_validator", Err(e.to_string()));
            None
        }
    };

    if let Some(spec) = &spec {
        conjugate_groups(&mut groups, spec, seed);
        let mesh = prepared.mesh;
        grid_groups(&mut groups, mesh);
        let solver = LaplacianSolver::new(mesh);
        let m_max = 40.min(mesh.n_nodes() / 2).max(8);
        match GalerkinBasis::build(mesh, m_max) {
            Ok(basis) => {
                decomposition_groups(&mut groups, spec, &basis, &solver, seed);
            }
            Err(e) => group(&mut groups, "basis_build", Err(e.to_string())),
        }
        functional_groups(&mut groups, spec, &solver, mesh, prepared.regime, seed);
    }

    let passed = groups.iter().all(|g| g.passed);
    let report = VerifyReport { passed, groups };
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("verify_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    if !passed {
        let first = report.groups.iter().find(|g| !g.passed).unwrap();
        eprintln!("invariant failure: {} — {}", first.name, first.detail);
        return Ok(1);
    }
    println!("verify: all {} invariant groups passed", report.groups.len());
    Ok(0)
}

fn conjugate_groups(groups: &mut Vec<Group>, spec: &HamiltonianSpec, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);

    // Fenchel–Young equality at the maximizer
    let mut worst: f64 = 0.0;
    let mut failed = None;
    for _ in 0..200 {
        let f = rng.gen_range(-5.0..5.0);
        let g = rng.gen_range(-5.0..5.0);
        match spec.conjugate(f, g) {
            Ok(c) => {
                let res =
                    (f * c.argmax_u + g * c.argmax_v - spec.eval(c.argmax_u, c.argmax_v) - c.value)
                        .abs();
                worst = worst.max(res);
            }
            Err(e) => failed = Some(e.to_string()),
        }
    }
    group(
        groups,
        "conjugate_fenchel_young",
        match failed {
            Some(e) => Err(e),
            None if worst <= 1e-9 => Ok(format!("max residual {worst:.2e}")),
            None => Err(format!("max residual {worst:.2e} above 1e-9")),
        },
    );

    // pointwise agreement with the grid oracle
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = rng.gen_range(-5.0..5.0);
        let g = rng.gen_range(-5.0..5.0);
        let newton = spec.conjugate(f, g).map(|c| c.value);
        let grid = brute_force_conjugate(spec, f, g, 8.0, 1e-4);
        match (newton, grid) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            _ => worst = f64::INFINITY,
        }
    }
    group(
        groups,
        "conjugate_grid_oracle",
        if worst <= 1e-5 {
            Ok(format!("max deviation {worst:.2e}"))
        } else {
            Err(format!("max deviation {worst:.2e} above 1e-5"))
        },
    );

    // involution H** = H on a grid
    let mut worst: f64 = 0.0;
    let side = 21;
    'outer: for i in 0..side {
        for j in 0..side {
            let u = -3.0 + 6.0 * i as f64 / (side - 1) as f64;
            let v = -3.0 + 6.0 * j as f64 / (side - 1) as f64;
            match spec.biconjugate(u, v) {
                Ok(hh) => worst = worst.max((hh - spec.eval(u, v)).abs()),
                Err(_) => {
                    worst = f64::INFINITY;
                    break 'outer;
                }
            }
        }
    }
    group(
        groups,
        "conjugate_involution",
        if worst <= 1e-6 {
            Ok(format!("max |H** - H| {worst:.2e} on the sample grid"))
        } else {
            Err(format!("max |H** - H| {worst:.2e} above 1e-6"))
        },
    );

    // evenness of H* is exact
    let mut exact = true;
    for _ in 0..100 {
        let f = rng.gen_range(-4.0..4.0);
        let g = rng.gen_range(-4.0..4.0);
        let a = spec.conjugate(f, g).map(|c| c.value).unwrap_or(f64::NAN);
        let b = spec.conjugate(-f, -g).map(|c| c.value).unwrap_or(f64::NAN);
        if a.to_bits() != b.to_bits() && (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
            exact = false;
        }
    }
    group(
        groups,
        "conjugate_evenness",
        if exact {
            Ok("H*(-f, -g) = H*(f, g) on samples".into())
        } else {
            Err("evenness violated".into())
        },
    );

    // gradient of H vs central differences
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = rng.gen_range(-3.0..3.0);
        let v = rng.gen_range(-3.0..3.0);
        let (hu, hv) = spec.grad(u, v);
        let fd_u = (spec.eval(u + h, v) - spec.eval(u - h, v)) / (2.0 * h);
        let fd_v = (spec.eval(u, v + h) - spec.eval(u, v - h)) / (2.0 * h);
        let scale = 1.0 + hu.abs() + hv.abs();
        worst = worst.max(((hu - fd_u).abs() + (hv - fd_v).abs()) / scale);
    }
    group(
        groups,
        "grad_h_finite_difference",
        if worst <= 1e-6 {
            Ok(format!("max relative deviation {worst:.2e}"))
        } else {
            Err(format!("max relative deviation {worst:.2e} above 1e-6"))
        },
    );

    // ∇H* inverts ∇H and matches differences of H*
    let mut worst_inv: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let hfd = 1e-5;
    for _ in 0..100 {
        let f = rng.gen_range(-5.0..5.0);
        let g = rng.gen_range(-5.0..5.0);
        if let Ok((u, v)) = spec.grad_conjugate(f, g) {
            let (bf, bg) = spec.grad(u, v);
            worst_inv =
                worst_inv.max(((bf - f).abs() + (bg - g).abs()) / (1.0 + f.abs() + g.abs()));
        }
        let center = spec.grad_conjugate(f, g);
        let fp = spec.conjugate(f + hfd, g).map(|c| c.value);
        let fm = spec.conjugate(f - hfd, g).map(|c| c.value);
        if let (Ok((du, _)), Ok(a), Ok(b)) = (center, fp, fm) {
            let fd = (a - b) / (2.0 * hfd);
            worst_fd = worst_fd.max((du - fd).abs() / (1.0 + du.abs()));
        }
    }
    group(
        groups,
        "grad_conjugate_checks",
        if worst_inv <= 1e-8 && worst_fd <= 1e-5 {
            Ok(format!(
                "inversion {worst_inv:.2e}, finite differences {worst_fd:.2e}"
            ))
        } else {
            Err(format!(
                "inversion {worst_inv:.2e} (limit 1e-8), finite differences {worst_fd:.2e} (limit 1e-5)"
            ))
        },
    );

    // growth sandwich with calibrated constants
    let res = calibrate_growth(spec, 10_000, 5.0, seed ^ 0x12).map(|c| {
        let ok = c.lower > 0.0 && c.upper.is_finite() && c.lower <= c.upper;
        (c, ok)
    });
    group(
        groups,
        "conjugate_growth_sandwich",
        match res {
            Ok((c, true)) => Ok(format!("A1 {:.6e}, A2 {:.6e}", c.lower, c.upper)),
            Ok((c, false)) => Err(format!("degenerate constants A1 {} A2 {}", c.lower, c.upper)),
            Err(e) => Err(e.to_string()),
        },
    );
}

fn grid_groups(groups: &mut Vec<Group>, mesh: Mesh) {
    let solver = LaplacianSolver::new(mesh);
    let sine = if mesh.dim() == 1 {
        DiscreteField::from_fn(mesh, |x, _| (PI * x).sin())
    } else {
        DiscreteField::from_fn(mesh, |x, y| (PI * x).sin() * (PI * y).sin())
    };
    let lam = if mesh.dim() == 1 {
        PI * PI
    } else {
        2.0 * PI * PI
    };

    let w = solver.apply_a(&sine).unwrap();
    let eig_err = w
        .sub(&sine.scaled(1.0 / lam))
        .unwrap()
        .max_abs();
    let probe = DiscreteField::from_fn(mesh, |x, y| x * (1.0 - x) * (1.0 + 0.3 * y));
    let rt_err = solver
        .apply_a(&neg_laplacian(&probe))
        .unwrap()
        .sub(&probe)
        .unwrap()
        .max_abs();
    let pos = solver
        .apply_a(&DiscreteField::from_fn(mesh, |_, _| 1.0))
        .unwrap();
    let monotone = pos.values().iter().all(|&v| v >= 0.0);
    let h2 = mesh.h() * mesh.h();
    group(
        groups,
        "laplacian_inverse",
        if eig_err < 20.0 * h2 && rt_err < 1e-10 && monotone {
            Ok(format!(
                "eigenpair error {eig_err:.2e}, inverse round trip {rt_err:.2e}, monotone"
            ))
        } else {
            Err(format!(
                "eigenpair error {eig_err:.2e}, round trip {rt_err:.2e}, monotone {monotone}"
            ))
        },
    );

    let a = DiscreteField::from_fn(mesh, |x, y| (2.0 * PI * x).sin() + 0.1 * y);
    let b = DiscreteField::from_fn(mesh, |x, y| x * x * (1.0 - x) + 0.2 * y * (1.0 - y));
    let sym = (inner(&a, &solver.apply_a(&b).unwrap()).unwrap()
        - inner(&solver.apply_a(&a).unwrap(), &b).unwrap())
    .abs();
    let l2 = sine.lp_norm(2.0).unwrap();
    let l2_expect = if mesh.dim() == 1 { 0.5_f64.sqrt() } else { 0.5 };
    let homog = (sine.scaled(-3.0).lp_norm(3.0).unwrap() - 3.0 * sine.lp_norm(3.0).unwrap()).abs();
    group(
        groups,
        "quadrature_and_self_adjointness",
        if sym < 1e-10 && (l2 - l2_expect).abs() < 1e-12 && homog < 1e-13 {
            Ok(format!(
                "self-adjointness {sym:.2e}, sine L2 defect {:.2e}",
                (l2 - l2_expect).abs()
            ))
        } else {
            Err(format!(
                "self-adjointness {sym:.2e}, sine L2 defect {:.2e}, homogeneity {homog:.2e}",
                (l2 - l2_expect).abs()
            ))
        },
    );
}

fn decomposition_groups(
    groups: &mut Vec<Group>,
    spec: &HamiltonianSpec,
    basis: &GalerkinBasis,
    solver: &LaplacianSolver,
    seed: u64,
) {
    // biorthogonality matrix against the identity
    let mut worst: f64 = 0.0;
    for j in 1..=basis.m_max() {
        let fj = basis.dual_mode(j);
        for k in 1..=basis.m_max() {
            let agk = solver.apply_a(basis.mode(k)).unwrap();
            let val = inner(&fj, &agk).unwrap();
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((val - target).abs());
        }
    }
    group(
        groups,
        "biorthogonality",
        if worst < 1e-9 {
            Ok(format!("max deviation {worst:.2e} over {} modes", basis.m_max()))
        } else {
            Err(format!("max deviation {worst:.2e} above 1e-9"))
        },
    );

    // eigen-residuals of the stencil
    let mut worst: f64 = 0.0;
    for j in 1..=basis.m_max() {
        let lhs = neg_laplacian(basis.mode(j));
        let rhs = basis.mode(j).scaled(basis.lambda(j));
        worst = worst.max(lhs.sub(&rhs).unwrap().max_abs() / rhs.max_abs());
    }
    group(
        groups,
        "eigen_residuals",
        if worst < 1e-8 {
            Ok(format!("max relative residual {worst:.2e}"))
        } else {
            Err(format!("max relative residual {worst:.2e} above 1e-8"))
        },
    );

    // gap constants: decay plus the L² closed form
    let (p, q) = (spec.p(), spec.q());
    let steps = [1usize, 5, 10.min(basis.m_max() - 2)];
    let gaps: Vec<_> = steps
        .iter()
        .map(|&n| gap_constants(basis, n, p, q, seed ^ 0x31).map(|g| g.gamma))
        .collect::<Result<_, _>>()
        .unwrap_or_default();
    let decay = gaps.len() == 3 && gaps[1] < gaps[0] && gaps[2] < gaps[1];
    let l2 = gap_constants(basis, 1, 1.0, 1.0, seed ^ 0x32)
        .map(|g| (g.alpha - 1.0 / basis.lambda(2)).abs())
        .unwrap_or(f64::INFINITY);
    group(
        groups,
        "gap_constant_trend",
        if decay && l2 < 1e-8 {
            Ok(format!(
                "gamma decays {:?}, L2 closed form defect {l2:.2e}",
                gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()
            ))
        } else {
            Err(format!("decay {decay}, L2 defect {l2:.2e}"))
        },
    );

    // bilinear pairing bound on the truncated complement
    let n = 3.min(basis.m_max() - 2);
    let gap = gap_constants(basis, n, p, q, seed ^ 0x33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x34);
    let dim = basis.m_max() - n;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let ca: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cb: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // f = Σ ca_j f_j on the tail, g = Σ cb_j g_j; ∫ f A g = Σ ca_j cb_j
        let mut fv = DiscreteField::zeros(basis.mesh());
        let mut gv = DiscreteField::zeros(basis.mesh());
        for (k, (&a, &b)) in ca.iter().zip(&cb).enumerate() {
            let j = n + 1 + k;
            let mode = basis.mode(j);
            let lamj = basis.lambda(j);
            for ((fo, go), &x) in fv
                .values_mut()
                .iter_mut()
                .zip(gv.values_mut().iter_mut())
                .zip(mode.values())
            {
                *fo += a * lamj * x;
                *go += b * x;
            }
        }
        let pairing: f64 = ca.iter().zip(&cb).map(|(a, b)| a * b).sum();
        let bound = gap.gamma
            * fv.lp_norm(1.0 + 1.0 / p).unwrap()
            * gv.lp_norm(1.0 + 1.0 / q).unwrap()
            * (1.0 + 1e-6);
        worst_ratio = worst_ratio.max(pairing.abs() / bound);
    }
    group(
        groups,
        "bilinear_pairing_bound",
        if worst_ratio <= 1.0 {
            Ok(format!("worst pairing/bound ratio {worst_ratio:.6}"))
        } else {
            Err(format!("bound violated with ratio {worst_ratio:.6}"))
        },
    );

    // positivity constants
    let mut ok = true;
    let mut last = f64::INFINITY;
    let mut cmin = f64::INFINITY;
    for n in 1..=10.min(basis.m_max()) {
        match positivity_constant(basis, n, p, q, seed ^ 0x35) {
            Ok(c) => {
                ok &= c > 0.0 && c <= last * (1.0 + 1e-9);
                cmin = cmin.min(c);
                last = c;
            }
            Err(_) => ok = false,
        }
    }
    group(
        groups,
        "pairing_positivity",
        if ok {
            Ok(format!("C(n) positive and nonincreasing, min {cmin:.3e}"))
        } else {
            Err("positivity constant failed".into())
        },
    );
}

fn functional_groups(
    groups: &mut Vec<Group>,
    spec: &HamiltonianSpec,
    solver: &LaplacianSolver,
    mesh: Mesh,
    regime: Regime,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x41);
    // directional derivative of J against finite differences
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (rng.gen_range(0.3..1.2), rng.gen_range(0.3..1.2));
        let point = DualPoint {
            f: DiscreteField::from_fn(mesh, |x, y| {
                a * (PI * x).sin() * if mesh.dim() == 2 { (PI * y).sin() } else { 1.0 }
            }),
            g: DiscreteField::from_fn(mesh, |x, y| {
                b * (2.0 * PI * x).sin() * if mesh.dim() == 2 { (PI * y).sin() } else { 1.0 }
                    + 0.1
            }),
        };
        let delta = DualPoint {
            f: DiscreteField::from_fn(mesh, |x, _| (3.0 * PI * x).sin()),
            g: DiscreteField::from_fn(mesh, |x, _| x * (1.0 - x)),
        };
        let t = 1e-5;
        let plus = DualPoint {
            f: point.f.add(&delta.f.scaled(t)).unwrap(),
            g: point.g.add(&delta.g.scaled(t)).unwrap(),
        };
        let minus = DualPoint {
            f: point.f.sub(&delta.f.scaled(t)).unwrap(),
            g: point.g.sub(&delta.g.scaled(t)).unwrap(),
        };
        let fd = (eval_j(spec, solver, &plus).unwrap() - eval_j(spec, solver, &minus).unwrap())
            / (2.0 * t);
        let grad = grad_j(spec, solver, &point).unwrap();
        let pairing = inner(&grad.f, &delta.f).unwrap() + inner(&grad.g, &delta.g).unwrap();
        worst = worst.max((fd - pairing).abs() / (1.0 + fd.abs()));
    }
    // oddness is exact
    let point = DualPoint {
        f: DiscreteField::from_fn(mesh, |x, _| (PI * x).sin()),
        g: DiscreteField::from_fn(mesh, |x, _| (2.0 * PI * x).sin()),
    };
    let g1 = grad_j(spec, solver, &point).unwrap();
    let g2 = grad_j(spec, solver, &point.negated()).unwrap();
    let odd = g1.f.values() == g2.negated().f.values() && g1.g.values() == g2.negated().g.values();
    group(
        groups,
        "grad_j_checks",
        if worst <= 1e-5 && odd {
            Ok(format!("directional derivative defect {worst:.2e}, odd"))
        } else {
            Err(format!("directional defect {worst:.2e}, odd {odd}"))
        },
    );

    // energy identity: zero at the origin, visible away from critical points
    let zero_gap = energy_identity_gap(spec, solver, &DualPoint::zeros(mesh)).unwrap();
    let control = energy_identity_gap(spec, solver, &point).unwrap();
    let even = {
        let a = eval_j(spec, solver, &point).unwrap();
        let b = eval_j(spec, solver, &point.negated()).unwrap();
        a == b
    };
    group(
        groups,
        "energy_identity_controls",
        if zero_gap == 0.0 && control > 1e-7 && even {
            Ok(format!("origin gap 0, non-critical control gap {control:.2e}"))
        } else {
            Err(format!(
                "origin gap {zero_gap:.2e}, control {control:.2e}, even {even}"
            ))
        },
    );

    // primal recovery inverts the gradient
    let (u, v) = recover_primal(spec, &point).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..mesh.n_nodes() {
        let (bf, bg) = spec.grad(u.values()[i], v.values()[i]);
        worst = worst.max(
            (bf - point.f.values()[i]).abs().max((bg - point.g.values()[i]).abs()),
        );
    }
    let i_val = eval_i(spec, &u, &v).unwrap();
    group(
        groups,
        "primal_recovery_roundtrip",
        if worst <= 1e-8 && i_val.is_finite() {
            Ok(format!("max nodewise inversion defect {worst:.2e}"))
        } else {
            Err(format!("inversion defect {worst:.2e}"))
        },
    );

    // regime signature along scaled directions
    let sig = match regime {
        Regime::Sublinear => {
            let mut ok = true;
            for _ in 0..20 {
                let c = rng.gen_range(0.2..1.0);
                let ray = DualPoint {
                    f: point.f.scaled(c),
                    g: point.g.scaled(c),
                };
                let j1 = eval_j(spec, solver, &ray.scaled(10.0)).unwrap();
                let j2 = eval_j(spec, solver, &ray.scaled(100.0)).unwrap();
                ok &= j2 > j1 && j2 > 0.0;
            }
            (ok, "J coercive along 20 random rays")
        }
        Regime::Superlinear => {
            let (k, l) = hamdual::choose_exponents(spec.p(), spec.q(), regime).unwrap();
            let mut ok = true;
            for _ in 0..20 {
                let c = rng.gen_range(0.3..1.0);
                let f = DiscreteField::from_fn(mesh, |x, y| {
                    c * (PI * x).sin() * if mesh.dim() == 2 { (PI * y).sin() } else { 1.0 }
                });
                let at = |t: f64| DualPoint {
                    f: f.scaled(t.powf(k)),
                    g: f.scaled(t.powf(l)),
                };
                let j_small = eval_j(spec, solver, &at(5.0)).unwrap();
                let j_large = eval_j(spec, solver, &at(40.0)).unwrap();
                ok &= j_large < j_small && j_large < 0.0;
            }
            (ok, "J dives along 20 scaled paired directions")
        }
    };
    group(
        groups,
        "regime_signature",
        if sig.0 {
            Ok(sig.1.to_string())
        } else {
            Err(format!("{} — failed", sig.1))
        },
    );
}
