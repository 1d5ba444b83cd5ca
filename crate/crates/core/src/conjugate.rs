//! The power-family Hamiltonian, its gradient, and the pointwise
//! Legendre–Fenchel conjugate.
//!
//! The concrete family is
//!   H(u, v) = |u|^{p+1} + |v|^{q+1} + ε |u|^α |v|^β,
//! strictly convex and even for admissible parameters. Admissibility is
//! decided by a sampled validator rather than an a-priori bound on ε.
//! The conjugate H*(f, g) = sup_{t,s} { tf + sg − H(t, s) } has a closed form
//! for ε = 0 and is otherwise computed by damped Newton on the strictly
//! concave inner problem; its maximizer is ∇H*(f, g).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Offset used when a second derivative with a negative power would be
/// evaluated at exactly zero.
const SINGULAR_GUARD: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum ConjugateError {
    #[error("hamiltonian rejected by {check}: {detail}")]
    SpecRejected { check: &'static str, detail: String },
    #[error("conjugate maximization did not converge at (f, g) = ({f}, {g})")]
    NonConvergence { f: f64, g: f64 },
    #[error("(H3) fails at (u, v) = ({u}, {v}): lhs {lhs} < rhs {rhs} for every positive C3")]
    H3Violation { u: f64, v: f64, lhs: f64, rhs: f64 },
}

/// Pointwise convex even Hamiltonian; the extension hook for densities other
/// than the built-in power family.
pub trait Hamiltonian {
    fn eval(&self, u: f64, v: f64) -> f64;
    /// (H_u, H_v)
    fn grad(&self, u: f64, v: f64) -> (f64, f64);
    /// (H_uu, H_uv, H_vv), guarded away from power singularities.
    fn hessian(&self, u: f64, v: f64) -> (f64, f64, f64);
}

/// Parameters of the power family together with the (H3) angle θ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HamiltonianSpec {
    p: f64,
    q: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
    theta: f64,
}

/// Empirical constants of the conjugate growth sandwich
/// A₁(|f|^{1+1/p} + |g|^{1+1/q}) ≤ H*(f,g) ≤ A₂(...).
#[derive(Debug, Clone, Copy)]
pub struct GrowthConstants {
    pub lower: f64,
    pub upper: f64,
}

/// Value of H* at one point together with the maximizer, which equals ∇H*.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateValue {
    pub value: f64,
    pub argmax_u: f64,
    pub argmax_v: f64,
}

/// |t|^{e-1} t written so that t = 0 never meets a negative power.
fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(e - 1.0) * t
    }
}

fn abs_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 && e <= 0.0 {
        0.0
    } else {
        t.abs().powf(e)
    }
}

impl Hamiltonian for HamiltonianSpec {
    fn eval(&self, u: f64, v: f64) -> f64 {
        let mut h = abs_pow(u, self.p + 1.0) + abs_pow(v, self.q + 1.0);
        if self.eps != 0.0 {
            h += self.eps * abs_pow(u, self.alpha) * abs_pow(v, self.beta);
        }
        h
    }

    fn grad(&self, u: f64, v: f64) -> (f64, f64) {
        let mut hu = (self.p + 1.0) * signed_pow(u, self.p);
        let mut hv = (self.q + 1.0) * signed_pow(v, self.q);
        if self.eps != 0.0 {
            hu += self.eps * self.alpha * signed_pow(u, self.alpha - 1.0) * abs_pow(v, self.beta);
            hv += self.eps * self.beta * abs_pow(u, self.alpha) * signed_pow(v, self.beta - 1.0);
        }
        (hu, hv)
    }

    fn hessian(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let ug = u.abs().max(SINGULAR_GUARD);
        let vg = v.abs().max(SINGULAR_GUARD);
        let mut huu = self.p * (self.p + 1.0) * ug.powf(self.p - 1.0);
        let mut hvv = self.q * (self.q + 1.0) * vg.powf(self.q - 1.0);
        let mut huv = 0.0;
        if self.eps != 0.0 {
            let (a, b) = (self.alpha, self.beta);
            huu += self.eps * a * (a - 1.0) * ug.powf(a - 2.0) * vg.powf(b);
            hvv += self.eps * b * (b - 1.0) * ug.powf(a) * vg.powf(b - 2.0);
            huv = self.eps * a * b * signed_pow(u, a - 1.0) * signed_pow(v, b - 1.0);
        }
        (huu, huv, hvv)
    }
}

impl HamiltonianSpec {
    /// Build and validate a member of the family. The validator samples
    /// midpoint convexity, evenness, and the growth sandwich of (H1), and
    /// checks the exponent identity α/(p+1) + β/(q+1) = 1 whenever ε ≠ 0.
    pub fn new(
        p: f64,
        q: f64,
        eps: f64,
        alpha: f64,
        beta: f64,
        theta: f64,
    ) -> Result<Self, ConjugateError> {
        let spec = HamiltonianSpec {
            p,
            q,
            eps,
            alpha,
            beta,
            theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pure power density (the Lane–Emden case ε = 0) with θ = 1/2.
    pub fn power_family(p: f64, q: f64) -> Result<Self, ConjugateError> {
        // alpha/beta are inert at eps = 0; placeholders keep them > 1.
        HamiltonianSpec::new(p, q, 0.0, 2.0, 2.0, 0.5)
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn validate(&self) -> Result<(), ConjugateError> {
        let reject = |check: &'static str, detail: String| {
            Err(ConjugateError::SpecRejected { check, detail })
        };
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return reject("exponent_range", format!("p {} q {}", self.p, self.q));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return reject("theta_range", format!("theta {}", self.theta));
        }
        if self.eps != 0.0 {
            if !(self.alpha > 1.0 && self.beta > 1.0) {
                return reject(
                    "coupling_exponents",
                    format!("alpha {} beta {}", self.alpha, self.beta),
                );
            }
            let id = self.alpha / (self.p + 1.0) + self.beta / (self.q + 1.0);
            if (id - 1.0).abs() > 1e-12 {
                return reject(
                    "coupling_identity",
                    format!("alpha/(p+1)+beta/(q+1) = {id}, want 1"),
                );
            }
        }

        let r = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0x48414d);
        let mut samples: Vec<(f64, f64)> = Vec::with_capacity(512);
        let grid = 9;
        for i in 0..grid {
            for j in 0..grid {
                let u = -r + 2.0 * r * i as f64 / (grid - 1) as f64;
                let v = -r + 2.0 * r * j as f64 / (grid - 1) as f64;
                samples.push((u, v));
            }
        }
        for _ in 0..300 {
            samples.push((rng.gen_range(-r..r), rng.gen_range(-r..r)));
        }

        // evenness must hold exactly for the sampled family
        for &(u, v) in &samples {
            if self.eval(-u, -v) != self.eval(u, v) {
                return reject("evenness_sampler", format!("at ({u}, {v})"));
            }
        }

        // midpoint convexity on sampled pairs
        for k in 0..samples.len() {
            let (u1, v1) = samples[k];
            let (u2, v2) = samples[(k * 7 + 13) % samples.len()];
            let mid = self.eval(0.5 * (u1 + u2), 0.5 * (v1 + v2));
            let avg = 0.5 * (self.eval(u1, v1) + self.eval(u2, v2));
            if mid > avg + 1e-10 {
                return reject(
                    "convexity_sampler",
                    format!("midpoint excess {:e} between ({u1}, {v1}) and ({u2}, {v2})", mid - avg),
                );
            }
        }

        // (H1) sandwich: C1 |u|^{p+1} <= H_u u <= C2 (|u|^{p+1} + |u|^a |v|^b)
        let mut c1 = f64::INFINITY;
        let mut c2: f64 = 0.0;
        for &(u, v) in &samples {
            let (hu, hv) = self.grad(u, v);
            for (side, (t, pw)) in [(0, (u, self.p)), (1, (v, self.q))] {
                if t.abs() < 1e-6 {
                    continue;
                }
                let num = if side == 0 { hu * u } else { hv * v };
                let den_low = abs_pow(t, pw + 1.0);
                let den_high = den_low
                    + if self.eps != 0.0 {
                        abs_pow(u, self.alpha) * abs_pow(v, self.beta)
                    } else {
                        0.0
                    };
                c1 = c1.min(num / den_low);
                if den_high > 0.0 {
                    c2 = c2.max(num / den_high);
                }
            }
        }
        if !(c1 > 1e-12) {
            return reject("h1_sandwich", format!("no positive lower constant, got {c1:e}"));
        }
        if !c2.is_finite() {
            return reject("h1_sandwich", "upper constant diverges".into());
        }
        Ok(())
    }

    /// Conjugate exponent coefficient: sup_t { tf − |t|^{e+1} } = c_e |f|^{1+1/e}.
    fn power_conjugate_coeff(e: f64) -> f64 {
        e * (e + 1.0).powf(-(e + 1.0) / e)
    }

    /// Legendre–Fenchel conjugate at one dual point, with its maximizer.
    pub fn conjugate(&self, f: f64, g: f64) -> Result<ConjugateValue, ConjugateError> {
        let start = (
            signed_pow(f / (self.p + 1.0), 1.0 / self.p),
            signed_pow(g / (self.q + 1.0), 1.0 / self.q),
        );
        self.conjugate_from(f, g, start)
    }

    /// Conjugate with caller-supplied Newton start (used for warm starts when
    /// sweeping fields node by node).
    pub fn conjugate_from(
        &self,
        f: f64,
        g: f64,
        start: (f64, f64),
    ) -> Result<ConjugateValue, ConjugateError> {
        if self.eps == 0.0 {
            let cu = Self::power_conjugate_coeff(self.p);
            let cv = Self::power_conjugate_coeff(self.q);
            let value = cu * abs_pow(f, 1.0 + 1.0 / self.p) + cv * abs_pow(g, 1.0 + 1.0 / self.q);
            return Ok(ConjugateValue {
                value,
                argmax_u: signed_pow(f / (self.p + 1.0), 1.0 / self.p),
                argmax_v: signed_pow(g / (self.q + 1.0), 1.0 / self.q),
            });
        }
        let (t, s) = concave_newton_max(self, f, g, start, 200)
            .ok_or(ConjugateError::NonConvergence { f, g })?;
        Ok(ConjugateValue {
            value: t * f + s * g - self.eval(t, s),
            argmax_u: t,
            argmax_v: s,
        })
    }

    /// ∇H*(f, g): the maximizer of the conjugate problem.
    pub fn grad_conjugate(&self, f: f64, g: f64) -> Result<(f64, f64), ConjugateError> {
        let c = self.conjugate(f, g)?;
        Ok((c.argmax_u, c.argmax_v))
    }

    /// Hessian of H* at (f, g): inverse of the Hessian of H at the maximizer.
    pub fn conjugate_hessian(&self, f: f64, g: f64) -> Result<(f64, f64, f64), ConjugateError> {
        let (t, s) = self.grad_conjugate(f, g)?;
        let (huu, huv, hvv) = self.hessian(t, s);
        let det = huu * hvv - huv * huv;
        Ok((hvv / det, -huv / det, huu / det))
    }

    /// Numerically conjugate H* again at (u, v); convexity gives H** = H.
    pub fn biconjugate(&self, u: f64, v: f64) -> Result<f64, ConjugateError> {
        // generic start away from the known answer ∇H(u, v)
        let (hu, hv) = self.grad(u, v);
        let start = (1.4 * hu + 0.1, 1.4 * hv - 0.1);
        let obj = BiconjugateProblem { spec: self };
        let (f, g) = concave_newton_max(&obj, u, v, start, 300)
            .ok_or(ConjugateError::NonConvergence { f: u, g: v })?;
        Ok(u * f + v * g - self.conjugate(f, g)?.value)
    }

    /// Search for positive constants making the (H3) inequality
    /// θ H_u u + (1-θ) H_v v − H ≥ C₃(|u|^{p+1} + |v|^{q+1}) − C₄
    /// hold on samples of [−R, R]²; reports the tightest pair found or the
    /// witnessing counterexample.
    pub fn check_h3(
        &self,
        sample_box: f64,
        n_samples: usize,
    ) -> Result<(f64, f64), ConjugateError> {
        let r = sample_box;
        let side = (n_samples as f64).sqrt().ceil() as usize;
        let side = side.max(8);
        let mut far_min = f64::INFINITY;
        let mut far_witness = (0.0, 0.0);
        let mut points = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let u = -r + 2.0 * r * i as f64 / (side - 1) as f64;
                let v = -r + 2.0 * r * j as f64 / (side - 1) as f64;
                points.push((u, v));
            }
        }
        let margin = |u: f64, v: f64| -> f64 {
            let (hu, hv) = self.grad(u, v);
            self.theta * hu * u + (1.0 - self.theta) * hv * v - self.eval(u, v)
        };
        let growth =
            |u: f64, v: f64| -> f64 { abs_pow(u, self.p + 1.0) + abs_pow(v, self.q + 1.0) };
        for &(u, v) in &points {
            let phi = growth(u, v);
            if phi < 1e-12 {
                continue;
            }
            if u.abs().max(v.abs()) >= 0.5 * r {
                let ratio = margin(u, v) / phi;
                if ratio < far_min {
                    far_min = ratio;
                    far_witness = (u, v);
                }
            }
        }
        if !(far_min > 1e-9) {
            let (u, v) = far_witness;
            return Err(ConjugateError::H3Violation {
                u,
                v,
                lhs: margin(u, v),
                rhs: 0.0,
            });
        }
        let c3 = far_min * (1.0 - 1e-9);
        let mut c4: f64 = 0.0;
        for &(u, v) in &points {
            c4 = c4.max(c3 * growth(u, v) - margin(u, v));
        }
        Ok((c3, c4.max(0.0)))
    }
}

struct BiconjugateProblem<'a> {
    spec: &'a HamiltonianSpec,
}

impl Hamiltonian for BiconjugateProblem<'_> {
    fn eval(&self, f: f64, g: f64) -> f64 {
        self.spec
            .conjugate(f, g)
            .map(|c| c.value)
            .unwrap_or(f64::INFINITY)
    }
    fn grad(&self, f: f64, g: f64) -> (f64, f64) {
        self.spec.grad_conjugate(f, g).unwrap_or((f64::NAN, f64::NAN))
    }
    fn hessian(&self, f: f64, g: f64) -> (f64, f64, f64) {
        self.spec
            .conjugate_hessian(f, g)
            .unwrap_or((1.0, 0.0, 1.0))
    }
}

/// Damped Newton maximization of φ(t, s) = t f + s g − G(t, s) for a strictly
/// convex G. Stops at gradient norm 1e−10; falls back to a gradient step when
/// the Hessian solve degenerates.
fn concave_newton_max(
    ham: &impl Hamiltonian,
    f: f64,
    g: f64,
    start: (f64, f64),
    max_steps: usize,
) -> Option<(f64, f64)> {
    let (mut t, mut s) = start;
    if !t.is_finite() || !s.is_finite() {
        t = 0.0;
        s = 0.0;
    }
    let phi = |t: f64, s: f64| t * f + s * g - ham.eval(t, s);
    let mut val = phi(t, s);
    for _ in 0..max_steps {
        let (hu, hv) = ham.grad(t, s);
        let (ru, rv) = (f - hu, g - hv);
        let gnorm = (ru * ru + rv * rv).sqrt();
        if gnorm <= 1e-10 {
            return Some((t, s));
        }
        let (huu, huv, hvv) = ham.hessian(t, s);
        let det = huu * hvv - huv * huv;
        // Newton direction solves Hess(H) d = residual
        let (mut du, mut dv) = if det.abs() > 1e-300 && det.is_finite() {
            ((hvv * ru - huv * rv) / det, (huu * rv - huv * ru) / det)
        } else {
            (ru, rv)
        };
        if du * ru + dv * rv <= 0.0 {
            du = ru;
            dv = rv;
        }
        let slope = du * ru + dv * rv;
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let (tn, sn) = (t + step * du, s + step * dv);
            let vn = phi(tn, sn);
            if vn >= val + 1e-4 * step * slope {
                t = tn;
                s = sn;
                val = vn;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            // line search exhausted; accept only if already essentially critical
            return if gnorm <= 1e-8 { Some((t, s)) } else { None };
        }
    }
    let (hu, hv) = ham.grad(t, s);
    let gnorm = ((f - hu).powi(2) + (g - hv).powi(2)).sqrt();
    if gnorm <= 1e-8 {
        Some((t, s))
    } else {
        None
    }
}

/// Empirical growth-sandwich constants from pointwise conjugate samples.
pub fn calibrate_growth(
    spec: &HamiltonianSpec,
    n_samples: usize,
    box_radius: f64,
    seed: u64,
) -> Result<GrowthConstants, ConjugateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let (ep, eq) = (1.0 + 1.0 / spec.p(), 1.0 + 1.0 / spec.q());
    let mut taken = 0;
    while taken < n_samples {
        let f = rng.gen_range(-box_radius..box_radius);
        let g = rng.gen_range(-box_radius..box_radius);
        let den = abs_pow(f, ep) + abs_pow(g, eq);
        if den < 1e-9 {
            continue;
        }
        let ratio = spec.conjugate(f, g)?.value / den;
        lower = lower.min(ratio);
        upper = upper.max(ratio);
        taken += 1;
    }
    Ok(GrowthConstants { lower, upper })
}
