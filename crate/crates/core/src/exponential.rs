//! g-exponentials in both time directions and the extension operator built
//! from exponential tails.
//!
//! For `t ≥ α`
//!
//! ```text
//! exp_g(λ; α, t) = exp(λ μ_{g^C}([α,t)) + Σ_{d ∈ [α,t)} log(1 + λ(d) Δg(d)))
//! ```
//!
//! and for `t < α` it is the reciprocal of `exp_g(λ; t, α)`, which also equals
//! the forward exponential of `q(λ) = -λ / (1 + λ Δg)`. Both backward forms are
//! computed and compared.

use serde::{Deserialize, Serialize};

use crate::calculus::{embedding_constant, ftc_build, lebesgue_part, lp_norm, right_limit};
use crate::derivator::{sort_dedup, Derivator};
use crate::error::{Error, Result};
use crate::function::{GFunction, SobolevFunction};
use crate::grid::{dense_samples, GridSpec};
use crate::quad::neumaier;

/// The rate `λ`: a constant or a function of `t`.
#[derive(Debug, Clone)]
pub enum Rate {
    Constant(f64),
    Function(GFunction),
}

impl Rate {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Rate::Constant(c) => *c,
            Rate::Function(f) => f.eval(t),
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            Rate::Constant(_) => Vec::new(),
            Rate::Function(f) => f.knots().to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpSpec {
    pub lam: Rate,
    pub alpha: f64,
}

impl ExpSpec {
    pub fn constant(lam: f64, alpha: f64) -> Self {
        Self { lam: Rate::Constant(lam), alpha }
    }
}

fn log_factor(factor: f64, at: f64) -> Result<f64> {
    if factor > 0.0 {
        Ok(factor.ln())
    } else {
        Err(Error::BranchViolation { at, factor })
    }
}

/// `λ̃(t)`: `λ(t)` off the atoms, `log(1 + λΔg)/Δg` on them.
pub fn lambda_tilde(lam: &Rate, g: &Derivator, t: f64) -> Result<f64> {
    g.check(t)?;
    let l = lam.at(t);
    let delta = g.delta(t);
    if delta == 0.0 {
        return Ok(l);
    }
    Ok(log_factor(1.0 + l * delta, t)? / delta)
}

/// `q(λ)(t) = -λ(t) / (1 + λ(t)Δg(t))`.
pub fn q_transform(lam: &Rate, g: &Derivator, t: f64) -> Result<f64> {
    g.check(t)?;
    Ok(q_value(lam.at(t), g.delta(t), t)?)
}

fn q_value(l: f64, delta: f64, at: f64) -> Result<f64> {
    let factor = 1.0 + l * delta;
    if factor == 0.0 {
        return Err(Error::BranchViolation { at, factor });
    }
    Ok(-l / factor)
}

/// `∫_{[a,b)} λ̃ dμ_g`, or the same integral for `q(λ)` when `transformed`.
fn exponent(lam: &Rate, g: &Derivator, a: f64, b: f64, tol: f64, transformed: bool) -> Result<f64> {
    let mut lebesgue = match lam {
        Rate::Constant(c) => c * g.continuous_measure(a, b),
        Rate::Function(f) => lebesgue_part(f, g, a, b, tol)?,
    };
    if transformed {
        lebesgue = -lebesgue;
    }
    let atoms = g
        .jumps_in(a, b)
        .iter()
        .map(|j| {
            let l = lam.at(j.at);
            let rate = if transformed { q_value(l, j.size, j.at)? } else { l };
            log_factor(1.0 + rate * j.size, j.at)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lebesgue + neumaier(atoms))
}

/// Relative agreement demanded of the two backward forms.
pub const BACKWARD_TOL: f64 = 1e-10;

/// `exp_g(λ; α, t)`.
pub fn exp_g(spec: &ExpSpec, g: &Derivator, t: f64, tol: f64) -> Result<f64> {
    g.check(t)?;
    g.check(spec.alpha)?;
    let alpha = spec.alpha;
    if t >= alpha {
        return Ok(exponent(&spec.lam, g, alpha, t, tol, false)?.exp());
    }
    let inverse = (-exponent(&spec.lam, g, t, alpha, tol, false)?).exp();
    let transformed = exponent(&spec.lam, g, t, alpha, tol, true)?.exp();
    if (inverse - transformed).abs() > BACKWARD_TOL * inverse.abs().max(transformed.abs()) {
        return Err(Error::BackwardMismatch { at: t, inverse, transformed });
    }
    Ok(inverse)
}

/// `exp_g(λ; α, t^+)`: the exponent over `[α, t]` to the right of `α`, over
/// `(t, α)` to the left.
pub(crate) fn exp_right(spec: &ExpSpec, g: &Derivator, d: f64, tol: f64) -> Result<f64> {
    if d >= spec.alpha {
        let atom = log_factor(1.0 + spec.lam.at(d) * g.delta(d), d)?;
        Ok((exponent(&spec.lam, g, spec.alpha, d, tol, false)? + atom).exp())
    } else {
        Ok((-exponent(&spec.lam, g, d.next_up(), spec.alpha, tol, false)?).exp())
    }
}

/// `t ↦ exp_g(λ; α, t)` as a function with its right limits and declared
/// g-derivative `λ exp_g`.
pub fn exp_function(spec: &ExpSpec, g: &Derivator, tol: f64) -> Result<GFunction> {
    let right = g
        .jumps()
        .iter()
        .map(|j| Ok((j.at, exp_right(spec, g, j.at, tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut knots = spec.lam.knots();
    knots.push(spec.alpha);
    let (s1, g1) = (spec.clone(), g.clone());
    let (s2, g2) = (spec.clone(), g.clone());
    let f = GFunction::new(format!("exp_g(alpha={})", spec.alpha), move |t| exp_g(&s1, &g1, t, tol).unwrap_or(f64::NAN))
        .with_right_limits(right)
        .with_knots(knots)
        .with_gderiv(move |t| s2.lam.at(t) * exp_g(&s2, &g2, t, tol).unwrap_or(f64::NAN));
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpVerification {
    /// Largest `|E(y) - E(x) - ∫_{[x,y)} λ E dμ_g|` over grid pairs.
    pub residual: f64,
    pub pairs: usize,
    /// Largest `|E(d^+) - E(d)(1 + λΔg(d))|` relative to `E(d^+)`.
    pub jump_error: f64,
    /// Largest gap between the extrapolated and the closed-form `E(d^+)`.
    pub limit_error: f64,
    /// Largest `|exp_g(λ;α,t) exp_g(λ;t,α) - 1|`.
    pub inverse_error: f64,
}

/// Checks the integral equation, the jump relation and the inverse relation
/// of `exp_g(λ; α, ·)` on `grid`.
pub fn verify_exp(spec: &ExpSpec, g: &Derivator, grid: &[f64], tol: f64) -> Result<ExpVerification> {
    let e = exp_function(spec, g, tol)?;
    let integrand = match &spec.lam {
        Rate::Constant(c) => e.scale(*c),
        Rate::Function(l) => e.mul(l),
    };
    let mut pts = grid.to_vec();
    sort_dedup(&mut pts);
    for &t in &pts {
        g.check(t)?;
    }
    let values: Vec<f64> = pts.iter().map(|&t| e.eval(t)).collect();
    let mut residual = 0.0_f64;
    let mut pairs = 0;
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            let integral = crate::calculus::integrate(&integrand, g, pts[i], pts[k], tol)?;
            residual = residual.max((values[k] - values[i] - integral).abs());
            pairs += 1;
        }
    }
    let mut jump_error = 0.0_f64;
    let mut limit_error = 0.0_f64;
    for j in g.jumps() {
        let right = exp_right(spec, g, j.at, tol)?;
        let left = exp_g(spec, g, j.at, tol)?;
        let factor = 1.0 + spec.lam.at(j.at) * j.size;
        jump_error = jump_error.max((right - left * factor).abs() / right.abs());
        let bare = GFunction::new("E", {
            let (s, g) = (spec.clone(), g.clone());
            move |t| exp_g(&s, &g, t, tol).unwrap_or(f64::NAN)
        })
        .with_knots(e.knots().to_vec());
        if let Ok(lim) = right_limit(&bare, g, j.at, crate::DEFAULT_TOL) {
            limit_error = limit_error.max((lim - right).abs());
        } else {
            limit_error = f64::INFINITY;
        }
    }
    let mut inverse_error = 0.0_f64;
    for &t in &pts {
        let there = exp_g(spec, g, t, tol)?;
        let back = exp_g(&ExpSpec { lam: spec.lam.clone(), alpha: t }, g, spec.alpha, tol)?;
        inverse_error = inverse_error.max((there * back - 1.0).abs());
    }
    Ok(ExpVerification { residual, pairs, jump_error, limit_error, inverse_error })
}

/// `λ⁺` for the decaying right tail from `tail_start`: `1` unless some atom
/// in `[tail_start, B)` has `Δg ≥ 1/2`, otherwise `1/(2 max Δg)`. The declared
/// tail bound of `g` counts as a possible atom.
pub fn choose_lambda_plus(g: &Derivator, tail_start: f64) -> f64 {
    let (_, hi) = g.window();
    let biggest = g
        .jumps_in(tail_start, hi)
        .iter()
        .map(|j| j.size)
        .chain(std::iter::once(g.tail_bound()))
        .filter(|&s| s >= 0.5)
        .fold(0.0, f64::max);
    if biggest > 0.0 {
        1.0 / (2.0 * biggest)
    } else {
        1.0
    }
}

/// `‖exp_g(∓λ; α, ·)‖_{W^{1,p}}` bound on a half line, valid for every `p`.
pub fn tail_constant(lambda: f64) -> f64 {
    (1.0 + lambda) * (2.0 / lambda).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionNorms {
    pub p: f64,
    pub embedding_constant: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    /// `C̃ = 1 + 2C (C(λ⁻) + C(λ⁺))`.
    pub c_tilde: f64,
    pub pf_sobolev: f64,
    pub f_sobolev: f64,
    pub pf_lp: f64,
    pub f_lp: f64,
    pub pf_sup: f64,
    pub f_sup: f64,
    pub sobolev_ok: bool,
    pub sup_ok: bool,
    /// `‖Pf‖_p ≤ C̃ ‖f‖_p`, reported only.
    pub lp_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionResult {
    pub core: (f64, f64),
    pub window: (f64, f64),
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub f_a: f64,
    pub f_b: f64,
    /// Largest `|Pf - f|` on sampled core points.
    pub restriction_error: f64,
    /// `(P⁻f(a) - f(a), P⁺f(b) - f(b))`.
    pub boundary_error: (f64, f64),
    pub off_core_sup: f64,
    pub off_core_bound: f64,
    pub norms: ExtensionNorms,
    /// Sampled `(t, Pf(t))` on both tails.
    pub tails: Vec<(f64, f64)>,
}

impl ExtensionResult {
    pub fn pass(&self) -> bool {
        self.restriction_error == 0.0
            && self.boundary_error == (0.0, 0.0)
            && self.off_core_sup <= self.off_core_bound
            && self.norms.sobolev_ok
            && self.norms.sup_ok
    }
}

/// The extension `Pf` and its density, over the window of `g`.
#[derive(Debug, Clone)]
pub struct Extension {
    pub result: ExtensionResult,
    pub pf: GFunction,
    pub density: GFunction,
}

/// Extends `s` from `[a, b)` to the window `window` by exponential tails:
/// `f(a) exp_g(λ⁻; a, t)` on the left with `λ⁻ = 1`, and
/// `f(b) exp_g(-λ⁺; b, t)` on the right.
pub fn extend(s: &SobolevFunction, g: &Derivator, window: (f64, f64), p: f64, tol: f64) -> Result<Extension> {
    let (a, b) = (s.start, s.end);
    let (lo, hi) = window;
    if !(lo < a && a < b && b < hi) {
        return Err(Error::WindowTooSmall { a, b, lo, hi });
    }
    let g = g.restrict(lo, hi)?;
    if g.measure(&[(a, b)])? == 0.0 {
        return Err(Error::InvalidParameter {
            name: "core",
            reason: format!("[{a}, {b}) carries no g-mass, so the norms on it vanish"),
        });
    }
    let u = ftc_build(s, &g, tol)?;
    let (f_a, f_b) = (u.eval(a), u.eval(b));
    let lambda_minus = 1.0;
    let lambda_plus = choose_lambda_plus(&g, b);
    let left = ExpSpec::constant(lambda_minus, a);
    let right = ExpSpec::constant(-lambda_plus, b);

    let pf_at = {
        let (u, g, left, right) = (u.clone(), g.clone(), left.clone(), right.clone());
        move |t: f64| -> f64 {
            if t < a {
                f_a * exp_g(&left, &g, t, tol).unwrap_or(f64::NAN)
            } else if t <= b {
                u.eval(t)
            } else {
                f_b * exp_g(&right, &g, t, tol).unwrap_or(f64::NAN)
            }
        }
    };
    let mut right_limits = Vec::new();
    for j in g.jumps() {
        let lim = if j.at < a {
            f_a * exp_right(&left, &g, j.at, tol)?
        } else if j.at < b {
            u.declared_right_limit(j.at).unwrap_or(f64::NAN)
        } else {
            f_b * exp_right(&right, &g, j.at, tol)?
        };
        right_limits.push((j.at, lim));
    }
    let mut knots = u.knots().to_vec();
    knots.extend([a, b]);
    let pf = GFunction::new("Pf", pf_at.clone()).with_right_limits(right_limits).with_knots(knots.clone());
    let dens = s.density.clone();
    let pf_for_density = pf_at.clone();
    let density = GFunction::new("(Pf)'", move |t| {
        if t < a {
            lambda_minus * pf_for_density(t)
        } else if t < b {
            dens.eval(t)
        } else {
            -lambda_plus * pf_for_density(t)
        }
    })
    .with_knots(knots);

    let core_pts = dense_samples(&g, a, b, s.density.knots(), &GridSpec::with_uniform(201));
    let restriction_error = core_pts.iter().map(|&t| (pf.eval(t) - u.eval(t)).abs()).fold(0.0, f64::max);
    let boundary_error = (f_a * exp_g(&left, &g, a, tol)? - f_a, f_b * exp_g(&right, &g, b, tol)? - f_b);
    let off_pts: Vec<f64> = dense_samples(&g, lo, hi, &[a, b], &GridSpec::with_uniform(401))
        .into_iter()
        .filter(|&t| t < a || t > b)
        .collect();
    let mut off_core_sup = off_pts.iter().map(|&t| pf.eval(t).abs()).fold(0.0, f64::max);
    for &(d, v) in pf.right_limits() {
        if d < a || d >= b {
            off_core_sup = off_core_sup.max(v.abs());
        }
    }
    let off_core_bound = f_a.abs().max(f_b.abs());

    let measure = g.measure(&[(a, b)])?;
    let embedding = embedding_constant(p, measure);
    let c_minus = tail_constant(lambda_minus);
    let c_plus = tail_constant(lambda_plus);
    let c_tilde = 1.0 + 2.0 * embedding * (c_minus + c_plus);
    let f_lp = lp_norm(&u, &g, p, a, b, tol)?;
    let f_sobolev = f_lp + lp_norm(&s.density, &g, p, a, b, tol)?;
    let pf_lp = lp_norm(&pf, &g, p, lo, hi, tol)?;
    let pf_sobolev = pf_lp + lp_norm(&density, &g, p, lo, hi, tol)?;
    let f_sup = lp_norm(&u, &g, f64::INFINITY, a, b, tol)?;
    let pf_sup = lp_norm(&pf, &g, f64::INFINITY, lo, hi, tol)?;
    let norms = ExtensionNorms {
        p,
        embedding_constant: embedding,
        c_minus,
        c_plus,
        c_tilde,
        pf_sobolev,
        f_sobolev,
        pf_lp,
        f_lp,
        pf_sup,
        f_sup,
        sobolev_ok: pf_sobolev <= c_tilde * f_sobolev,
        sup_ok: pf_sup <= c_tilde * f_sup,
        lp_ok: pf_lp <= c_tilde * f_lp,
    };
    let tails = off_pts.iter().map(|&t| (t, pf.eval(t))).collect();
    let result = ExtensionResult {
        core: (a, b),
        window,
        lambda_minus,
        lambda_plus,
        f_a,
        f_b,
        restriction_error,
        boundary_error,
        off_core_sup,
        off_core_bound,
        norms,
        tails,
    };
    Ok(Extension { result, pf, density })
}
