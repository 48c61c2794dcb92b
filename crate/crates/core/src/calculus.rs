//! Lebesgue–Stieltjes integration, g-derivatives and the norms built on them.
//!
//! The integral against `μ_g` is computed through the continuous/jump split:
//!
//! ```text
//! ∫_[c,d) f dμ_g = ∫_{g^C([c,d))} f(γ(x)) dx + Σ_{d_k ∈ [c,d)} f(d_k) Δ_k
//! ```
//!
//! where `γ` is the pseudoinverse of `g^C`. The first term is an ordinary
//! Lebesgue integral with the images of all breakpoints, atoms and knots as
//! panel boundaries.

use serde::{Deserialize, Serialize};

use crate::derivator::{sort_dedup, Derivator};
use crate::error::{Error, Result};
use crate::function::{GFunction, SobolevFunction};
use crate::grid::{dense_samples, GridSpec};
use crate::quad::{self, neumaier, MAX_PANELS};

fn check_interval(g: &Derivator, c: f64, d: f64) -> Result<()> {
    g.check(c)?;
    g.check(d)?;
    if c > d {
        return Err(Error::InvalidInterval { c, d });
    }
    Ok(())
}

/// Points of `(c, d)` where `f` or `g` may be non-smooth.
fn interior_specials(f: &GFunction, g: &Derivator, c: f64, d: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = g
        .special_points()
        .into_iter()
        .chain(f.knots().iter().copied())
        .filter(|&t| t > c && t < d)
        .collect();
    sort_dedup(&mut pts);
    pts
}

/// `∫_{g^C([c,d))} f∘γ dx`, the integral against the continuous part.
pub fn lebesgue_part(f: &GFunction, g: &Derivator, c: f64, d: f64, tol: f64) -> Result<f64> {
    check_interval(g, c, d)?;
    let (x0, x1) = (g.continuous(c), g.continuous(d));
    if x1 <= x0 {
        return Ok(0.0);
    }
    let gamma = g.pseudoinverse();
    let mut breaks = vec![x0, x1];
    breaks.extend(interior_specials(f, g, c, d).into_iter().map(|t| g.continuous(t)));
    breaks.retain(|&x| x >= x0 && x <= x1);
    sort_dedup(&mut breaks);
    quad::integrate(&|x| f.eval(gamma.eval_unchecked(x)), &breaks, tol, MAX_PANELS)
}

/// `Σ f(d_k) Δ_k` over the atoms in `[c, d)`.
pub fn atom_part(f: &GFunction, g: &Derivator, c: f64, d: f64) -> f64 {
    neumaier(g.jumps_in(c, d).iter().map(|j| f.eval(j.at) * j.size))
}

/// `∫_{[c,d)} f dμ_g` to absolute accuracy `tol`.
pub fn integrate(f: &GFunction, g: &Derivator, c: f64, d: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol", reason: format!("must be positive, got {tol}") });
    }
    let lebesgue = lebesgue_part(f, g, c, d, tol)?;
    Ok(lebesgue + atom_part(f, g, c, d))
}

/// `∫_{[c,d)} f dμ_{g^C}` computed in the original variable, as the sum over
/// linear pieces of `slope · ∫ f dt`. Independent of the pseudoinverse.
pub fn integrate_continuous_density(f: &GFunction, g: &Derivator, c: f64, d: f64, tol: f64) -> Result<f64> {
    check_interval(g, c, d)?;
    let bp = g.breakpoints();
    let v = g.cont_values();
    let specials = interior_specials(f, g, c, d);
    let pieces = bp.len() - 1;
    let mut parts = Vec::new();
    for i in 0..pieces {
        let (a, b) = (bp[i].max(c), bp[i + 1].min(d));
        let slope = (v[i + 1] - v[i]) / (bp[i + 1] - bp[i]);
        if b <= a || slope == 0.0 {
            continue;
        }
        let mut breaks = vec![a, b];
        breaks.extend(specials.iter().copied().filter(|&t| t > a && t < b));
        sort_dedup(&mut breaks);
        let piece_tol = tol / (slope * pieces as f64);
        parts.push(slope * quad::integrate(&|t| f.eval(t), &breaks, piece_tol, MAX_PANELS)?);
    }
    Ok(neumaier(parts))
}

/// Riemann–Stieltjes sum on a grid of about `n` cells refined at every
/// breakpoint, atom and knot.
///
/// Each cell `[t_i, t_{i+1})` contributes `f(mid)·(g(t_{i+1}) - g(t_i))`,
/// except that a cell starting at an atom `d` tags the atom with `f(d)` and
/// only the remaining increment with the midpoint. The error is `O(h^2)` for
/// piecewise-smooth `f`.
pub fn integrate_direct(f: &GFunction, g: &Derivator, c: f64, d: f64, n: usize) -> f64 {
    if !(d > c) || n == 0 {
        return 0.0;
    }
    let mut nodes = vec![c, d];
    nodes.extend(interior_specials(f, g, c, d));
    sort_dedup(&mut nodes);
    let span = d - c;
    let mut terms = Vec::with_capacity(n + nodes.len());
    for w in nodes.windows(2) {
        let (p, q) = (w[0], w[1]);
        let m = ((n as f64 * (q - p) / span).ceil() as usize).max(1);
        let mut left = p;
        let mut g_left = g.value(p);
        for j in 1..=m {
            let right = if j == m { q } else { p + (q - p) * j as f64 / m as f64 };
            let g_right = g.value(right);
            let mut incr = g_right - g_left;
            let mid = 0.5 * (left + right);
            if j == 1 {
                let atom = g.delta(p);
                if atom > 0.0 {
                    terms.push(f.eval(p) * atom);
                    incr = g.continuous(right) - g.continuous(left);
                }
            }
            terms.push(f.eval(mid) * incr);
            left = right;
            g_left = g_right;
        }
    }
    neumaier(terms)
}

/// One Richardson step on [`integrate_direct`]: `(4 S(2n) - S(n)) / 3`.
pub fn integrate_direct_extrapolated(f: &GFunction, g: &Derivator, c: f64, d: f64, n: usize) -> f64 {
    let coarse = integrate_direct(f, g, c, d, n);
    let fine = integrate_direct(f, g, c, d, 2 * n);
    (4.0 * fine - coarse) / 3.0
}

const MAX_ORDER: usize = 4;

/// Neville extrapolation to `h = 0` of a sequence sampled at `h0 / 2^j`.
/// Returns `None` when successive estimates never settle within `tol`.
pub(crate) fn extrapolate(levels: usize, tol: f64, mut sample: impl FnMut(usize) -> f64) -> Option<f64> {
    let mut prev_row: Vec<f64> = Vec::new();
    let mut prev_est: Option<f64> = None;
    let mut settled = 0;
    for j in 0..levels {
        let v = sample(j);
        if !v.is_finite() {
            return None;
        }
        let mut row = vec![v];
        for k in 1..=j.min(MAX_ORDER) {
            let factor = 2f64.powi(k as i32) - 1.0;
            row.push(row[k - 1] + (row[k - 1] - prev_row[k - 1]) / factor);
        }
        let est = *row.last().unwrap();
        if let Some(p) = prev_est {
            if (est - p).abs() <= tol * (1.0 + est.abs()) {
                settled += 1;
                if settled >= 2 {
                    return Some(est);
                }
            } else {
                settled = 0;
            }
        }
        prev_est = Some(est);
        prev_row = row;
    }
    None
}

/// Largest safe one-sided step at `t`: half the distance to the next
/// special point of `f` or `g` in direction `dir` (+1 right, -1 left).
pub(crate) fn side_step(f: &GFunction, g: &Derivator, t: f64, dir: f64) -> Option<f64> {
    let (lo, hi) = g.window();
    let next = g
        .special_points()
        .into_iter()
        .chain(f.knots().iter().copied())
        .filter(|&p| (p - t) * dir > 0.0 && (lo..=hi).contains(&p))
        .map(|p| (p - t).abs())
        .fold(f64::INFINITY, f64::min);
    if !next.is_finite() || next <= 0.0 {
        return None;
    }
    Some((0.5 * next).min(0.125 * (hi - lo)))
}

pub const DEFAULT_LEVELS: usize = 40;

/// `f(t^+)`: declared value if present, otherwise extrapolated from the right.
pub fn right_limit(f: &GFunction, g: &Derivator, t: f64, tol: f64) -> Result<f64> {
    g.check(t)?;
    if let Some(v) = f.declared_right_limit(t) {
        return Ok(v);
    }
    let h0 = side_step(f, g, t, 1.0).ok_or(Error::NoLimit { at: t })?;
    extrapolate(DEFAULT_LEVELS, tol, |j| f.eval(t + h0 / 2f64.powi(j as i32))).ok_or(Error::NoLimit { at: t })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivOptions {
    /// Cauchy tolerance for the quotient sequence.
    pub tol: f64,
    /// Use the declared g-derivative when the function carries one.
    pub use_declared: bool,
    pub levels: usize,
}

impl Default for DerivOptions {
    fn default() -> Self {
        Self { tol: crate::DEFAULT_TOL, use_declared: true, levels: DEFAULT_LEVELS }
    }
}

impl DerivOptions {
    pub fn numeric(tol: f64) -> Self {
        Self { tol, use_declared: false, levels: DEFAULT_LEVELS }
    }
}

/// Limit of `(f(t + s h) - f(t)) / (g(t + s h) - g(t))` as `h ↓ 0`, `s = dir`.
fn quotient_limit(f: &GFunction, g: &Derivator, t: f64, dir: f64, opts: &DerivOptions) -> Result<f64> {
    let h0 = side_step(f, g, t, dir).ok_or(Error::NoLimit { at: t })?;
    let (ft, gt) = (f.eval(t), g.value(t));
    let mut degenerate = false;
    let est = extrapolate(opts.levels, opts.tol, |j| {
        let s = t + dir * h0 / 2f64.powi(j as i32);
        let den = g.value(s) - gt;
        if den == 0.0 {
            degenerate = true;
            return f64::NAN;
        }
        (f.eval(s) - ft) / den
    });
    match est {
        Some(v) => Ok(v),
        None if degenerate => Err(Error::DegenerateDenominator { at: t }),
        None => Err(Error::NoLimit { at: t }),
    }
}

fn jump_quotient(f: &GFunction, g: &Derivator, d: f64, opts: &DerivOptions) -> Result<f64> {
    let right = right_limit(f, g, d, opts.tol)?;
    Ok((right - f.eval(d)) / g.delta(d))
}

/// The Stieltjes derivative `f'_g(t)`.
///
/// At an atom it is `(f(t^+) - f(t)) / Δg(t)`; inside a constancy interval
/// `(a, b)` it is the right quotient at `b`; elsewhere it is the two-sided
/// limit of difference quotients. At the endpoints of constancy intervals
/// the quotient has no denominator and `DegenerateDenominator` is returned.
pub fn g_derivative(f: &GFunction, g: &Derivator, t: f64, opts: &DerivOptions) -> Result<f64> {
    g.check(t)?;
    if opts.use_declared {
        if let Some(v) = f.declared_gderiv(t) {
            return Ok(v);
        }
    }
    if g.delta(t) > 0.0 {
        return jump_quotient(f, g, t, opts);
    }
    let (lo, hi) = g.window();
    let classes = g.classify();
    if let Some((_, b)) = classes.constancy_interval(t) {
        if g.delta(b) > 0.0 {
            return jump_quotient(f, g, b, opts);
        }
        if b >= hi {
            return Err(Error::DegenerateDenominator { at: t });
        }
        return quotient_limit(f, g, b, 1.0, opts);
    }
    if classes.is_endpoint(t) {
        return Err(Error::DegenerateDenominator { at: t });
    }
    let right = if t < hi { Some(quotient_limit(f, g, t, 1.0, opts)?) } else { None };
    let left = if t > lo { Some(quotient_limit(f, g, t, -1.0, opts)?) } else { None };
    match (left, right) {
        (Some(l), Some(r)) => {
            if (l - r).abs() <= 10.0 * opts.tol * (1.0 + l.abs().max(r.abs())) {
                Ok(0.5 * (l + r))
            } else {
                Err(Error::NoLimit { at: t })
            }
        }
        (Some(v), None) | (None, Some(v)) => Ok(v),
        (None, None) => Err(Error::NoLimit { at: t }),
    }
}

/// `u(t) = base + ∫_{[start, t)} ũ dμ_g` as a [`GFunction`] with right
/// limits `u(d) + ũ(d)Δg(d)` and declared g-derivative `ũ`.
///
/// Cumulative values are tabulated at every special point, so one evaluation
/// costs a single short quadrature.
pub fn ftc_build(s: &SobolevFunction, g: &Derivator, tol: f64) -> Result<GFunction> {
    check_interval(g, s.start, s.end)?;
    let density = s.density.clone();
    let mut nodes = vec![s.start, s.end];
    nodes.extend(interior_specials(&density, g, s.start, s.end));
    sort_dedup(&mut nodes);
    let mut cumulative = Vec::with_capacity(nodes.len());
    let mut acc = s.base;
    cumulative.push(acc);
    for w in nodes.windows(2) {
        acc += integrate(&density, g, w[0], w[1], tol)?;
        cumulative.push(acc);
    }

    let (start, end) = (s.start, s.end);
    let gc = g.clone();
    let dens = density.clone();
    let table = nodes.clone();
    let values = cumulative.clone();
    let u = move |t: f64| -> f64 {
        if !(start..=end).contains(&t) {
            return f64::NAN;
        }
        let i = table.partition_point(|&p| p <= t) - 1;
        if t == table[i] {
            return values[i];
        }
        values[i] + integrate(&dens, &gc, table[i], t, tol).unwrap_or(f64::NAN)
    };
    let right: Vec<(f64, f64)> = g
        .jumps_in(start, end)
        .iter()
        .map(|j| (j.at, u(j.at) + density.eval(j.at) * j.size))
        .collect();
    let continuous = right.is_empty() && g.jumps_in(start, end).is_empty();
    let mut out = if continuous { GFunction::continuous("u", u) } else { GFunction::new("u", u) };
    let dens = density.clone();
    out = out.with_right_limits(right).with_knots(nodes).with_gderiv(move |t| dens.eval(t));
    Ok(out)
}

/// Largest `|f|` on a dense grid of `[c, d]`, together with the declared
/// right limits at atoms of `[c, d)`. A lower bound for adversarial `f`.
pub fn sup_norm(f: &GFunction, g: &Derivator, c: f64, d: f64) -> f64 {
    let pts = dense_samples(g, c, d, f.knots(), &GridSpec::default());
    let on_grid = pts.iter().map(|&t| f.eval(t).abs()).fold(0.0, f64::max);
    let at_jumps = g
        .jumps_in(c, d)
        .iter()
        .filter_map(|j| f.declared_right_limit(j.at))
        .map(f64::abs)
        .fold(0.0, f64::max);
    on_grid.max(at_jumps)
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "p", reason: format!("must lie in [1, inf], got {p}") })
    }
}

/// `‖f‖_{L^p_g([c,d))}`; `p = f64::INFINITY` gives [`sup_norm`].
pub fn lp_norm(f: &GFunction, g: &Derivator, p: f64, c: f64, d: f64, tol: f64) -> Result<f64> {
    check_p(p)?;
    check_interval(g, c, d)?;
    if p.is_infinite() {
        return Ok(sup_norm(f, g, c, d));
    }
    let integral = integrate(&f.abs_pow(p), g, c, d, tol)?;
    Ok(integral.max(0.0).powf(1.0 / p))
}

/// `‖u‖_p + ‖ũ‖_p` over `[start, end)`.
pub fn sobolev_norm(s: &SobolevFunction, g: &Derivator, p: f64, tol: f64) -> Result<f64> {
    let u = ftc_build(s, g, tol)?;
    Ok(lp_norm(&u, g, p, s.start, s.end, tol)? + lp_norm(&s.density, g, p, s.start, s.end, tol)?)
}

/// Constant `C` with `‖u‖_0 ≤ C (‖u‖_p + ‖ũ‖_p)` on an interval of measure
/// `mu`: `max(mu^{-1/p}, mu^{1-1/p})`.
pub fn embedding_constant(p: f64, mu: f64) -> f64 {
    if !(mu > 0.0) {
        return f64::INFINITY;
    }
    if p.is_infinite() {
        return mu.max(1.0);
    }
    mu.powf(-1.0 / p).max(mu.powf(1.0 - 1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub p: f64,
    pub measure: f64,
    pub constant: f64,
    pub sup_norm: f64,
    pub norm_u: f64,
    pub norm_density: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compares `‖u‖_0` with `2 C (‖u‖_p + ‖ũ‖_p)`.
pub fn embedding_check(s: &SobolevFunction, g: &Derivator, p: f64, tol: f64) -> Result<EmbeddingReport> {
    check_p(p)?;
    let u = ftc_build(s, g, tol)?;
    let measure = g.measure(&[(s.start, s.end)])?;
    let constant = embedding_constant(p, measure);
    let sup = sup_norm(&u, g, s.start, s.end);
    let norm_u = lp_norm(&u, g, p, s.start, s.end, tol)?;
    let norm_density = lp_norm(&s.density, g, p, s.start, s.end, tol)?;
    let total = norm_u + norm_density;
    let bound = if total == 0.0 { 0.0 } else { 2.0 * constant * total };
    Ok(EmbeddingReport { p, measure, constant, sup_norm: sup, norm_u, norm_density, bound, pass: sup <= bound })
}
