//! g-continuity: moduli measured in the pseudometric `|g(s) - g(t)|`,
//! right limits at atoms, the factorization `f = f̃ ∘ g` and polynomial fits
//! in `g`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::right_limit;
use crate::derivator::{sort_dedup, Derivator};
use crate::error::{Error, Result};
use crate::function::GFunction;
use crate::grid::{dense_samples, GridSpec};

/// Uniform and pointwise g-moduli of a family on a sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub deltas: Vec<f64>,
    /// `ω(δ) = sup |f(t) - f(s)|` over sampled pairs with `|g(t) - g(s)| < δ`,
    /// maximised over the family.
    pub omega: Vec<f64>,
    /// Points at which pointwise moduli are reported.
    pub points: Vec<f64>,
    /// `pointwise[i][k] = sup |f(s) - f(points[i])|` over sampled `s` with
    /// `|g(s) - g(points[i])| < deltas[k]`.
    pub pointwise: Vec<Vec<f64>>,
    pub sample_count: usize,
}

/// Sampled values of a family, sorted by `t` (hence by `g`).
pub(crate) struct Sampled {
    pub t: Vec<f64>,
    pub gv: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Sampled {
    pub(crate) fn new(family: &[GFunction], g: &Derivator, mut t: Vec<f64>) -> Self {
        sort_dedup(&mut t);
        let gv = t.iter().map(|&s| g.value(s)).collect();
        let values = family.par_iter().map(|f| t.iter().map(|&s| f.eval(s)).collect()).collect();
        Self { t, gv, values }
    }

    pub(crate) fn index_of(&self, s: f64) -> Option<usize> {
        self.t.binary_search_by(|p| p.total_cmp(&s)).ok()
    }

    /// Index range of samples with `|g - x| < delta`.
    pub(crate) fn g_range(&self, x: f64, delta: f64) -> (usize, usize) {
        let lo = self.gv.partition_point(|&v| x - v >= delta);
        let hi = self.gv.partition_point(|&v| v - x < delta);
        (lo, hi)
    }

    /// Uniform modulus of one member at `delta`.
    pub(crate) fn omega(&self, member: usize, delta: f64) -> f64 {
        let v = &self.values[member];
        let n = v.len();
        let mut maxq: VecDeque<usize> = VecDeque::new();
        let mut minq: VecDeque<usize> = VecDeque::new();
        let mut r = 0;
        let mut best = 0.0_f64;
        for i in 0..n {
            while r < n && self.gv[r] - self.gv[i] < delta {
                while maxq.back().is_some_and(|&k| v[k] <= v[r]) {
                    maxq.pop_back();
                }
                maxq.push_back(r);
                while minq.back().is_some_and(|&k| v[k] >= v[r]) {
                    minq.pop_back();
                }
                minq.push_back(r);
                r += 1;
            }
            while maxq.front().is_some_and(|&k| k < i) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&k| k < i) {
                minq.pop_front();
            }
            if let (Some(&a), Some(&b)) = (maxq.front(), minq.front()) {
                let spread = v[a] - v[b];
                if spread.is_nan() {
                    return f64::NAN;
                }
                best = best.max(spread);
            }
        }
        best
    }
}

/// Range max/min over a fixed array.
pub(crate) struct RangeExtrema {
    n: usize,
    max: Vec<f64>,
    min: Vec<f64>,
}

impl RangeExtrema {
    pub(crate) fn new(v: &[f64]) -> Self {
        let n = v.len().max(1);
        let mut max = vec![f64::NEG_INFINITY; 2 * n];
        let mut min = vec![f64::INFINITY; 2 * n];
        for (i, &x) in v.iter().enumerate() {
            max[n + i] = x;
            min[n + i] = x;
        }
        for i in (1..n).rev() {
            max[i] = max[2 * i].max(max[2 * i + 1]);
            min[i] = min[2 * i].min(min[2 * i + 1]);
        }
        Self { n, max, min }
    }

    /// `(max, min)` over `[lo, hi)`.
    pub(crate) fn query(&self, lo: usize, hi: usize) -> (f64, f64) {
        let (mut l, mut r) = (lo + self.n, hi + self.n);
        let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
        while l < r {
            if l & 1 == 1 {
                mx = mx.max(self.max[l]);
                mn = mn.min(self.min[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                mx = mx.max(self.max[r]);
                mn = mn.min(self.min[r]);
            }
            l >>= 1;
            r >>= 1;
        }
        (mx, mn)
    }
}

/// Points of the g-ball `{s : |g(s) - g(t)| < δ}` accumulating at `t` and at
/// the ends of the ball.
pub(crate) fn ball_probes(g: &Derivator, t: f64, delta: f64) -> Vec<f64> {
    let (lo, hi) = g.g_ball(t, delta);
    let mut out = Vec::with_capacity(16);
    for k in 1..=7 {
        let w = 1.0 - 0.5f64.powi(k);
        let v = 0.5f64.powi(k + 3);
        for s in [t + (hi - t) * w, t - (t - lo) * w, t + (hi - t) * v, t - (t - lo) * v] {
            if s != t {
                out.push(s);
            }
        }
    }
    out
}

/// Coarse points of the window: a uniform grid plus every special point.
pub(crate) fn coarse_points(g: &Derivator, family: &[GFunction], n: usize) -> Vec<f64> {
    let (lo, hi) = g.window();
    let n = n.max(2);
    let mut pts: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    pts.extend(g.special_points());
    pts.extend(family.iter().flat_map(|f| f.knots().iter().copied()).filter(|&t| g.contains(t)));
    sort_dedup(&mut pts);
    pts
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter { name: "delta", reason: "grid must be non-empty and positive".into() });
    }
    Ok(())
}

/// The sample set shared by every modulus computation: dense clusters, the
/// coarse points and probes of every g-ball around them.
pub(crate) fn modulus_samples(g: &Derivator, family: &[GFunction], coarse: &[f64], deltas: &[f64]) -> Vec<f64> {
    let (lo, hi) = g.window();
    let knots: Vec<f64> = family.iter().flat_map(|f| f.knots().iter().copied()).collect();
    let mut pts = dense_samples(g, lo, hi, &knots, &GridSpec::default());
    pts.extend_from_slice(coarse);
    let probes: Vec<Vec<f64>> = coarse
        .par_iter()
        .map(|&t| deltas.iter().flat_map(|&d| ball_probes(g, t, d)).collect())
        .collect();
    pts.extend(probes.into_iter().flatten());
    pts
}

/// Uniform and pointwise g-moduli of a family. `sample_n` sets the number of
/// uniformly spaced coarse points.
pub fn g_modulus(family: &[GFunction], g: &Derivator, deltas: &[f64], sample_n: usize) -> Result<ModulusReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if sample_n < 2 {
        return Err(Error::InvalidParameter { name: "sample_n", reason: "need at least two samples".into() });
    }
    check_deltas(deltas)?;
    let mut deltas = deltas.to_vec();
    sort_dedup(&mut deltas);
    let coarse = coarse_points(g, family, sample_n);
    let sampled = Sampled::new(family, g, modulus_samples(g, family, &coarse, &deltas));
    Ok(modulus_from(&sampled, &coarse, &deltas))
}

pub(crate) fn modulus_from(sampled: &Sampled, coarse: &[f64], deltas: &[f64]) -> ModulusReport {
    let members = sampled.values.len();
    let omega = deltas
        .iter()
        .map(|&d| (0..members).map(|m| sampled.omega(m, d)).fold(0.0, f64::max))
        .collect();
    let trees: Vec<RangeExtrema> = sampled.values.par_iter().map(|v| RangeExtrema::new(v)).collect();
    let pointwise = coarse
        .iter()
        .map(|&t| {
            let i = sampled.index_of(t).expect("coarse points are sampled");
            deltas
                .iter()
                .map(|&d| {
                    let (lo, hi) = sampled.g_range(sampled.gv[i], d);
                    (0..members)
                        .map(|m| {
                            let (mx, mn) = trees[m].query(lo, hi);
                            let ft = sampled.values[m][i];
                            (mx - ft).max(ft - mn)
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    ModulusReport {
        deltas: deltas.to_vec(),
        omega,
        points: coarse.to_vec(),
        pointwise,
        sample_count: sampled.t.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RightLimitEntry {
    pub at: f64,
    /// `None` when the right limit does not exist within tolerance.
    pub value: Option<f64>,
    pub declared: bool,
}

/// `f(d^+)` at every atom of `g`.
pub fn right_limit_table(f: &GFunction, g: &Derivator, tol: f64) -> Vec<RightLimitEntry> {
    g.jumps()
        .iter()
        .map(|j| {
            let declared = f.declared_right_limit(j.at);
            let value = declared.or_else(|| right_limit(f, g, j.at, tol).ok());
            RightLimitEntry { at: j.at, value, declared: declared.is_some() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub regulated: bool,
    /// Atoms without a right limit.
    pub witnesses: Vec<f64>,
    pub table: Vec<RightLimitEntry>,
}

/// A g-continuous function is regulated iff its right limit exists at every
/// atom of `g`.
pub fn is_regulated(f: &GFunction, g: &Derivator, tol: f64) -> Regularity {
    let table = right_limit_table(f, g, tol);
    let witnesses: Vec<f64> = table.iter().filter(|e| e.value.is_none()).map(|e| e.at).collect();
    Regularity { regulated: witnesses.is_empty(), witnesses, table }
}

/// Node table interpolated by local cubics, constant outside its nodes.
/// Interpolation never reaches across a break, so each segment between two
/// consecutive breaks (a bridged gap, say) is handled on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Sorted node indices.
    pub breaks: Vec<usize>,
}

impl NodeTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, break_xs: &[f64]) -> Self {
        let mut breaks: Vec<usize> = break_xs
            .iter()
            .filter_map(|&b| {
                let i = xs.partition_point(|&v| v < b);
                (i < xs.len() && xs[i] == b).then_some(i)
            })
            .collect();
        breaks.sort_unstable();
        breaks.dedup();
        Self { xs, ys, breaks }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        if x == self.xs[i] {
            return self.ys[i];
        }
        let k = self.breaks.partition_point(|&b| b <= i);
        let r0 = if k == 0 { 0 } else { self.breaks[k - 1] };
        let r1 = self.breaks.get(k).copied().unwrap_or(n - 1);
        // outer neighbours at a spacing comparable to the segment, so that
        // clustered nodes do not amplify rounding noise
        let h = self.xs[i + 1] - self.xs[i];
        let left = self.spaced(i, r0, h, -1);
        let right = self.spaced(i + 1, r1, h, 1);
        let mut stencil = vec![i, i + 1];
        match (left, right) {
            (Some(l), Some(r)) => stencil.extend([l, r]),
            (Some(l), None) => stencil.extend(std::iter::once(l).chain(self.spaced(l, r0, h, -1))),
            (None, Some(r)) => stencil.extend(std::iter::once(r).chain(self.spaced(r, r1, h, 1))),
            (None, None) => {}
        }
        let mut sum = 0.0;
        for &a in &stencil {
            let mut w = 1.0;
            for &b in &stencil {
                if a != b {
                    w *= (x - self.xs[b]) / (self.xs[a] - self.xs[b]);
                }
            }
            sum += w * self.ys[a];
        }
        sum
    }

    /// The first node beyond `from` in direction `dir`, at least `h/2` away
    /// and not past `limit`.
    fn spaced(&self, from: usize, limit: usize, h: f64, dir: isize) -> Option<usize> {
        let mut j = from;
        while j != limit {
            j = (j as isize + dir) as usize;
            if (self.xs[j] - self.xs[from]).abs() >= 0.5 * h {
                return Some(j);
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub tilde_f: NodeTable,
    /// Pairs `(x, σ(x))` at the nodes taken from the range of `g`.
    pub sigma_table: Vec<(f64, f64)>,
    /// Gaps `(g(d), g(d^+))` of the range, bridged linearly.
    pub gap_list: Vec<(f64, f64)>,
    /// Largest `|f̃(g(t)) - f(t)|` over nodes, midpoints and right limits.
    pub reconstruction_error: f64,
    /// `ω(δ)` at the smallest scale used for the uniformity check.
    pub uniformity: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeOptions {
    /// Uniformly spaced nodes in `t`; the grid is also refined at special
    /// points.
    pub nodes: usize,
    pub recon_tol: f64,
    /// Tolerance for right limits.
    pub tol: f64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        Self { nodes: 20_001, recon_tol: 1e-6, tol: crate::DEFAULT_TOL }
    }
}

/// `σ(g(t))` without bisection: the right end of the flat of `g` through `t`,
/// or `t` itself.
pub fn sigma_at_sample(g: &Derivator, classes: &[(f64, f64)], t: f64) -> f64 {
    let (_, hi) = g.window();
    let idx = classes.partition_point(|&(_, b)| b <= t);
    match classes.get(idx) {
        Some(&(a, b)) if a < t || (a == t && g.delta(a) == 0.0) => b.min(hi),
        _ => t,
    }
}

/// Maximal flat runs of `g` itself, window boundary included.
fn flats_of(g: &Derivator) -> Vec<(f64, f64)> {
    g.classify().constancy_intervals
}

/// Builds `f̃` with `f = f̃ ∘ g`, following the constructive proof: sample
/// `h = f ∘ σ` on the range of `g`, bridge each gap `(g(d), g(d^+))` by a
/// straight line, and interpolate by local cubics between breaks.
pub fn factorize(f: &GFunction, g: &Derivator, opts: &FactorizeOptions) -> Result<FactorizationResult> {
    let reg = is_regulated(f, g, opts.tol);
    if let Some(&at) = reg.witnesses.first() {
        return Err(Error::NotRegulated { at });
    }
    let (lo, hi) = g.window();
    let mut t = dense_samples(g, lo, hi, f.knots(), &GridSpec::with_uniform(opts.nodes));

    // Uniform g-continuity at the finest sampled scale.
    let sampled = Sampled::new(std::slice::from_ref(f), g, t.clone());
    let osc = sampled.values[0].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - sampled.values[0].iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let g_span = (g.total_variation()).max(f64::MIN_POSITIVE);
    let fine = 1e-7 * g_span;
    let omega_fine = sampled.omega(0, fine);
    let limit = 1e-4 * (1.0 + osc);
    if !(omega_fine <= limit) {
        return Err(Error::NotUniform { omega: omega_fine, delta: fine, eps: limit });
    }

    let flats = flats_of(g);
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(t.len() + 2 * g.jumps().len());
    let mut sigma_table = Vec::with_capacity(t.len());
    for &s in &t {
        let x = g.value(s);
        let sig = sigma_at_sample(g, &flats, s);
        sigma_table.push((x, sig));
        nodes.push((x, f.eval(sig)));
    }
    let mut gap_list = Vec::new();
    for entry in &reg.table {
        let right = entry.value.expect("regulated");
        let j = g.jump_index(entry.at).expect("atom");
        let size = g.jumps()[j].size;
        let left_x = g.value(entry.at);
        gap_list.push((left_x, left_x + size));
        nodes.push((left_x + size, right));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes.dedup_by(|a, b| a.0 == b.0);
    sigma_table.dedup_by(|a, b| a.0 == b.0);
    let mut break_xs: Vec<f64> = gap_list.iter().flat_map(|&(a, b)| [a, b]).collect();
    break_xs.extend(g.breakpoints().iter().chain(f.knots()).map(|&s| g.value(s)));
    let tilde_f = NodeTable::new(nodes.iter().map(|n| n.0).collect(), nodes.iter().map(|n| n.1).collect(), &break_xs);

    // Validate on the nodes, the midpoints between them and at right limits.
    let mids: Vec<f64> = t.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    t.extend(mids);
    let mut err = t
        .par_iter()
        .map(|&s| (tilde_f.eval(g.value(s)) - f.eval(s)).abs())
        .reduce(|| 0.0, f64::max);
    for entry in &reg.table {
        let x = g.value(entry.at) + g.delta(entry.at);
        err = err.max((tilde_f.eval(x) - entry.value.unwrap()).abs());
    }
    if !(err <= opts.recon_tol) {
        return Err(Error::ReconstructionError { error: err, tol: opts.recon_tol });
    }
    Ok(FactorizationResult { tilde_f, sigma_table, gap_list, reconstruction_error: err, uniformity: (fine, omega_fine) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LeastSquares,
    ChebyshevNodes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassFit {
    pub degree: usize,
    pub method: FitMethod,
    /// Monomial coefficients of `p`, constant term first, so that
    /// `f ≈ Σ c_k g^k`.
    pub coefficients: Vec<f64>,
    /// Coefficients in the Chebyshev basis of the normalised variable.
    pub chebyshev: Vec<f64>,
    /// `(x_min, x_max)` used to normalise `x = g(t)` to `[-1, 1]`.
    pub range: (f64, f64),
    pub sup_error: f64,
    pub sample_count: usize,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
}

impl WeierstrassFit {
    /// `p(x)` evaluated stably through the Chebyshev form.
    pub fn eval(&self, x: f64) -> f64 {
        chebyshev_eval(&self.chebyshev, normalise(x, self.range))
    }
}

fn normalise(x: f64, (a, b): (f64, f64)) -> f64 {
    if b > a {
        (2.0 * x - (a + b)) / (b - a)
    } else {
        0.0
    }
}

fn chebyshev_eval(c: &[f64], u: f64) -> f64 {
    // Clenshaw recurrence
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + u * b1 - b2
}

/// Monomial coefficients in `x` of `Σ c_k T_k(s x + o)`.
fn chebyshev_to_monomial(c: &[f64], (a, b): (f64, f64)) -> Vec<f64> {
    let n = c.len();
    // monomial coefficients of T_k in u
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 2..n {
        let mut next = vec![0.0; k + 1];
        for (i, &v) in basis[k - 1].iter().enumerate() {
            next[i + 1] += 2.0 * v;
        }
        for (i, &v) in basis[k - 2].iter().enumerate() {
            next[i] -= v;
        }
        basis.push(next);
    }
    let mut in_u = vec![0.0; n];
    for (ck, tk) in c.iter().zip(&basis) {
        for (i, &v) in tk.iter().enumerate() {
            in_u[i] += ck * v;
        }
    }
    if !(b > a) {
        return vec![in_u.first().copied().unwrap_or(0.0)];
    }
    let s = 2.0 / (b - a);
    let o = -(a + b) / (b - a);
    // expand Σ d_i (s x + o)^i
    let mut out = vec![0.0; n];
    for (i, &d) in in_u.iter().enumerate() {
        let mut binom = 1.0;
        for k in 0..=i {
            out[k] += d * binom * s.powi(k as i32) * o.powi((i - k) as i32);
            binom = binom * (i - k) as f64 / (k + 1) as f64;
        }
    }
    out
}

/// Fits a polynomial of degree `degree` in `g` to `f`.
///
/// Samples are `sample_n` uniformly spaced points plus the special points of
/// `g`, together with the pairs `(g(d^+), f(d^+))` at atoms.
pub fn weierstrass_fit(f: &GFunction, g: &Derivator, degree: usize, sample_n: usize, method: FitMethod) -> Result<WeierstrassFit> {
    let samples = fit_samples(f, g, sample_n)?;
    fit_on_samples(f, g, &samples, degree, method)
}

/// The `(x, y)` pairs a fit is measured on.
pub fn fit_samples(f: &GFunction, g: &Derivator, sample_n: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = g.window();
    let n = sample_n.max(2);
    let mut t: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    t.extend(g.special_points());
    sort_dedup(&mut t);
    let mut pts: Vec<(f64, f64)> = t.iter().map(|&s| (g.value(s), f.eval(s))).collect();
    for j in g.jumps() {
        let right = f.declared_right_limit(j.at).map_or_else(|| right_limit(f, g, j.at, crate::DEFAULT_TOL), Ok)?;
        pts.push((g.value(j.at) + j.size, right));
    }
    if let Some(bad) = pts.iter().find(|p| !p.1.is_finite()) {
        return Err(Error::NonFinite { what: if bad.0.is_finite() { "function samples" } else { "g samples" } });
    }
    Ok(pts)
}

pub fn fit_on_samples(f: &GFunction, g: &Derivator, pts: &[(f64, f64)], degree: usize, method: FitMethod) -> Result<WeierstrassFit> {
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    sort_dedup(&mut xs);
    let distinct = xs.len();
    if distinct <= degree {
        return Err(Error::IllConditioned {
            reason: format!("{distinct} distinct g-values cannot determine degree {degree}"),
        });
    }
    let range = (xs[0], xs[distinct - 1]);
    let (chebyshev, condition) = match method {
        FitMethod::LeastSquares => least_squares(pts, degree, range)?,
        FitMethod::ChebyshevNodes => (chebyshev_interpolate(f, g, degree, range)?, 1.0),
    };
    let sup_error = pts
        .iter()
        .map(|&(x, y)| (chebyshev_eval(&chebyshev, normalise(x, range)) - y).abs())
        .fold(0.0, f64::max);
    Ok(WeierstrassFit {
        degree,
        method,
        coefficients: chebyshev_to_monomial(&chebyshev, range),
        chebyshev,
        range,
        sup_error,
        sample_count: pts.len(),
        condition,
    })
}

const MAX_CONDITION: f64 = 1e12;

fn least_squares(pts: &[(f64, f64)], degree: usize, range: (f64, f64)) -> Result<(Vec<f64>, f64)> {
    let m = pts.len();
    let cols = degree + 1;
    let mut a = DMatrix::<f64>::zeros(m, cols);
    for (i, &(x, _)) in pts.iter().enumerate() {
        let u = normalise(x, range);
        let (mut t0, mut t1) = (1.0, u);
        for k in 0..cols {
            a[(i, k)] = if k == 0 { 1.0 } else { t1 };
            if k >= 1 {
                let t2 = 2.0 * u * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
    }
    let b = DVector::from_iterator(m, pts.iter().map(|p| p.1));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { reason: format!("condition number {condition:e}") });
    }
    let sol = svd
        .solve(&b, smax * f64::EPSILON * m as f64)
        .map_err(|e| Error::IllConditioned { reason: e.to_string() })?;
    Ok((sol.iter().copied().collect(), condition))
}

/// Interpolates `f̃` at the Chebyshev points of `range`. Inside gaps of the
/// range this is the linear bridge, not `f`.
fn chebyshev_interpolate(f: &GFunction, g: &Derivator, degree: usize, range: (f64, f64)) -> Result<Vec<f64>> {
    let opts = FactorizeOptions { nodes: 4001, recon_tol: f64::INFINITY, ..FactorizeOptions::default() };
    let fac = factorize(f, g, &opts)?;
    let n = degree + 1;
    let (a, b) = range;
    let values: Vec<f64> = (0..n)
        .map(|j| {
            let u = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
            let x = 0.5 * (a + b) + 0.5 * (b - a) * u;
            // exact f̃ = f∘σ where x is attained, the bridge inside gaps
            match g.sigma(x) {
                Some(s) if (g.value(s) - x).abs() <= 1e-12 * (1.0 + x.abs()) => f.eval(s),
                _ => fac.tilde_f.eval(x),
            }
        })
        .collect();
    Ok((0..n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, &v)| v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            if k == 0 {
                s / n as f64
            } else {
                2.0 * s / n as f64
            }
        })
        .collect())
}
