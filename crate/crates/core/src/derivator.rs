//! Derivators: non-decreasing, left-continuous functions `g` on a finite window.
//!
//! A [`Derivator`] is stored as a continuous piecewise-linear part `g^C`
//! (breakpoints plus values, linearly interpolated) and a finite list of jump
//! atoms. Evaluation follows the left-continuous convention
//!
//! ```text
//! g(t) = g^C(t) + sum of sizes of atoms located strictly before t
//! ```
//!
//! so every identity in this module is exact on the representation, up to
//! floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A jump atom of size `size > 0` located at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub at: f64,
    pub size: f64,
}

/// On-disk form of a derivator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivatorSpec {
    pub window: [f64; 2],
    pub breakpoints: Vec<f64>,
    pub cont_values: Vec<f64>,
    #[serde(default)]
    pub jumps: Vec<[f64; 2]>,
    /// Upper bound on the total size of atoms not present in `jumps`.
    #[serde(default)]
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DerivatorSpec", into = "DerivatorSpec")]
pub struct Derivator {
    breakpoints: Vec<f64>,
    cont_values: Vec<f64>,
    jumps: Vec<Jump>,
    // prefix[k] = total size of jumps[..k]
    prefix: Vec<f64>,
    tail_bound: f64,
}

/// The continuous and jump parts of a derivator, both anchored to vanish at
/// the left end of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitParts {
    pub continuous: Derivator,
    pub jump: Derivator,
    /// `g(t) = continuous(t) + jump(t) + offset`.
    pub offset: f64,
}

/// Jump points, maximal constancy intervals and their non-jump endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub jump_points: Vec<f64>,
    pub constancy_intervals: Vec<(f64, f64)>,
    pub n_minus: Vec<f64>,
    pub n_plus: Vec<f64>,
}

impl PointClassification {
    /// The open constancy interval containing `t`, if any.
    pub fn constancy_interval(&self, t: f64) -> Option<(f64, f64)> {
        let idx = self.constancy_intervals.partition_point(|&(_, b)| b <= t);
        self.constancy_intervals
            .get(idx)
            .copied()
            .filter(|&(a, b)| a < t && t < b)
    }

    pub fn is_jump(&self, t: f64) -> bool {
        self.jump_points.binary_search_by(|p| p.total_cmp(&t)).is_ok()
    }

    /// Membership in `N_g = N_g^- ∪ N_g^+`.
    pub fn is_endpoint(&self, t: f64) -> bool {
        self.n_minus.contains(&t) || self.n_plus.contains(&t)
    }
}

/// Minimal-preimage inverse of a continuous part, stored as the increasing
/// linear pieces of `g^C`. Flat pieces collapse to a single value whose
/// preimage is their left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudoinverse {
    start: f64,
    lo: f64,
    hi: f64,
    // (x0, x1, t0, t1) for every strictly increasing piece
    segments: Vec<(f64, f64, f64, f64)>,
}

impl Pseudoinverse {
    /// Range of `g^C` on the window.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(Error::OutOfRange { x });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x <= self.lo {
            return self.start;
        }
        let idx = self.segments.partition_point(|s| s.1 < x);
        let Some(&(x0, x1, t0, t1)) = self.segments.get(idx) else {
            return self.segments.last().map_or(self.start, |s| s.3);
        };
        let gc = |t: f64| if t == t1 { x1 } else { (x0 + (t - t0) / (t1 - t0) * (x1 - x0)).clamp(x0, x1) };
        let t = (t0 + (x - x0) * ((t1 - t0) / (x1 - x0))).clamp(t0, t1);
        // Settle on the smallest float with g^C(t) >= x: bracket around the
        // estimate, then bisect. gc(t0) = x0 < x <= x1 = gc(t1).
        let scale = f64::EPSILON * (t.abs() + (t1 - t0));
        let (mut below, mut above) = (t, t);
        let mut step = scale;
        while gc(above) < x {
            below = above;
            above = (above + step).min(t1);
            step *= 2.0;
        }
        if below == above {
            step = scale;
            loop {
                below = (above - step).max(t0);
                if gc(below) < x {
                    break;
                }
                above = below;
                step *= 2.0;
            }
        }
        loop {
            let mid = below + 0.5 * (above - below);
            if mid <= below || mid >= above {
                return above;
            }
            if gc(mid) >= x {
                above = mid;
            } else {
                below = mid;
            }
        }
    }

    /// Images of the piece boundaries, i.e. the points where `γ` may lose
    /// smoothness.
    pub fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| [s.0, s.1])
    }
}

impl Derivator {
    /// Builds a validated derivator. Jumps are given as `(position, size)`
    /// pairs in any order.
    pub fn new(
        breakpoints: Vec<f64>,
        cont_values: Vec<f64>,
        jumps: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidBreakpoints { index: breakpoints.len() });
        }
        if breakpoints.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "breakpoints" });
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints { index: i + 1 });
        }
        if cont_values.len() != breakpoints.len() {
            return Err(Error::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: cont_values.len(),
            });
        }
        if cont_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "cont_values" });
        }
        if let Some(index) = cont_values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone { index });
        }

        let (lo, hi) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
        let mut jumps: Vec<Jump> = jumps.into_iter().map(|(at, size)| Jump { at, size }).collect();
        for j in &jumps {
            if !j.at.is_finite() || !j.size.is_finite() {
                return Err(Error::NonFinite { what: "jumps" });
            }
            if !(lo..hi).contains(&j.at) {
                return Err(Error::JumpOutOfWindow { at: j.at, lo, hi });
            }
            if j.size <= 0.0 {
                return Err(Error::NonPositiveJump { at: j.at, size: j.size });
            }
        }
        jumps.sort_by(|a, b| a.at.total_cmp(&b.at));
        if let Some(w) = jumps.windows(2).find(|w| w[0].at == w[1].at) {
            return Err(Error::DuplicateJump { at: w[0].at });
        }
        let mut prefix = Vec::with_capacity(jumps.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for j in &jumps {
            acc += j.size;
            prefix.push(acc);
        }
        Ok(Self { breakpoints, cont_values, jumps, prefix, tail_bound: 0.0 })
    }

    /// Declares a bound on the mass of atoms that are not stored.
    pub fn with_tail_bound(mut self, tail_bound: f64) -> Result<Self> {
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tail_bound",
                reason: format!("must be finite and non-negative, got {tail_bound}"),
            });
        }
        self.tail_bound = tail_bound;
        Ok(self)
    }

    /// `g(t) = t` on `[lo, hi]`.
    pub fn identity(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![lo, hi], [])
    }

    pub fn window(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cont_values(&self) -> &[f64] {
        &self.cont_values
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.window();
        (lo..=hi).contains(&t)
    }

    pub(crate) fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            let (lo, hi) = self.window();
            Err(Error::OutOfWindow { t, lo, hi })
        }
    }

    /// Value of the continuous part `g^C(t)`; clamps outside the window.
    pub fn continuous(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let v = &self.cont_values;
        let idx = bp.partition_point(|&b| b <= t);
        if idx == 0 {
            return v[0];
        }
        let i = idx - 1;
        if i + 1 >= bp.len() || t == bp[i] {
            return v[i.min(v.len() - 1)];
        }
        let frac = (t - bp[i]) / (bp[i + 1] - bp[i]);
        (v[i] + frac * (v[i + 1] - v[i])).clamp(v[i], v[i + 1])
    }

    /// Total size of atoms strictly before `t`.
    pub fn jump_mass_before(&self, t: f64) -> f64 {
        self.prefix[self.jumps.partition_point(|j| j.at < t)]
    }

    /// `g(t)` without the window check.
    pub(crate) fn value(&self, t: f64) -> f64 {
        self.continuous(t) + self.jump_mass_before(t)
    }

    /// `g(t^+)` without the window check.
    pub(crate) fn right_value(&self, t: f64) -> f64 {
        self.continuous(t) + self.prefix[self.jumps.partition_point(|j| j.at <= t)]
    }

    /// Left-continuous value `g(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.value(t))
    }

    /// Right limit `g(t^+) = g(t) + Δg(t)`; requires `t < B`.
    pub fn eval_right(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let (lo, hi) = self.window();
        if t >= hi {
            return Err(Error::OutOfWindow { t, lo, hi });
        }
        Ok(self.right_value(t))
    }

    /// Jump size `Δg(t)`; zero off the atom list.
    pub fn delta(&self, t: f64) -> f64 {
        self.jump_index(t).map_or(0.0, |k| self.jumps[k].size)
    }

    pub fn jump_index(&self, t: f64) -> Option<usize> {
        self.jumps.binary_search_by(|j| j.at.total_cmp(&t)).ok()
    }

    /// Atoms located in `[c, d)`.
    pub fn jumps_in(&self, c: f64, d: f64) -> &[Jump] {
        let i = self.jumps.partition_point(|j| j.at < c);
        let k = self.jumps.partition_point(|j| j.at < d);
        &self.jumps[i..k.max(i)]
    }

    /// `μ_{g^C}([c, d))`.
    pub fn continuous_measure(&self, c: f64, d: f64) -> f64 {
        self.continuous(d) - self.continuous(c)
    }

    /// `g(B) - g(A)`.
    pub fn total_variation(&self) -> f64 {
        let (lo, hi) = self.window();
        self.value(hi) - self.value(lo)
    }

    /// Sorted union of breakpoints and jump positions.
    pub fn special_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.breakpoints.iter().copied().chain(self.jumps.iter().map(|j| j.at)).collect();
        sort_dedup(&mut pts);
        pts
    }

    /// Continuous and jump parts, both vanishing at the window's left end.
    pub fn split(&self) -> SplitParts {
        let (lo, hi) = self.window();
        let offset = self.cont_values[0];
        let shifted: Vec<f64> = self.cont_values.iter().map(|v| v - offset).collect();
        let continuous = Derivator {
            breakpoints: self.breakpoints.clone(),
            cont_values: shifted,
            jumps: Vec::new(),
            prefix: vec![0.0],
            tail_bound: 0.0,
        };
        let jump = Derivator {
            breakpoints: vec![lo, hi],
            cont_values: vec![0.0, 0.0],
            jumps: self.jumps.clone(),
            prefix: self.prefix.clone(),
            tail_bound: self.tail_bound,
        };
        SplitParts { continuous, jump, offset }
    }

    /// Maximal runs of flat pieces of `g^C`, as closed intervals.
    fn flat_runs(&self) -> Vec<(f64, f64)> {
        let mut runs: Vec<(f64, f64)> = Vec::new();
        for (i, w) in self.cont_values.windows(2).enumerate() {
            if w[0] != w[1] {
                continue;
            }
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            match runs.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => runs.push((a, b)),
            }
        }
        runs
    }

    /// Computes `D_g`, the constancy intervals of `g` and `N_g^±`.
    ///
    /// Endpoints that coincide with the window boundary are left out of
    /// `N_g^±`, since the behaviour of `g` beyond the window is unknown.
    pub fn classify(&self) -> PointClassification {
        let (lo, hi) = self.window();
        let jump_points: Vec<f64> = self.jumps.iter().map(|j| j.at).collect();
        let mut constancy_intervals = Vec::new();
        for (a, b) in self.flat_runs() {
            let mut start = a;
            for j in self.jumps_in(a, b) {
                if j.at > a {
                    constancy_intervals.push((start, j.at));
                    start = j.at;
                }
            }
            constancy_intervals.push((start, b));
        }
        let is_jump = |t: f64| self.jump_index(t).is_some();
        let mut n_minus: Vec<f64> = constancy_intervals
            .iter()
            .map(|iv| iv.0)
            .filter(|&a| a > lo && !is_jump(a))
            .collect();
        let mut n_plus: Vec<f64> = constancy_intervals
            .iter()
            .map(|iv| iv.1)
            .filter(|&b| b < hi && !is_jump(b))
            .collect();
        sort_dedup(&mut n_minus);
        sort_dedup(&mut n_plus);
        PointClassification { jump_points, constancy_intervals, n_minus, n_plus }
    }

    /// Pseudoinverse of the continuous part of `self`. Jumps are ignored.
    pub fn pseudoinverse(&self) -> Pseudoinverse {
        let bp = &self.breakpoints;
        let v = &self.cont_values;
        let segments = (0..bp.len() - 1)
            .filter(|&i| v[i + 1] > v[i])
            .map(|i| (v[i], v[i + 1], bp[i], bp[i + 1]))
            .collect();
        Pseudoinverse { start: bp[0], lo: v[0], hi: v[v.len() - 1], segments }
    }

    /// `μ_g` of a finite union of half-open intervals `[c_i, d_i)`.
    pub fn measure(&self, intervals: &[(f64, f64)]) -> Result<f64> {
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for &(c, d) in intervals {
            if !(c <= d) {
                return Err(Error::InvalidInterval { c, d });
            }
            self.check(c)?;
            self.check(d)?;
            if c < d {
                sorted.push((c, d));
            }
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = sorted.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(Error::OverlappingIntervals { first: w[0], second: w[1] });
        }
        Ok(sorted.iter().map(|&(c, d)| self.value(d) - self.value(c)).sum())
    }

    /// The same derivator restricted to `[lo, hi]`, with values preserved.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInterval { c: lo, d: hi });
        }
        self.check(lo)?;
        self.check(hi)?;
        let shift = self.jump_mass_before(lo);
        let mut bps = vec![lo];
        bps.extend(self.breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
        bps.push(hi);
        let vals = bps.iter().map(|&b| self.continuous(b) + shift).collect();
        let jumps = self.jumps_in(lo, hi).iter().map(|j| (j.at, j.size));
        Derivator::new(bps, vals, jumps)?.with_tail_bound(self.tail_bound)
    }

    /// The open-ish interval `{s : |g(s) - g(t)| < delta}` as `(inf, sup)`.
    pub fn g_ball(&self, t: f64, delta: f64) -> (f64, f64) {
        let (lo, hi) = self.window();
        let gt = self.value(t);
        let upper = bisect_last_true(t, hi, |s| self.value(s) < gt + delta);
        let lower = bisect_first_true(lo, t, |s| self.value(s) > gt - delta);
        (lower, upper)
    }

    /// `σ(x) = sup{s in window : g(s) <= x}`, or `None` when `x < g(A)`.
    pub fn sigma(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.window();
        if self.value(lo) > x {
            return None;
        }
        Some(bisect_last_true(lo, hi, |s| self.value(s) <= x))
    }
}

/// Largest `s` in `[lo, hi]` with `pred(s)`, assuming `pred(lo)` holds and
/// `pred` is monotone (true then false).
pub(crate) fn bisect_last_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    loop {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            return a;
        }
        if pred(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Smallest `s` in `[lo, hi]` with `pred(s)`, assuming `pred(hi)` holds and
/// `pred` is monotone (false then true).
pub(crate) fn bisect_first_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    loop {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            return b;
        }
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

impl TryFrom<DerivatorSpec> for Derivator {
    type Error = Error;

    fn try_from(spec: DerivatorSpec) -> Result<Self> {
        let [lo, hi] = spec.window;
        let first = spec.breakpoints.first().copied();
        let last = spec.breakpoints.last().copied();
        if first != Some(lo) || last != Some(hi) {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!("window [{lo}, {hi}] must match the first and last breakpoints"),
            });
        }
        Derivator::new(spec.breakpoints, spec.cont_values, spec.jumps.into_iter().map(|[d, s]| (d, s)))?
            .with_tail_bound(spec.tail_bound)
    }
}

impl From<Derivator> for DerivatorSpec {
    fn from(g: Derivator) -> Self {
        let (lo, hi) = g.window();
        DerivatorSpec {
            window: [lo, hi],
            jumps: g.jumps.iter().map(|j| [j.at, j.size]).collect(),
            breakpoints: g.breakpoints,
            cont_values: g.cont_values,
            tail_bound: g.tail_bound,
        }
    }
}
