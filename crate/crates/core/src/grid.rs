//! Sampling grids that resolve the places where functions of `g` misbehave.
//!
//! A uniform grid alone misses oscillation that hides just to the right of a
//! jump, so every grid here is refined geometrically towards special points.

use crate::derivator::{sort_dedup, Derivator};

/// Geometric refinement around special points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of uniformly spaced points, endpoints included.
    pub uniform: usize,
    /// Ratio between consecutive offsets next to jump points.
    pub jump_ratio: f64,
    /// Ratio between consecutive offsets next to other special points.
    pub knot_ratio: f64,
    /// Smallest offset, relative to the grid span.
    pub floor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { uniform: 401, jump_ratio: 1.1, knot_ratio: 2.0, floor: 1e-9 }
    }
}

impl GridSpec {
    pub fn with_uniform(uniform: usize) -> Self {
        Self { uniform: uniform.max(2), ..Self::default() }
    }
}

/// Sorted sample points of `[lo, hi]`: a uniform grid, every special point of
/// `g`, the extra `knots`, and geometric clusters on both sides of each.
pub fn dense_samples(g: &Derivator, lo: f64, hi: f64, knots: &[f64], spec: &GridSpec) -> Vec<f64> {
    let span = hi - lo;
    let n = spec.uniform.max(2);
    let mut pts: Vec<f64> = (0..n).map(|i| lo + span * i as f64 / (n - 1) as f64).collect();
    pts[n - 1] = hi;
    if span <= 0.0 {
        return vec![lo];
    }
    let inside = |t: f64| (lo..=hi).contains(&t);
    let jumps: Vec<f64> = g.jumps().iter().map(|j| j.at).filter(|&t| inside(t)).collect();
    let others: Vec<f64> = g.breakpoints().iter().chain(knots).copied().filter(|&t| inside(t)).collect();
    for (centres, ratio) in [(&jumps, spec.jump_ratio), (&others, spec.knot_ratio)] {
        for &c in centres.iter() {
            pts.push(c);
            let mut off = 0.25 * span;
            while off >= spec.floor * span {
                for t in [c - off, c + off] {
                    if inside(t) {
                        pts.push(t);
                    }
                }
                off /= ratio;
            }
        }
    }
    sort_dedup(&mut pts);
    pts
}

/// `n` points spaced logarithmically in `[lo, hi]`, increasing.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo >= hi {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Offsets `h0 / 2^j`, used for one-sided limits.
pub fn halving(h0: f64, levels: usize) -> impl Iterator<Item = f64> {
    (0..levels).map(move |j| h0 / 2f64.powi(j as i32))
}
