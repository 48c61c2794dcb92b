//! Seeded random fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stj_core::{Derivator, GFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The reference derivator: slope 1 on `[-1, 0.5]`, flat on `[0.5, 1]`,
/// slope 1 on `[1, 2]`, and a unit jump at 0.
pub fn g1() -> Derivator {
    Derivator::new(vec![-1.0, 0.5, 1.0, 2.0], vec![-1.0, 0.5, 0.5, 1.5], [(0.0, 1.0)]).unwrap()
}

/// A random derivator with a few linear pieces (some flat) and up to four
/// atoms, some of them on breakpoints.
pub fn random_derivator(r: &mut ChaCha8Rng) -> Derivator {
    let lo: f64 = r.gen_range(-2.0..0.0);
    let hi = lo + r.gen_range(2.0..5.0);
    let mut bp: Vec<f64> = (0..r.gen_range(0..6)).map(|_| r.gen_range(lo..hi)).collect();
    bp.push(lo);
    bp.push(hi);
    bp.sort_by(f64::total_cmp);
    bp.dedup();
    let mut slopes: Vec<f64> = (1..bp.len()).map(|_| if r.gen_bool(0.25) { 0.0 } else { r.gen_range(0.2..2.0) }).collect();
    if slopes.iter().all(|&s| s == 0.0) {
        slopes[0] = 1.0;
    }
    let mut cont = vec![r.gen_range(-1.0..1.0)];
    for (i, s) in slopes.iter().enumerate() {
        let last = cont[i];
        cont.push(last + s * (bp[i + 1] - bp[i]));
    }
    let mut atoms: Vec<f64> = (0..r.gen_range(0..5))
        .map(|_| {
            if bp.len() > 2 && r.gen_bool(0.3) {
                bp[r.gen_range(1..bp.len() - 1)]
            } else {
                r.gen_range(lo..hi)
            }
        })
        .collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let jumps: Vec<(f64, f64)> = atoms.into_iter().map(|a| (a, r.gen_range(0.05..1.5))).collect();
    Derivator::new(bp, cont, jumps).unwrap()
}

/// Piecewise polynomial, left-continuous at its knots. Piece `k` lives on
/// `(knots[k-1], knots[k]]` and is written in powers of `t - start_k`.
#[derive(Debug, Clone)]
pub struct Piecewise {
    pub lo: f64,
    pub knots: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl Piecewise {
    fn piece(&self, k: usize, t: f64) -> f64 {
        let start = if k == 0 { self.lo } else { self.knots[k - 1] };
        let x = t - start;
        self.coeffs[k].iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.piece(self.knots.partition_point(|&k| k < t), t)
    }

    pub fn eval_right(&self, t: f64) -> f64 {
        self.piece(self.knots.partition_point(|&k| k <= t), t)
    }

    /// As a [`GFunction`] carrying its knots and its right limits at the
    /// atoms of `g`.
    pub fn to_gfunction(&self, g: &Derivator) -> GFunction {
        let me = self.clone();
        let limits = g.jumps().iter().map(|j| (j.at, self.eval_right(j.at))).collect();
        GFunction::new("piecewise", move |t| me.eval(t)).with_knots(self.knots.clone()).with_right_limits(limits)
    }
}

/// Random piecewise cubic on the window of `g`. With `regulated`, the only
/// discontinuities sit at atoms of `g`.
pub fn random_piecewise(r: &mut ChaCha8Rng, g: &Derivator, regulated: bool) -> Piecewise {
    let (lo, hi) = g.window();
    let mut knots: Vec<f64> = (0..r.gen_range(0..4)).map(|_| r.gen_range(lo..hi)).collect();
    for j in g.jumps() {
        if r.gen_bool(0.6) {
            knots.push(j.at);
        }
    }
    knots.retain(|&k| k > lo && k < hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut pw = Piecewise { lo, knots, coeffs: Vec::new() };
    for k in 0..=pw.knots.len() {
        let degree = r.gen_range(0..4);
        let mut c: Vec<f64> = (0..=degree).map(|_| r.gen_range(-1.5..1.5)).collect();
        if regulated && k > 0 && g.delta(pw.knots[k - 1]) == 0.0 {
            c[0] = pw.piece(k - 1, pw.knots[k - 1]);
        }
        pw.coeffs.push(c);
    }
    pw
}

/// A smooth function of `x`: a polynomial, a cosine or an exponential.
pub fn random_outer(r: &mut ChaCha8Rng) -> (String, std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>) {
    match r.gen_range(0..3) {
        0 => {
            let c: Vec<f64> = (0..r.gen_range(1..5)).map(|_| r.gen_range(-1.0..1.0)).collect();
            ("poly".into(), std::sync::Arc::new(move |x: f64| c.iter().rev().fold(0.0, |a, &k| a * x + k)))
        }
        1 => {
            let (w, ph) = (r.gen_range(0.5..3.0), r.gen_range(0.0..6.0));
            ("cos".into(), std::sync::Arc::new(move |x: f64| (w * x + ph).cos()))
        }
        _ => {
            let k = r.gen_range(-1.0..1.0);
            ("exp".into(), std::sync::Arc::new(move |x: f64| (k * x).exp()))
        }
    }
}

/// `h ∘ g` with right limits `h(g(d^+))`.
pub fn outer_of_g(g: &Derivator, h: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>, label: &str) -> GFunction {
    GFunction::from_derivator(g).compose(label, move |x| h(x))
}
