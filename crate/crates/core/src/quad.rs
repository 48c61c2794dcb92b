//! Globally adaptive Gauss–Kronrod (7/15) quadrature with mandatory breaks.
//!
//! The caller supplies the points where the integrand may be discontinuous or
//! non-smooth; they become fixed panel boundaries. Only interior nodes are ever
//! evaluated, so the value of the integrand exactly at a break is irrelevant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of panels.
pub const MAX_PANELS: usize = 20_000;

/// One Kronrod panel: returns the 15-point estimate and `|K15 - G7|`.
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]` to absolute accuracy `tol`.
///
/// `breaks` must be sorted; duplicates are ignored.
pub fn integrate(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64, max_panels: usize) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gk15(f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], value, err });
        }
    }
    if heap.is_empty() {
        return Ok(0.0);
    }
    let mut err_sum: f64 = heap.iter().map(|p| p.err).sum();
    let mut val_sum: f64 = heap.iter().map(|p| p.value).sum();
    loop {
        if !val_sum.is_finite() || !err_sum.is_finite() {
            return Err(Error::NonFinite { what: "integrand" });
        }
        if err_sum <= tol.max(50.0 * f64::EPSILON * val_sum.abs()) {
            // the running sums drift, so confirm with a fresh ordered total
            let (value, err) = totals(heap.iter().chain(done.iter()));
            if err <= tol.max(50.0 * f64::EPSILON * value.abs()) {
                return Ok(value);
            }
            err_sum = err;
            val_sum = value;
        }
        let count = heap.len() + done.len();
        let Some(worst) = heap.pop() else {
            return Err(Error::QuadratureFailure { tol, estimate: err_sum, intervals: count });
        };
        if count >= max_panels {
            return Err(Error::QuadratureFailure { tol, estimate: err_sum, intervals: count });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            done.push(worst);
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        err_sum += e1 + e2 - worst.err;
        val_sum += v1 + v2 - worst.value;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
}

fn totals<'a>(panels: impl Iterator<Item = &'a Panel>) -> (f64, f64) {
    let mut sorted: Vec<&Panel> = panels.collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = neumaier(sorted.iter().map(|p| p.value));
    let err = sorted.iter().map(|p| p.err).sum();
    (value, err)
}

/// Compensated summation in iteration order.
pub fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
