//! Scalar functions on the window, with the jump data that numerics cannot
//! recover on their own.

use std::fmt;
use std::sync::Arc;

use crate::derivator::{sort_dedup, Derivator};

pub type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function `f` on the window of a derivator.
///
/// Besides the evaluator it may carry a table of right limits `f(d^+)`, a
/// declared g-derivative and a list of knots, i.e. points where `f` may fail
/// to be smooth. Quadrature and sampling treat the knots as breaks.
#[derive(Clone)]
pub struct GFunction {
    eval: Eval,
    right_limits: Vec<(f64, f64)>,
    gderiv: Option<Eval>,
    knots: Vec<f64>,
    continuous: bool,
    label: String,
}

impl fmt::Debug for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GFunction")
            .field("label", &self.label)
            .field("continuous", &self.continuous)
            .field("right_limits", &self.right_limits)
            .field("knots", &self.knots)
            .field("declared_gderiv", &self.gderiv.is_some())
            .finish()
    }
}

impl GFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            right_limits: Vec::new(),
            gderiv: None,
            knots: Vec::new(),
            continuous: false,
            label: label.into(),
        }
    }

    /// A function known to be continuous everywhere, so `f(t^+) = f(t)`.
    pub fn continuous(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { continuous: true, ..Self::new(label, f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::continuous(format!("{c}"), move |_| c).with_gderiv(|_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `g` itself, with its jumps, knots and g-derivative 1.
    pub fn from_derivator(g: &Derivator) -> Self {
        let gc = g.clone();
        let right = g.jumps().iter().map(|j| (j.at, g.value(j.at) + j.size)).collect();
        Self::new("g", move |t| gc.value(t))
            .with_right_limits(right)
            .with_knots(g.special_points())
            .with_gderiv(|_| 1.0)
    }

    pub fn with_right_limits(mut self, mut table: Vec<(f64, f64)>) -> Self {
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        table.dedup_by(|a, b| a.0 == b.0);
        self.right_limits = table;
        self
    }

    pub fn with_gderiv(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.gderiv = Some(Arc::new(d));
        self
    }

    pub fn without_gderiv(mut self) -> Self {
        self.gderiv = None;
        self
    }

    pub fn with_knots(mut self, mut knots: Vec<f64>) -> Self {
        knots.extend_from_slice(&self.knots);
        sort_dedup(&mut knots);
        self.knots = knots;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn right_limits(&self) -> &[(f64, f64)] {
        &self.right_limits
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn declared_gderiv(&self, t: f64) -> Option<f64> {
        self.gderiv.as_ref().map(|d| d(t))
    }

    pub fn has_gderiv(&self) -> bool {
        self.gderiv.is_some()
    }

    /// `f(d^+)` from the table, or `f(d)` for functions declared continuous.
    pub fn declared_right_limit(&self, d: f64) -> Option<f64> {
        match self.right_limits.binary_search_by(|p| p.0.total_cmp(&d)) {
            Ok(i) => Some(self.right_limits[i].1),
            Err(_) if self.continuous => Some(self.eval(d)),
            Err(_) => None,
        }
    }

    /// `h ∘ f` for a continuous `h`; right limits are mapped through `h`.
    pub fn compose(&self, label: &str, h: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Self {
        let inner = self.eval.clone();
        let h2 = h.clone();
        Self {
            eval: Arc::new(move |t| h(inner(t))),
            right_limits: self.right_limits.iter().map(|&(d, v)| (d, h2(v))).collect(),
            gderiv: None,
            knots: self.knots.clone(),
            continuous: self.continuous,
            label: format!("{label}({})", self.label),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.compose(&format!("{c}*"), move |v| c * v);
        out.label = format!("{c}*{}", self.label);
        if let Some(d) = self.gderiv.clone() {
            out.gderiv = Some(Arc::new(move |t| c * d(t)));
        }
        out
    }

    /// Pointwise combination `op(f, h)` for functions sharing a window.
    pub fn combine(&self, other: &GFunction, label: String, op: impl Fn(f64, f64) -> f64 + Send + Sync + Copy + 'static) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut points: Vec<f64> = self.right_limits.iter().chain(&other.right_limits).map(|p| p.0).collect();
        sort_dedup(&mut points);
        let right = points
            .into_iter()
            .filter_map(|d| Some((d, op(self.declared_right_limit(d)?, other.declared_right_limit(d)?))))
            .collect();
        let mut knots = self.knots.clone();
        knots.extend_from_slice(&other.knots);
        sort_dedup(&mut knots);
        Self {
            eval: Arc::new(move |t| op(a(t), b(t))),
            right_limits: right,
            gderiv: None,
            knots,
            continuous: self.continuous && other.continuous,
            label,
        }
    }

    pub fn add(&self, other: &GFunction) -> Self {
        let mut out = self.combine(other, format!("({} + {})", self.label, other.label), |x, y| x + y);
        if let (Some(d1), Some(d2)) = (self.gderiv.clone(), other.gderiv.clone()) {
            out.gderiv = Some(Arc::new(move |t| d1(t) + d2(t)));
        }
        out
    }

    pub fn sub(&self, other: &GFunction) -> Self {
        let mut out = self.combine(other, format!("({} - {})", self.label, other.label), |x, y| x - y);
        if let (Some(d1), Some(d2)) = (self.gderiv.clone(), other.gderiv.clone()) {
            out.gderiv = Some(Arc::new(move |t| d1(t) - d2(t)));
        }
        out
    }

    pub fn mul(&self, other: &GFunction) -> Self {
        self.combine(other, format!("({} * {})", self.label, other.label), |x, y| x * y)
    }

    /// `|f|^p`.
    pub fn abs_pow(&self, p: f64) -> Self {
        if p == 1.0 {
            self.compose("abs", f64::abs)
        } else {
            self.compose(&format!("abs^{p}"), move |v| v.abs().powf(p))
        }
    }
}

/// A Stieltjes–Sobolev function on `[start, end]`:
/// `u(t) = base + ∫_{[start, t)} density dμ_g`.
#[derive(Debug, Clone)]
pub struct SobolevFunction {
    pub start: f64,
    pub end: f64,
    pub base: f64,
    pub density: GFunction,
}

impl SobolevFunction {
    pub fn new(start: f64, end: f64, base: f64, density: GFunction) -> Self {
        Self { start, end, base, density }
    }

    /// The same function over the whole window of `g`.
    pub fn on_window(g: &Derivator, base: f64, density: GFunction) -> Self {
        let (lo, hi) = g.window();
        Self::new(lo, hi, base, density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::tests::g1;

    #[test]
    fn derivator_as_function() {
        let f = GFunction::from_derivator(&g1());
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.declared_right_limit(0.0), Some(1.0));
        assert_eq!(f.declared_right_limit(0.3), None);
        assert_eq!(f.declared_gderiv(0.3), Some(1.0));
    }

    #[test]
    fn combinators_carry_right_limits() {
        let g = GFunction::from_derivator(&g1());
        let sq = g.compose("sq", |v| v * v);
        assert_eq!(sq.declared_right_limit(0.0), Some(1.0));
        let shifted = g.add(&GFunction::constant(2.0));
        assert_eq!(shifted.eval(0.0), 2.0);
        assert_eq!(shifted.declared_right_limit(0.0), Some(3.0));
        assert_eq!(shifted.declared_gderiv(1.5), Some(1.0));
        let prod = g.mul(&g);
        assert_eq!(prod.declared_right_limit(0.0), Some(1.0));
        assert!(!prod.has_gderiv());
        let half = g.scale(0.5);
        assert_eq!(half.declared_right_limit(0.0), Some(0.5));
        assert_eq!(half.declared_gderiv(1.0), Some(0.5));
    }

    #[test]
    fn continuous_functions_report_their_value() {
        let f = GFunction::continuous("cos", f64::cos);
        assert_eq!(f.declared_right_limit(0.0), Some(1.0));
        let f = GFunction::new("step", |t| if t > 0.0 { 1.0 } else { 0.0 });
        assert_eq!(f.declared_right_limit(0.0), None);
    }
}
