//! Decomposable functions: the jump series, the additive split
//! `f = f^C + f^B`, the DC norm and the multiplicative split `f = φψ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{integrate, right_limit, sup_norm};
use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::function::GFunction;
use crate::grid::{dense_samples, GridSpec};
use crate::quad::neumaier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub at: f64,
    pub left: f64,
    pub right: f64,
    /// `Δf(d) = f(d^+) - f(d)`.
    pub delta: f64,
    /// False when the right limit was extrapolated.
    pub declared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSeries {
    /// One entry per atom of `g`, in position order.
    pub entries: Vec<JumpEntry>,
    /// `Σ |Δf|`, summed by decreasing magnitude.
    pub sum: f64,
    /// Declared bound on the atom mass of `g` beyond the stored list.
    pub g_tail_bound: f64,
    pub decomposable: bool,
}

impl JumpSeries {
    pub fn delta_at(&self, d: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.at == d).map(|e| e.delta)
    }
}

fn abs_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().map(f64::abs).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    neumaier(v)
}

/// `f(d^+)`: the declared value, otherwise the extrapolated limit.
fn right_value(f: &GFunction, g: &Derivator, d: f64, tol: f64) -> Result<(f64, bool)> {
    if let Some(v) = f.declared_right_limit(d) {
        return Ok((v, true));
    }
    right_limit(f, g, d, tol).map(|v| (v, false)).map_err(|_| Error::NoRightLimit { at: d })
}

/// Jumps `Δf(d)` at every atom of `g`.
pub fn jump_series(f: &GFunction, g: &Derivator, tol: f64) -> Result<JumpSeries> {
    let entries = g
        .jumps()
        .iter()
        .map(|j| {
            let left = f.eval(j.at);
            let (right, declared) = right_value(f, g, j.at, tol)?;
            Ok(JumpEntry { at: j.at, left, right, delta: right - left, declared })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = abs_sum(entries.iter().map(|e| e.delta));
    Ok(JumpSeries { entries, sum, g_tail_bound: g.tail_bound(), decomposable: sum.is_finite() })
}

fn not_decomposable(e: Error) -> Error {
    match e {
        Error::NoRightLimit { at } => Error::NotDecomposable { reason: format!("no right limit at {at}") },
        other => other,
    }
}

fn decomposable_series(f: &GFunction, g: &Derivator, tol: f64) -> Result<JumpSeries> {
    let series = jump_series(f, g, tol).map_err(not_decomposable)?;
    if !series.decomposable {
        return Err(Error::NotDecomposable { reason: "jump sum is not finite".into() });
    }
    Ok(series)
}

/// A step function `t ↦ Σ_{d < t} steps(d)` with the steps applied in
/// position order.
fn running_sum(points: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    let at: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut prefix = Vec::with_capacity(points.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &(_, v) in &points {
        // Neumaier running total
        let t = acc + v;
        comp += if acc.abs() >= v.abs() { (acc - t) + v } else { (v - t) + acc };
        acc = t;
        prefix.push(acc + comp);
    }
    (at, prefix)
}

#[derive(Debug, Clone)]
pub struct AdditiveSplit {
    /// `f^B(t) = Σ_{d ∈ [a,t)} Δf(d)`.
    pub f_b: GFunction,
    /// `f^C = f - f^B`.
    pub f_c: GFunction,
    pub series: JumpSeries,
    pub jump_sum: f64,
    /// `(d, |f^C(d^+) - f^C(d)|)` per atom.
    pub residuals: Vec<(f64, f64)>,
    pub max_residual: f64,
    /// Largest gap between the running sum and `∫_{[a,t)} h dμ_g`,
    /// `h = Δf/Δg` on atoms and 0 elsewhere.
    pub integral_gap: f64,
}

/// Splits `f` into its continuous part and its jump part.
pub fn additive_split(f: &GFunction, g: &Derivator, tol: f64) -> Result<AdditiveSplit> {
    let series = decomposable_series(f, g, tol)?;
    let (at, prefix) = running_sum(series.entries.iter().map(|e| (e.at, e.delta)).collect());
    let at = Arc::new(at);
    let prefix = Arc::new(prefix);
    let fb_at = {
        let (at, prefix) = (at.clone(), prefix.clone());
        move |t: f64| prefix[at.partition_point(|&d| d < t)]
    };
    let fb_right: Vec<(f64, f64)> =
        at.iter().enumerate().map(|(k, &d)| (d, prefix[k + 1])).collect();
    let f_b = GFunction::new("f^B", fb_at.clone())
        .with_right_limits(fb_right.clone())
        .with_knots(at.to_vec());
    let fv = f.clone();
    let fb2 = fb_at.clone();
    let fc_right: Vec<(f64, f64)> = series
        .entries
        .iter()
        .zip(&fb_right)
        .map(|(e, &(d, b))| (d, e.right - b))
        .collect();
    let f_c = GFunction::new("f^C", move |t| fv.eval(t) - fb2(t))
        .with_right_limits(fc_right.clone())
        .with_knots(f.knots().to_vec());
    let residuals: Vec<(f64, f64)> =
        fc_right.iter().map(|&(d, r)| (d, (r - f_c.eval(d)).abs())).collect();
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);

    let h_table: Vec<(f64, f64)> = series
        .entries
        .iter()
        .map(|e| (e.at, e.delta / g.delta(e.at)))
        .collect();
    let h_table = Arc::new(h_table);
    let h = GFunction::new("h", {
        let h_table = h_table.clone();
        move |t| {
            h_table
                .binary_search_by(|p| p.0.total_cmp(&t))
                .map_or(0.0, |k| h_table[k].1)
        }
    })
    .with_knots(at.to_vec());
    let (lo, hi) = g.window();
    let mut integral_gap = 0.0_f64;
    for t in dense_samples(g, lo, hi, &at, &GridSpec::with_uniform(41)) {
        let integral = integrate(&h, g, lo, t, tol)?;
        integral_gap = integral_gap.max((integral - fb_at(t)).abs());
    }
    let jump_sum = series.sum;
    Ok(AdditiveSplit { f_b, f_c, series, jump_sum, residuals, max_residual, integral_gap })
}

/// `‖f‖_∞ + Σ |Δf|` over the window of `g`.
pub fn dc_norm(f: &GFunction, g: &Derivator, tol: f64) -> Result<f64> {
    let series = decomposable_series(f, g, tol)?;
    let (lo, hi) = g.window();
    Ok(sup_norm(f, g, lo, hi) + series.sum)
}

#[derive(Debug, Clone)]
pub struct MultiplicativeSplit {
    /// `φ(t) = Π_{d ∈ D_{g,f} ∩ [a,t)} (1 + Δf(d)/f(d))`.
    pub phi: GFunction,
    /// `ψ = f/φ`.
    pub psi: GFunction,
    pub alpha: f64,
    /// `Σ |log f(d^+) - log f(d)|` over `D_{g,f}`.
    pub log_sum: f64,
    /// Atoms where `f` jumps.
    pub d_gf: Vec<f64>,
    /// `φ(d^+)` after each atom of `D_{g,f}`, from the product.
    pub phi_steps: Vec<(f64, f64)>,
    /// Largest disagreement between the product, the exponential of the
    /// log sum and the running form `1 + Σ (Δf/f)(s) φ(s)`.
    pub form_gap: f64,
    /// `(d, |ψ(d^+) - ψ(d)|)` per atom of `g`.
    pub psi_residuals: Vec<(f64, f64)>,
    pub max_psi_residual: f64,
    pub phi_min: f64,
    /// `exp(-log_sum)`, a lower bound for `φ`.
    pub phi_lower_bound: f64,
}

/// Writes `f = φψ` with `φ` a pure jump product and `ψ` continuous at every
/// atom. Real logarithms are used, so every ratio `f(d^+)/f(d)` must be
/// positive; `alpha` only labels the branch.
pub fn multiplicative_split(f: &GFunction, g: &Derivator, alpha: f64, tol: f64) -> Result<MultiplicativeSplit> {
    let series = decomposable_series(f, g, tol)?;
    let jumping: Vec<&JumpEntry> = series
        .entries
        .iter()
        .filter(|e| e.delta.abs() > if e.declared { 0.0 } else { tol })
        .collect();
    for e in &jumping {
        if e.left == 0.0 || e.right == 0.0 || vanishes_right_of(f, g, e.at) {
            return Err(Error::ZeroNearJump { at: e.at });
        }
    }
    let mut logs = Vec::with_capacity(jumping.len());
    let mut ratios = Vec::with_capacity(jumping.len());
    for e in &jumping {
        let ratio = 1.0 + e.delta / e.left;
        if !(ratio > 0.0) {
            return Err(Error::BranchViolation { at: e.at, factor: ratio });
        }
        ratios.push(ratio);
        logs.push(ratio.ln());
    }
    let log_sum = abs_sum(logs.iter().copied());
    if !log_sum.is_finite() {
        return Err(Error::LogSumDiverges);
    }

    let d_gf: Vec<f64> = jumping.iter().map(|e| e.at).collect();
    let mut product = vec![1.0];
    let mut exp_form = vec![1.0];
    let mut running = vec![1.0];
    let (mut log_acc, mut run_acc) = (0.0, 1.0);
    for (k, e) in jumping.iter().enumerate() {
        product.push(product[k] * ratios[k]);
        log_acc += logs[k];
        exp_form.push(log_acc.exp());
        run_acc += e.delta / e.left * running[k];
        running.push(run_acc);
    }
    let form_gap = product
        .iter()
        .zip(&exp_form)
        .zip(&running)
        .map(|((p, e), r)| (p - e).abs().max((p - r).abs()))
        .fold(0.0, f64::max);
    let phi_steps: Vec<(f64, f64)> = d_gf.iter().zip(&product[1..]).map(|(&d, &v)| (d, v)).collect();

    let at = Arc::new(d_gf.clone());
    let values = Arc::new(product);
    let phi_at = {
        let (at, values) = (at.clone(), values.clone());
        move |t: f64| values[at.partition_point(|&d| d < t)]
    };
    let phi = GFunction::new("phi", phi_at.clone())
        .with_right_limits(phi_steps.clone())
        .with_knots(d_gf.clone());
    let fv = f.clone();
    let phi2 = phi_at.clone();
    let psi_right: Vec<(f64, f64)> = series
        .entries
        .iter()
        .map(|e| {
            let k = at.partition_point(|&d| d <= e.at);
            (e.at, e.right / values[k])
        })
        .collect();
    let psi = GFunction::new("psi", move |t| fv.eval(t) / phi2(t))
        .with_right_limits(psi_right.clone())
        .with_knots(f.knots().to_vec());
    let psi_residuals: Vec<(f64, f64)> =
        psi_right.iter().map(|&(d, r)| (d, (r - psi.eval(d)).abs())).collect();
    let max_psi_residual = psi_residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let phi_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MultiplicativeSplit {
        phi,
        psi,
        alpha,
        log_sum,
        d_gf,
        phi_steps,
        form_gap,
        psi_residuals,
        max_psi_residual,
        phi_min,
        phi_lower_bound: (-log_sum).exp(),
    })
}

/// True if some sample of `(d, d + h)` has `f = 0`, for every `h` on a
/// halving ladder toward `d`.
fn vanishes_right_of(f: &GFunction, g: &Derivator, d: f64) -> bool {
    let (_, hi) = g.window();
    let next = g.special_points().into_iter().find(|&s| s > d).unwrap_or(hi);
    let h0 = (next - d).min(hi - d);
    if !(h0 > 0.0) {
        return false;
    }
    (1..=40).all(|k| {
        let h = h0 * 0.5f64.powi(k);
        (1..=4).any(|i| f.eval(d + h * i as f64 / 4.0) == 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::tests::g1;
    use crate::exponential::{exp_function, ExpSpec};
    use crate::gfunc::tests::oscillating;

    #[test]
    fn jump_series_examples() {
        let g = g1();
        let s = jump_series(&GFunction::from_derivator(&g), &g, 1e-8).unwrap();
        assert_eq!(s.delta_at(0.0), Some(1.0));
        assert_eq!(s.sum, 1.0);
        assert!(s.decomposable);
        let s = jump_series(&GFunction::continuous("cos", f64::cos), &g, 1e-8).unwrap();
        assert_eq!(s.sum, 0.0);
        let (g, f) = oscillating();
        assert_eq!(jump_series(&f, &g, 1e-8).unwrap_err(), Error::NoRightLimit { at: 0.0 });
    }

    #[test]
    fn extrapolated_right_limit() {
        let g = g1();
        let f = GFunction::new("g^2", {
            let g = g.clone();
            move |t| g.value(t).powi(2)
        });
        let s = jump_series(&f, &g, 1e-10).unwrap();
        assert!((s.entries[0].delta - 1.0).abs() < 1e-9);
        assert!(!s.entries[0].declared);
    }

    #[test]
    fn additive_split_of_g() {
        let g = g1();
        let f = GFunction::from_derivator(&g);
        let s = additive_split(&f, &g, 1e-10).unwrap();
        assert_eq!(s.f_b.eval(0.0), 0.0);
        assert_eq!(s.f_b.eval(0.1), 1.0);
        assert_eq!(s.f_b.declared_right_limit(0.0), Some(1.0));
        for t in [-1.0, -0.5, 0.0, 0.3, 0.7, 1.5, 2.0] {
            assert_eq!(s.f_b.eval(t) + s.f_c.eval(t), f.eval(t));
            assert!((s.f_c.eval(t) - g.continuous(t)).abs() < 1e-15);
        }
        assert_eq!(s.max_residual, 0.0);
        assert!(s.integral_gap < 1e-12);
    }

    #[test]
    fn additive_split_of_continuous() {
        let g = g1();
        let f = GFunction::continuous("sin", f64::sin);
        let s = additive_split(&f, &g, 1e-10).unwrap();
        assert_eq!(s.f_b.eval(1.0), 0.0);
        assert_eq!(s.f_c.eval(1.0), 1f64.sin());
        let (g, f) = oscillating();
        assert!(matches!(additive_split(&f, &g, 1e-8), Err(Error::NotDecomposable { .. })));
    }

    #[test]
    fn dc_norm_examples() {
        let g = g1();
        assert_eq!(dc_norm(&GFunction::from_derivator(&g), &g, 1e-10).unwrap(), 3.5);
        assert_eq!(dc_norm(&GFunction::zero(), &g, 1e-10).unwrap(), 0.0);
        let step = GFunction::new("step", |t| if t > 0.0 { 1.0 } else { 0.0 })
            .with_right_limits(vec![(0.0, 1.0)])
            .with_knots(vec![0.0]);
        assert_eq!(dc_norm(&step, &g, 1e-10).unwrap(), 2.0);
    }

    #[test]
    fn multiplicative_split_of_shifted_g() {
        let g = g1();
        let f = GFunction::from_derivator(&g).add(&GFunction::constant(2.0));
        let m = multiplicative_split(&f, &g, 0.0, 1e-10).unwrap();
        assert_eq!(m.d_gf, vec![0.0]);
        assert_eq!(m.phi.eval(-0.5), 1.0);
        assert_eq!(m.phi.eval(0.0), 1.0);
        assert_eq!(m.phi.eval(0.2), 1.5);
        assert_eq!(m.psi.eval(0.0), 2.0);
        assert_eq!(m.psi.declared_right_limit(0.0), Some(2.0));
        assert!(m.max_psi_residual <= 1e-12);
        assert!(m.form_gap <= 1e-15);
        assert!(m.phi_min >= m.phi_lower_bound);
    }

    #[test]
    fn multiplicative_split_of_exponential() {
        let g = g1();
        let e = exp_function(&ExpSpec::constant(1.0, -1.0), &g, 1e-12).unwrap();
        let m = multiplicative_split(&e, &g, 0.0, 1e-10).unwrap();
        assert!((m.phi_steps[0].1 - 2.0).abs() < 1e-14);
        assert!(m.max_psi_residual <= 1e-9);
        // ψ is the exponential of the continuous part
        for t in [-0.5, 0.5, 1.5] {
            assert!((m.psi.eval(t) - g.continuous_measure(-1.0, t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplicative_split_errors() {
        let g = g1();
        let f = GFunction::from_derivator(&g);
        assert_eq!(multiplicative_split(&f, &g, 0.0, 1e-10).unwrap_err(), Error::ZeroNearJump { at: 0.0 });
        let f = GFunction::from_derivator(&g).add(&GFunction::constant(-0.5));
        assert!(matches!(multiplicative_split(&f, &g, 0.0, 1e-10), Err(Error::BranchViolation { .. })));
        let f = GFunction::continuous("2+sin", |t| 2.0 + t.sin());
        let m = multiplicative_split(&f, &g, 0.0, 1e-10).unwrap();
        assert!(m.d_gf.is_empty());
        assert_eq!(m.phi.eval(1.0), 1.0);
        assert_eq!(m.psi.eval(1.0), f.eval(1.0));
    }
}
