//! Finite-scale certificates for precompactness in `BC_g`, `BUC_g`, `ℓ^p`,
//! `L^p_g` and `DC_g`, and greedy ε-nets.
//!
//! Every check runs at a fixed resolution. A passing certificate says the
//! necessary conditions hold on the sampled points at the given thresholds;
//! it is never a proof.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::lp_norm;
use crate::decompose::{dc_norm, jump_series, JumpSeries};
use crate::derivator::{sort_dedup, Derivator};
use crate::error::{Error, Result};
use crate::function::GFunction;
use crate::gfunc::{coarse_points, modulus_from, modulus_samples, ModulusReport, RangeExtrema, Sampled};
use crate::grid::log_grid;
use crate::quad::{self, MAX_PANELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Conjunction: any failure fails, otherwise any gap is inconclusive.
    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Self {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub index: usize,
    pub name: String,
    pub verdict: Verdict,
    pub measured: BTreeMap<String, f64>,
    /// A point (or index) where the condition fails.
    pub witness: Option<f64>,
}

impl Condition {
    fn new(index: usize, name: &str, verdict: Verdict) -> Self {
        Self { index, name: name.into(), verdict, measured: BTreeMap::new(), witness: None }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.into(), value);
        self
    }

    fn witness(mut self, w: Option<f64>) -> Self {
        self.witness = w;
        self
    }
}

/// A sampled curve for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: String,
    pub conditions: Vec<Condition>,
    pub verdict: Verdict,
    pub finite_scale: bool,
    pub params: BTreeMap<String, f64>,
    pub deltas: Vec<f64>,
    pub sample_count: usize,
    /// Atom order used by tail conditions.
    pub enumeration: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl Certificate {
    fn new(criterion: &str, conditions: Vec<Condition>) -> Self {
        let verdict = Verdict::all(conditions.iter().map(|c| c.verdict));
        Self {
            criterion: criterion.into(),
            conditions,
            verdict,
            finite_scale: true,
            params: BTreeMap::new(),
            deltas: Vec::new(),
            sample_count: 0,
            enumeration: Vec::new(),
            curves: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn condition(&self, index: usize) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.index == index)
    }

    pub fn passes(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// A finite family of functions on the window of a derivator.
#[derive(Debug, Clone)]
pub struct FamilySample {
    pub members: Vec<GFunction>,
    /// Declared bound on `∫ |f|^p dμ_g` outside the window, for every member.
    pub outside_mass: Option<f64>,
    /// Uniformly spaced coarse points per window.
    pub sample_n: usize,
}

impl FamilySample {
    pub fn new(members: Vec<GFunction>) -> Self {
        Self { members, outside_mass: None, sample_n: 101 }
    }

    pub fn with_outside_mass(mut self, mass: f64) -> Self {
        self.outside_mass = Some(mass);
        self
    }

    pub fn with_sample_n(mut self, n: usize) -> Self {
        self.sample_n = n;
        self
    }

    fn check(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(())
    }
}

/// Largest number of classes tried by the g-stability search.
pub const COVERING_CAP: usize = 64;

/// Shared samples for the `BC_g` and `BUC_g` checks.
struct Scan {
    sampled: Sampled,
    deltas: Vec<f64>,
    modulus: ModulusReport,
    trees: Vec<RangeExtrema>,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "eps", reason: format!("must be positive, got {eps}") })
    }
}

fn scan(family: &FamilySample, g: &Derivator, deltas: &[f64]) -> Result<Scan> {
    family.check()?;
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter { name: "delta", reason: "grid must be non-empty and positive".into() });
    }
    let mut deltas = deltas.to_vec();
    sort_dedup(&mut deltas);
    let coarse = coarse_points(g, &family.members, family.sample_n);
    let mut pts = modulus_samples(g, &family.members, &coarse, &deltas);
    // right neighbourhoods of the atoms at every δ
    for j in g.jumps() {
        for &d in &deltas {
            for k in 1..=32 {
                let s = j.at + d * 0.5f64.powi(k) * 1.5;
                if s < j.at + d && g.contains(s) {
                    pts.push(s);
                }
            }
        }
    }
    let sampled = Sampled::new(&family.members, g, pts);
    let modulus = modulus_from(&sampled, &coarse, &deltas);
    let trees = sampled.values.par_iter().map(|v| RangeExtrema::new(v)).collect();
    Ok(Scan { sampled, deltas, modulus, trees })
}

/// Indices of samples in `(d, d + delta)`.
fn right_window(sampled: &Sampled, d: f64, delta: f64) -> (usize, usize) {
    let lo = sampled.t.partition_point(|&t| t <= d);
    let hi = sampled.t.partition_point(|&t| t < d + delta);
    (lo, hi.max(lo))
}

fn boundedness(family: &FamilySample, scan: &Scan) -> Condition {
    let mut bound = 0.0_f64;
    let mut witness = None;
    for (m, v) in scan.sampled.values.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            if !x.is_finite() {
                witness.get_or_insert(scan.sampled.t[i]);
            } else {
                bound = bound.max(x.abs());
            }
        }
        for &(d, r) in family.members[m].right_limits() {
            if r.is_finite() {
                bound = bound.max(r.abs());
            } else {
                witness.get_or_insert(d);
            }
        }
    }
    Condition::new(1, "pointwise_bounded", Verdict::of(witness.is_none()))
        .with("bound", bound)
        .witness(witness)
}

/// First-fit partition of the samples `lo..hi` into classes on which every
/// member oscillates by less than `eps`. `None` past the cap.
fn first_fit_cover(values: &[Vec<f64>], lo: usize, hi: usize, eps: f64) -> Option<usize> {
    let members = values.len();
    // per class, per member: (min, max)
    let mut classes: Vec<Vec<(f64, f64)>> = Vec::new();
    for i in lo..hi {
        let fits = |c: &Vec<(f64, f64)>| {
            (0..members).all(|m| {
                let v = values[m][i];
                let (mn, mx) = c[m];
                v.max(mx) - v.min(mn) < eps
            })
        };
        match classes.iter().position(fits) {
            Some(k) => {
                for m in 0..members {
                    let v = values[m][i];
                    let (mn, mx) = classes[k][m];
                    classes[k][m] = (mn.min(v), mx.max(v));
                }
            }
            None => {
                if classes.len() == COVERING_CAP {
                    return None;
                }
                classes.push((0..members).map(|m| (values[m][i], values[m][i])).collect());
            }
        }
    }
    Some(classes.len().max(1))
}

/// Precompactness in `BC_g`: pointwise boundedness, g-equicontinuity at the
/// coarse points and g-stability at every atom.
///
/// Equicontinuity holds at a point when some `δ` of the grid gives a
/// pointwise modulus below `eps`. g-stability holds at an atom `d` when for
/// some `δ` the samples of `(d, d + δ)` split into at most
/// [`COVERING_CAP`] classes of oscillation below `eps`.
pub fn bc_diagnose(family: &FamilySample, g: &Derivator, eps: f64, deltas: &[f64]) -> Result<Certificate> {
    check_eps(eps)?;
    let scan = scan(family, g, deltas)?;
    let c1 = boundedness(family, &scan);
    let c2 = bc_equicontinuity(&scan, eps);
    let c3 = bc_stability(g, &scan, eps);
    Ok(finish("bc", vec![c1, c2, c3], &scan, eps))
}

fn bc_equicontinuity(scan: &Scan, eps: f64) -> Condition {
    let r = &scan.modulus;
    let mut worst = 0.0_f64;
    let mut witness = None;
    let mut best_at = Vec::with_capacity(r.points.len());
    for (t, row) in r.points.iter().zip(&r.pointwise) {
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        best_at.push(best);
        if !(best < eps) && witness.is_none() {
            witness = Some(*t);
        }
        worst = worst.max(best);
    }
    Condition::new(2, "g_equicontinuous", Verdict::of(witness.is_none()))
        .with("worst_pointwise_modulus", worst)
        .witness(witness)
}

fn bc_stability(g: &Derivator, scan: &Scan, eps: f64) -> Condition {
    let covers: Vec<Option<usize>> = g
        .jumps()
        .par_iter()
        .map(|j| {
            scan.deltas
                .iter()
                .filter_map(|&d| {
                    let (lo, hi) = right_window(&scan.sampled, j.at, d);
                    first_fit_cover(&scan.sampled.values, lo, hi, eps)
                })
                .min()
        })
        .collect();
    let witness = g.jumps().iter().zip(&covers).find(|(_, c)| c.is_none()).map(|(j, _)| j.at);
    let largest = covers.iter().flatten().copied().max().unwrap_or(0);
    Condition::new(3, "g_stable", Verdict::of(witness.is_none()))
        .with("largest_covering", largest as f64)
        .with("covering_cap", COVERING_CAP as f64)
        .witness(witness)
}

fn finish(criterion: &str, conditions: Vec<Condition>, scan: &Scan, eps: f64) -> Certificate {
    let mut cert = Certificate::new(criterion, conditions).param("eps", eps);
    cert.deltas = scan.deltas.clone();
    cert.sample_count = scan.sampled.t.len();
    cert.curves.push(Curve { name: "omega".into(), x: scan.deltas.clone(), y: scan.modulus.omega.clone() });
    cert
}

/// Precompactness in `BUC_g`: pointwise boundedness, a uniform g-modulus
/// below `eps` at some `δ`, and uniform right limits at the atoms, i.e. for
/// every atom some `δ` on which every member oscillates by less than `eps`
/// over `(d, d + δ)`.
pub fn buc_diagnose(family: &FamilySample, g: &Derivator, eps: f64, deltas: &[f64]) -> Result<Certificate> {
    check_eps(eps)?;
    let scan = scan(family, g, deltas)?;
    let c1 = boundedness(family, &scan);
    let omega = &scan.modulus.omega;
    let best = omega.iter().copied().fold(f64::INFINITY, f64::min);
    let witness = if best < eps {
        None
    } else {
        worst_pair(&scan, scan.deltas[0])
    };
    let c2 = Condition::new(2, "uniformly_g_equicontinuous", Verdict::of(best < eps))
        .with("smallest_modulus", best)
        .witness(witness);

    let members = scan.sampled.values.len();
    let defects: Vec<f64> = g
        .jumps()
        .iter()
        .map(|j| {
            scan.deltas
                .iter()
                .map(|&d| {
                    let (lo, hi) = right_window(&scan.sampled, j.at, d);
                    if lo >= hi {
                        return 0.0;
                    }
                    (0..members)
                        .map(|m| {
                            let (mx, mn) = scan.trees[m].query(lo, hi);
                            mx - mn
                        })
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let witness = g.jumps().iter().zip(&defects).find(|(_, &v)| !(v < eps)).map(|(j, _)| j.at);
    let c3 = Condition::new(3, "uniform_right_limits", Verdict::of(witness.is_none()))
        .with("largest_cauchy_defect", defects.iter().copied().fold(0.0, f64::max))
        .witness(witness);
    let mut cert = finish("buc", vec![c1, c2, c3], &scan, eps);
    cert.curves.push(Curve { name: "cauchy_defect".into(), x: g.jumps().iter().map(|j| j.at).collect(), y: defects });
    Ok(cert)
}

/// The sample where the uniform modulus at `delta` is largest, as a witness.
fn worst_pair(scan: &Scan, delta: f64) -> Option<f64> {
    let s = &scan.sampled;
    let mut best = (0.0, None);
    for (m, tree) in scan.trees.iter().enumerate() {
        for i in 0..s.t.len() {
            let (lo, hi) = s.g_range(s.gv[i], delta);
            let (mx, mn) = tree.query(lo, hi);
            let v = s.values[m][i];
            let spread = (mx - v).max(v - mn);
            if spread > best.0 {
                best = (spread, Some(s.t[i]));
            }
        }
    }
    best.1
}

/// A truncated sequence and a bound on `Σ_{k > len} |x_k|^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSequence {
    pub values: Vec<f64>,
    pub tail_bound: Option<f64>,
}

impl TruncatedSequence {
    pub fn new(values: Vec<f64>, tail_bound: f64) -> Self {
        Self { values, tail_bound: Some(tail_bound) }
    }
}

fn check_finite_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "p", reason: format!("must lie in [1, inf), got {p}") })
    }
}

/// Total boundedness in `ℓ^p`: pointwise bounds and the tail condition
/// `Σ_{k > n} |x_k|^p < eps^p` uniformly.
///
/// The tail must drop below `eps^p` at some `n ≤ n_max`, by default one
/// less than the longest stored sequence: a tail met only by storing
/// everything is a failure at truncation.
pub fn lp_seq_diagnose(family: &[TruncatedSequence], p: f64, eps: f64, n_max: Option<usize>) -> Result<Certificate> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_finite_p(p)?;
    check_eps(eps)?;
    let mut tails_declared = Vec::with_capacity(family.len());
    for (i, x) in family.iter().enumerate() {
        tails_declared.push(x.tail_bound.ok_or(Error::MissingTailBound { index: i })?);
    }
    let len = family.iter().map(|x| x.values.len()).max().unwrap_or(0);
    let mut bounds = vec![0.0_f64; len];
    let mut witness = None;
    for x in family {
        for (k, v) in x.values.iter().enumerate() {
            if v.is_finite() {
                bounds[k] = bounds[k].max(v.abs());
            } else {
                witness.get_or_insert(k as f64 + 1.0);
            }
        }
    }
    let c1 = Condition::new(1, "pointwise_bounded", Verdict::of(witness.is_none()))
        .with("bound", bounds.iter().copied().fold(0.0, f64::max))
        .witness(witness);

    // tail[n] = max_x Σ_{k > n} |x_k|^p + declared tail, 1-based n
    let mut tail = vec![0.0_f64; len + 1];
    for (x, &declared) in family.iter().zip(&tails_declared) {
        let mut acc = declared;
        let mut own = vec![0.0; len + 1];
        own[len] = acc;
        for n in (0..len).rev() {
            acc += x.values.get(n).map_or(0.0, |v| v.abs().powf(p));
            own[n] = acc;
        }
        for n in 0..=len {
            tail[n] = tail[n].max(own[n]);
        }
    }
    let target = eps.powf(p);
    let minimal = tail.iter().position(|&t| t < target);
    let n_max = n_max.unwrap_or(len.saturating_sub(1));
    let ok = minimal.is_some_and(|n| n <= n_max);
    let c2 = Condition::new(2, "uniform_tail", Verdict::of(ok))
        .with("minimal_n", minimal.map_or(f64::INFINITY, |n| n as f64))
        .with("n_max", n_max as f64)
        .with("tail_at_n_max", tail[n_max.min(len)])
        .witness(if ok { None } else { Some(n_max as f64) });
    let mut cert = Certificate::new("lp_seq", vec![c1, c2]).param("p", p).param("eps", eps);
    cert.curves.push(Curve { name: "tail".into(), x: (0..=len).map(|n| n as f64).collect(), y: tail });
    cert.curves.push(Curve { name: "pointwise_bound".into(), x: (1..=len).map(|k| k as f64).collect(), y: bounds });
    Ok(cert)
}

/// Thresholds for [`lp_diagnose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub p: f64,
    pub eps: f64,
    /// Atoms kept before the jump tail; defaults to all stored atoms.
    pub n: Option<usize>,
    /// Radius in the range of `g^C` beyond which mass must be small.
    pub r: f64,
    /// Largest translation.
    pub rho: f64,
    /// Number of translations tried in `(0, rho]`.
    pub h_count: usize,
    pub tol: f64,
}

impl LpParams {
    pub fn new(p: f64, eps: f64, r: f64, rho: f64) -> Self {
        Self { p, eps, n: None, r, rho, h_count: 12, tol: 1e-10 }
    }
}

/// Atoms sorted by decreasing size, then by position.
pub fn enumerate_atoms(g: &Derivator) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = g.jumps().iter().map(|j| (j.at, j.size)).collect();
    atoms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    atoms
}

/// Total boundedness in `L^p_g`: boundedness at each atom, a uniform jump
/// tail, small mass beyond radius `R` in the range of `g^C`, and a uniform
/// translation modulus of `f∘γ` below `rho`.
///
/// Mass outside the window is taken from the family's declared
/// `outside_mass`; without it the radius condition is inconclusive unless
/// the mass inside already fails.
pub fn lp_diagnose(family: &FamilySample, g: &Derivator, params: &LpParams) -> Result<Certificate> {
    family.check()?;
    check_finite_p(params.p)?;
    check_eps(params.eps)?;
    for (name, v) in [("r", params.r), ("rho", params.rho)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter { name, reason: format!("must be finite and non-negative, got {v}") });
        }
    }
    let p = params.p;
    let target = params.eps.powf(p);
    let atoms = enumerate_atoms(g);
    let members = &family.members;

    // 1. boundedness at atoms
    let at_atoms: Vec<Vec<f64>> = members.iter().map(|f| atoms.iter().map(|a| f.eval(a.0)).collect()).collect();
    let mut witness = None;
    let mut bound = 0.0_f64;
    for row in &at_atoms {
        for (k, v) in row.iter().enumerate() {
            if v.is_finite() {
                bound = bound.max(v.abs());
            } else {
                witness.get_or_insert(atoms[k].0);
            }
        }
    }
    let c1 = Condition::new(1, "bounded_at_atoms", Verdict::of(witness.is_none()))
        .with("bound", bound)
        .witness(witness);

    // 2. jump tail Σ_{k > n} |f(d_k)|^p Δg(d_k), plus the declared atom mass
    // beyond the list weighted by the sampled sup
    let n = params.n.unwrap_or(atoms.len()).min(atoms.len());
    let (lo, hi) = g.window();
    let tail_weight = if g.tail_bound() > 0.0 {
        members.iter().map(|f| crate::calculus::sup_norm(f, g, lo, hi)).fold(0.0, f64::max).powf(p) * g.tail_bound()
    } else {
        0.0
    };
    let mut tail = vec![0.0_f64; atoms.len() + 1];
    for row in &at_atoms {
        let mut acc = tail_weight;
        let mut own = vec![acc; atoms.len() + 1];
        for k in (0..atoms.len()).rev() {
            acc += row[k].abs().powf(p) * atoms[k].1;
            own[k] = acc;
        }
        for k in 0..=atoms.len() {
            tail[k] = tail[k].max(own[k]);
        }
    }
    let c2 = Condition::new(2, "uniform_jump_tail", Verdict::of(tail[n] < target))
        .with("n", n as f64)
        .with("tail", tail[n])
        .with("minimal_n", tail.iter().position(|&t| t < target).map_or(f64::INFINITY, |k| k as f64))
        .witness(if tail[n] < target { None } else { Some(n as f64) });

    // 3. mass beyond R
    let gamma = g.pseudoinverse();
    let (x0, x1) = gamma.domain();
    let inside: Vec<f64> = members
        .par_iter()
        .map(|f| {
            let power = |x: f64| f.eval(gamma.eval_unchecked(x)).abs().powf(p);
            let breaks = range_breaks(f, g);
            let mut total = 0.0;
            if x0 < -params.r {
                total += integrate_on(&power, &breaks, x0, x1.min(-params.r), params.tol)?;
            }
            if x1 > params.r {
                total += integrate_on(&power, &breaks, x0.max(params.r), x1, params.tol)?;
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_inside = inside.iter().copied().fold(0.0, f64::max);
    let worst_member = inside.iter().position(|&v| v == worst_inside).unwrap_or(0);
    let verdict = if worst_inside >= target {
        Verdict::Fail
    } else {
        match family.outside_mass {
            Some(m) => Verdict::of(worst_inside + m < target),
            None => Verdict::Inconclusive,
        }
    };
    let mut c3 = Condition::new(3, "mass_beyond_r", verdict).with("mass_inside_window", worst_inside);
    if let Some(m) = family.outside_mass {
        c3 = c3.with("declared_outside_mass", m);
    }
    if verdict == Verdict::Fail {
        c3 = c3.witness(Some(worst_member as f64));
    }

    // 4. translation modulus
    let hs = if params.rho > 0.0 { log_grid(params.rho * 1e-3, params.rho, params.h_count.max(2)) } else { Vec::new() };
    let moduli: Vec<f64> = hs
        .par_iter()
        .map(|&h| {
            members
                .iter()
                .map(|f| translation_modulus(f, g, h, p, params.tol))
                .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = moduli.iter().copied().fold(0.0, f64::max);
    let witness = hs.iter().zip(&moduli).find(|(_, &v)| !(v < target)).map(|(&h, _)| h);
    let c4 = Condition::new(4, "translation_modulus", Verdict::of(witness.is_none()))
        .with("largest", worst)
        .witness(witness);

    let mut cert = Certificate::new("lp", vec![c1, c2, c3, c4])
        .param("p", p)
        .param("eps", params.eps)
        .param("r", params.r)
        .param("rho", params.rho);
    cert.enumeration = atoms.iter().map(|a| a.0).collect();
    cert.curves.push(Curve { name: "jump_tail".into(), x: (0..=atoms.len()).map(|k| k as f64).collect(), y: tail });
    cert.curves.push(Curve { name: "translation".into(), x: hs, y: moduli });
    Ok(cert)
}

/// Images under `g^C` of the points where `f∘γ` may lose smoothness.
fn range_breaks(f: &GFunction, g: &Derivator) -> Vec<f64> {
    let mut out: Vec<f64> =
        g.special_points().into_iter().chain(f.knots().iter().copied()).filter(|&t| g.contains(t)).map(|t| g.continuous(t)).collect();
    sort_dedup(&mut out);
    out
}

fn integrate_on(h: &(dyn Fn(f64) -> f64 + Sync), breaks: &[f64], a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut pts = vec![a, b];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    sort_dedup(&mut pts);
    quad::integrate(h, &pts, tol, MAX_PANELS)
}

/// `∫ |F(x + h) - F(x)|^p dx` with `F = f∘γ`, over the part of the range of
/// `g^C` where both terms are defined.
pub fn translation_modulus(f: &GFunction, g: &Derivator, h: f64, p: f64, tol: f64) -> Result<f64> {
    let gamma = g.pseudoinverse();
    let (x0, x1) = gamma.domain();
    let (a, b) = if h >= 0.0 { (x0, x1 - h) } else { (x0 - h, x1) };
    let mut breaks = range_breaks(f, g);
    let shifted: Vec<f64> = breaks.iter().map(|&x| x - h).collect();
    breaks.extend(shifted);
    sort_dedup(&mut breaks);
    let diff = |x: f64| (f.eval(gamma.eval_unchecked(x + h)) - f.eval(gamma.eval_unchecked(x))).abs().powf(p);
    integrate_on(&diff, &breaks, a, b, tol)
}

/// Thresholds for [`dc_diagnose`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcParams {
    pub eps: f64,
    pub deltas: Vec<f64>,
    /// Atoms kept before the jump tail; defaults to all stored atoms.
    pub n: Option<usize>,
    pub tol: f64,
}

/// Total boundedness in `DC_g`: the three `BC_g` conditions and a uniform
/// jump tail `Σ_{k > n} |Δf(d_k)| < eps`.
pub fn dc_diagnose(family: &FamilySample, g: &Derivator, params: &DcParams) -> Result<Certificate> {
    family.check()?;
    check_eps(params.eps)?;
    let series: Vec<JumpSeries> = family
        .members
        .par_iter()
        .map(|f| {
            let s = jump_series(f, g, params.tol).map_err(|e| Error::NotDecomposable { reason: e.to_string() })?;
            if s.decomposable {
                Ok(s)
            } else {
                Err(Error::NotDecomposable { reason: format!("{} has an infinite jump sum", f.label()) })
            }
        })
        .collect::<Result<_>>()?;
    let bc = bc_diagnose(family, g, params.eps, &params.deltas)?;
    let atoms = enumerate_atoms(g);
    let n = params.n.unwrap_or(atoms.len()).min(atoms.len());
    let mut tail = vec![0.0_f64; atoms.len() + 1];
    for s in &series {
        let mut acc = 0.0;
        let mut own = vec![0.0; atoms.len() + 1];
        for k in (0..atoms.len()).rev() {
            acc += s.delta_at(atoms[k].0).unwrap_or(0.0).abs();
            own[k] = acc;
        }
        for k in 0..=atoms.len() {
            tail[k] = tail[k].max(own[k]);
        }
    }
    let ok = tail[n] < params.eps;
    let c4 = Condition::new(4, "uniform_jump_tail", Verdict::of(ok))
        .with("n", n as f64)
        .with("tail", tail[n])
        .with("minimal_n", tail.iter().position(|&t| t < params.eps).map_or(f64::INFINITY, |k| k as f64))
        .witness(if ok { None } else { Some(n as f64) });
    let mut conditions = bc.conditions.clone();
    conditions.push(c4);
    let mut cert = Certificate::new("dc", conditions).param("eps", params.eps);
    cert.deltas = bc.deltas;
    cert.sample_count = bc.sample_count;
    cert.enumeration = atoms.iter().map(|a| a.0).collect();
    cert.curves = bc.curves;
    cert.curves.push(Curve { name: "jump_tail".into(), x: (0..=atoms.len()).map(|k| k as f64).collect(), y: tail });
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Metric {
    Sup,
    Lp { p: f64 },
    Dc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetResult {
    /// Indices of the net members.
    pub net: Vec<usize>,
    /// Largest distance from a member to its nearest net member.
    pub max_residual: f64,
    /// A member at distance `≥ eps` from the whole net once the cap is hit.
    pub witness: Option<usize>,
    pub eps: f64,
}

impl NetResult {
    pub fn is_net(&self) -> bool {
        self.witness.is_none() && self.max_residual < self.eps
    }
}

/// Distance between two members in `metric` over the window of `g`.
pub fn distance(f: &GFunction, h: &GFunction, g: &Derivator, metric: Metric, tol: f64) -> Result<f64> {
    let (lo, hi) = g.window();
    let diff = f.sub(h);
    match metric {
        Metric::Sup => Ok(crate::calculus::sup_norm(&diff, g, lo, hi)),
        Metric::Lp { p } => lp_norm(&diff, g, p, lo, hi, tol),
        Metric::Dc => dc_norm(&diff, g, tol),
    }
}

/// Greedy ε-net with open balls: members are scanned in order and each one
/// at distance `≥ eps` from the current net joins it, up to `cap` members.
pub fn epsilon_net(family: &[GFunction], g: &Derivator, metric: Metric, eps: f64, cap: usize, tol: f64) -> Result<NetResult> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_eps(eps)?;
    let n = family.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, k)| distance(&family[i], &family[k], g, metric, tol))
        .collect::<Result<Vec<f64>>>()?;
    let mut table = vec![vec![0.0; n]; n];
    for (&(i, k), &d) in pairs.iter().zip(&dists) {
        table[i][k] = d;
        table[k][i] = d;
    }
    let nearest = |i: usize, net: &[usize]| net.iter().map(|&k| table[i][k]).fold(f64::INFINITY, f64::min);
    let mut net = Vec::new();
    let mut witness = None;
    for i in 0..n {
        if nearest(i, &net) >= eps {
            if net.len() < cap.max(1) {
                net.push(i);
            } else if witness.is_none() {
                witness = Some(i);
            }
        }
    }
    let max_residual = (0..n).map(|i| nearest(i, &net)).fold(0.0, f64::max);
    Ok(NetResult { net, max_residual, witness, eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::tests::g1;
    use crate::gfunc::tests::oscillating;

    fn deltas() -> Vec<f64> {
        log_grid(1e-8, 0.5, 16)
    }

    #[test]
    fn verdict_conjunction() {
        use Verdict::*;
        assert_eq!(Verdict::all([Pass, Pass]), Pass);
        assert_eq!(Verdict::all([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::all([Inconclusive, Fail]), Fail);
    }

    #[test]
    fn single_member_g() {
        let g = g1();
        let fam = FamilySample::new(vec![GFunction::from_derivator(&g)]);
        let bc = bc_diagnose(&fam, &g, 0.05, &deltas()).unwrap();
        assert!(bc.passes(), "{bc:?}");
        assert_eq!(bc.condition(3).unwrap().measured["largest_covering"], 1.0);
        assert!(bc.finite_scale);
        let buc = buc_diagnose(&fam, &g, 0.05, &deltas()).unwrap();
        assert!(buc.passes(), "{buc:?}");
    }

    #[test]
    fn oscillating_member() {
        let (g, f) = oscillating();
        let fam = FamilySample::new(vec![f]);
        let bc = bc_diagnose(&fam, &g, 0.25, &deltas()).unwrap();
        assert_eq!(bc.condition(2).unwrap().verdict, Verdict::Pass, "{bc:?}");
        assert_eq!(bc.condition(3).unwrap().verdict, Verdict::Pass, "{bc:?}");
        let buc = buc_diagnose(&fam, &g, 0.25, &deltas()).unwrap();
        assert_eq!(buc.verdict, Verdict::Fail);
        assert_eq!(buc.condition(2).unwrap().verdict, Verdict::Fail);
        assert_eq!(buc.condition(3).unwrap().witness, Some(0.0));
    }

    #[test]
    fn high_frequency_family() {
        let g = Derivator::identity(0.0, std::f64::consts::TAU).unwrap();
        let fam: Vec<GFunction> = (1..=50).map(|n| GFunction::continuous(format!("sin {n}t"), move |t| (n as f64 * t).sin())).collect();
        let fam = FamilySample::new(fam);
        let grid = log_grid(0.05, 1.0, 8);
        let bc = bc_diagnose(&fam, &g, 0.5, &grid).unwrap();
        assert_eq!(bc.condition(2).unwrap().verdict, Verdict::Fail);
        let buc = buc_diagnose(&fam, &g, 0.5, &grid).unwrap();
        assert!(buc.curves[0].y.iter().all(|&w| w >= 1.0));
    }

    #[test]
    fn constants_have_zero_modulus() {
        let g = g1();
        let fam = FamilySample::new((0..=10).map(|k| GFunction::constant(k as f64 / 10.0)).collect());
        let buc = buc_diagnose(&fam, &g, 1e-3, &deltas()).unwrap();
        assert!(buc.passes());
        assert!(buc.curves[0].y.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn sequences() {
        let basis = |k: usize| {
            let mut v = vec![0.0; 50];
            v[k] = 1.0;
            TruncatedSequence::new(v, 0.0)
        };
        let cert = lp_seq_diagnose(&[basis(0)], 2.0, 0.1, None).unwrap();
        assert!(cert.passes());
        assert_eq!(cert.condition(2).unwrap().measured["minimal_n"], 1.0);
        let family: Vec<_> = (0..50).map(basis).collect();
        let cert = lp_seq_diagnose(&family, 2.0, 0.9, None).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
        assert_eq!(cert.condition(2).unwrap().measured["minimal_n"], 50.0);
        let geometric: Vec<_> = (0..=10)
            .map(|c| TruncatedSequence::new((0..60).map(|j| c as f64 / 10.0 * 0.5f64.powi(j)).collect(), 0.0))
            .collect();
        let cert = lp_seq_diagnose(&geometric, 2.0, 1e-3, None).unwrap();
        assert!(cert.passes());
        assert!(cert.condition(2).unwrap().measured["minimal_n"] <= 12.0);
        let err = lp_seq_diagnose(&[TruncatedSequence { values: vec![1.0], tail_bound: None }], 2.0, 0.1, None);
        assert_eq!(err.unwrap_err(), Error::MissingTailBound { index: 0 });
    }

    fn bump(center: f64) -> GFunction {
        GFunction::continuous(format!("bump {center}"), move |t: f64| {
            let u = t - center;
            if u.abs() < 0.5 {
                (1.0 - 4.0 * u * u).powi(2)
            } else {
                0.0
            }
        })
        .with_knots(vec![center - 0.5, center + 0.5])
    }

    #[test]
    fn shifting_bumps_escape() {
        let g = Derivator::identity(0.0, 31.0).unwrap();
        let fam = FamilySample::new((1..=30).map(|k| bump(k as f64)).collect()).with_outside_mass(0.0);
        let cert = lp_diagnose(&fam, &g, &LpParams::new(2.0, 0.1, 20.0, 0.01)).unwrap();
        assert_eq!(cert.condition(3).unwrap().verdict, Verdict::Fail);
        assert_eq!(cert.condition(4).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn zero_family_passes() {
        let g = g1();
        let fam = FamilySample::new(vec![GFunction::zero()]).with_outside_mass(0.0);
        let cert = lp_diagnose(&fam, &g, &LpParams::new(1.0, 0.1, 1.0, 0.5)).unwrap();
        assert!(cert.passes());
        let fam = FamilySample::new(vec![GFunction::zero()]);
        let cert = lp_diagnose(&fam, &g, &LpParams::new(1.0, 0.1, 1.0, 0.5)).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn translation_of_step() {
        let g = Derivator::identity(0.0, 2.0).unwrap();
        let f = GFunction::new("step", |t| if t < 1.0 { 0.0 } else { 1.0 }).with_knots(vec![1.0]);
        let v = translation_modulus(&f, &g, 0.25, 1.0, 1e-12).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dc_families() {
        let g = g1();
        let dc = DcParams { eps: 0.05, deltas: deltas(), n: Some(1), tol: 1e-10 };
        let fam = FamilySample::new(vec![GFunction::from_derivator(&g)]);
        assert!(dc_diagnose(&fam, &g, &dc).unwrap().passes());
        let scaled = FamilySample::new((0..=5).map(|c| GFunction::from_derivator(&g).scale(c as f64 / 5.0)).collect());
        assert!(dc_diagnose(&scaled, &g, &dc).unwrap().passes());
        let (g, f) = oscillating();
        let err = dc_diagnose(&FamilySample::new(vec![f]), &g, &dc).unwrap_err();
        assert!(matches!(err, Error::NotDecomposable { .. }));
    }

    #[test]
    fn nets() {
        let g = g1();
        let f = GFunction::from_derivator(&g);
        let single = epsilon_net(&[f.clone()], &g, Metric::Sup, 0.01, 8, 1e-10).unwrap();
        assert_eq!(single.net, vec![0]);
        let family: Vec<GFunction> = (0..=10).map(|c| f.scale(c as f64 / 10.0)).collect();
        let net = epsilon_net(&family, &g, Metric::Sup, 0.2 * 2.5, 64, 1e-10).unwrap();
        assert!(net.net.len() <= 6 && net.is_net(), "{net:?}");
        let lp = epsilon_net(&family, &g, Metric::Lp { p: 2.0 }, 0.5, 64, 1e-10).unwrap();
        assert!(lp.is_net());
        let capped = epsilon_net(&family, &g, Metric::Sup, 0.1, 2, 1e-10).unwrap();
        assert!(capped.witness.is_some());
    }
}
