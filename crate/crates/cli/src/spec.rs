//! Input files: derivators, functions, Sobolev functions, families and
//! sequences.

use std::fs;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use stj_core::compactness::TruncatedSequence;
use stj_core::exponential::{exp_function, ExpSpec};
use stj_core::{Derivator, Error, GFunction, SobolevFunction};

use crate::Failure;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn load_derivator(path: &Path) -> Result<Derivator, Failure> {
    read_json(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFn {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    #[default]
    T,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outer {
    Exp,
    Sin,
    Cos,
    Abs,
    Square,
}

impl Outer {
    fn apply(self) -> fn(f64) -> f64 {
        match self {
            Outer::Exp => f64::exp,
            Outer::Sin => f64::sin,
            Outer::Cos => f64::cos,
            Outer::Abs => f64::abs,
            Outer::Square => |v| v * v,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Outer::Exp => "exp",
            Outer::Sin => "sin",
            Outer::Cos => "cos",
            Outer::Abs => "abs",
            Outer::Square => "square",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kind {
    /// `Σ c_k t^k`.
    Poly { coeffs: Vec<f64> },
    /// `Σ c_k g(t)^k`.
    PolyG { coeffs: Vec<f64> },
    /// `amplitude · f(freq · v + phase)` with `v` either `t` or `g(t)`.
    Trig {
        func: TrigFn,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        amplitude: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        freq: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        phase: f64,
        #[serde(default)]
        of: Variable,
    },
    /// 1 on `[lo, hi)`, 0 elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `initial` up to the first step point, then the value of the last step
    /// point strictly below `t`.
    StepTable { initial: f64, steps: Vec<[f64; 2]> },
    Composed { outer: Outer, inner: Box<FunctionSpec> },
    Sum { terms: Vec<FunctionSpec> },
    /// `t` for `t ≤ 0`, `sin(1/t)` for `t > 0`.
    SinRecip,
    /// `exp_g(λ; α, ·)` for a constant rate.
    ExpG { lambda: f64, alpha: f64 },
}

/// A function description with an optional right-limit table and label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub kind: Kind,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub right_limits: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut value = serde_json::Value::deserialize(d)?;
        let obj = value.as_object_mut().ok_or_else(|| D::Error::custom("function spec must be an object"))?;
        let right_limits = match obj.remove("right_limits") {
            Some(v) => serde_json::from_value(v).map_err(D::Error::custom)?,
            None => Vec::new(),
        };
        let label = match obj.remove("label") {
            Some(v) => Some(serde_json::from_value(v).map_err(D::Error::custom)?),
            None => None,
        };
        let kind = serde_json::from_value(value).map_err(D::Error::custom)?;
        Ok(Self { kind, right_limits, label })
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Right limits of a right-continuous evaluator at every atom of `g`.
fn right_continuous(g: &Derivator, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    g.jumps().iter().map(|j| (j.at, f(j.at))).collect()
}

impl FunctionSpec {
    #[cfg(test)]
    pub fn new(kind: Kind) -> Self {
        Self { kind, right_limits: Vec::new(), label: None }
    }

    pub fn build(&self, g: &Derivator, tol: f64) -> Result<GFunction, Failure> {
        let mut f = self.build_kind(g, tol)?;
        if !self.right_limits.is_empty() {
            let mut table: Vec<(f64, f64)> = Vec::new();
            for &[d, v] in &self.right_limits {
                if g.jump_index(d).is_none() {
                    return Err(Failure::core(Error::InvalidParameter {
                        name: "right_limits",
                        reason: format!("{d} is not a jump point of g"),
                    }));
                }
                table.push((d, v));
            }
            table.extend(f.right_limits().iter().copied());
            f = f.with_right_limits(table);
        }
        if let Some(label) = &self.label {
            f = f.with_label(label.clone());
        }
        Ok(f)
    }

    fn build_kind(&self, g: &Derivator, tol: f64) -> Result<GFunction, Failure> {
        Ok(match &self.kind {
            Kind::Poly { coeffs } => {
                let c = coeffs.clone();
                GFunction::continuous("poly", move |t| horner(&c, t))
            }
            Kind::PolyG { coeffs } => {
                let c = coeffs.clone();
                GFunction::from_derivator(g).compose("poly", move |x| horner(&c, x))
            }
            Kind::Trig { func, amplitude, freq, phase, of } => {
                let base: fn(f64) -> f64 = match func {
                    TrigFn::Sin => f64::sin,
                    TrigFn::Cos => f64::cos,
                };
                let (a, w, p) = (*amplitude, *freq, *phase);
                let h = move |v: f64| a * base(w * v + p);
                match of {
                    Variable::T => GFunction::continuous("trig", h),
                    Variable::G => GFunction::from_derivator(g).compose("trig", h),
                }
            }
            Kind::Indicator { lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                let f = move |t: f64| if t >= lo && t < hi { 1.0 } else { 0.0 };
                GFunction::new("indicator", f).with_right_limits(right_continuous(g, f)).with_knots(vec![lo, hi])
            }
            Kind::StepTable { initial, steps } => {
                let mut steps = steps.clone();
                steps.sort_by(|a, b| a[0].total_cmp(&b[0]));
                let points: Vec<f64> = steps.iter().map(|s| s[0]).collect();
                let values: Vec<f64> = std::iter::once(*initial).chain(steps.iter().map(|s| s[1])).collect();
                let (p2, v2) = (points.clone(), values.clone());
                let f = move |t: f64| v2[p2.partition_point(|&d| d < t)];
                let mut right = right_continuous(g, &f);
                right.retain(|r| !points.contains(&r.0));
                right.extend(steps.iter().map(|s| (s[0], s[1])));
                GFunction::new("steps", f).with_right_limits(right).with_knots(points)
            }
            Kind::Composed { outer, inner } => inner.build(g, tol)?.compose(outer.name(), outer.apply()),
            Kind::Sum { terms } => {
                let mut acc = GFunction::zero();
                for term in terms {
                    acc = acc.add(&term.build(g, tol)?);
                }
                acc
            }
            Kind::SinRecip => {
                GFunction::new("sin_recip", |t: f64| if t <= 0.0 { t } else { (1.0 / t).sin() }).with_knots(vec![0.0])
            }
            Kind::ExpG { lambda, alpha } => {
                exp_function(&ExpSpec::constant(*lambda, *alpha), g, tol).map_err(Failure::core)?
            }
        })
    }
}

pub fn load_function(path: &Path, g: &Derivator, tol: f64) -> Result<GFunction, Failure> {
    let spec: FunctionSpec = read_json(path)?;
    spec.build(g, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevSpec {
    pub start: f64,
    pub end: f64,
    pub base: f64,
    pub density: FunctionSpec,
}

impl SobolevSpec {
    pub fn build(&self, g: &Derivator, tol: f64) -> Result<SobolevFunction, Failure> {
        for t in [self.start, self.end] {
            if !g.contains(t) {
                let (lo, hi) = g.window();
                return Err(Failure::core(Error::OutOfWindow { t, lo, hi }));
            }
        }
        if !(self.start < self.end) {
            return Err(Failure::core(Error::InvalidInterval { c: self.start, d: self.end }));
        }
        Ok(SobolevFunction::new(self.start, self.end, self.base, self.density.build(g, tol)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub members: Vec<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_n: Option<usize>,
}

impl FamilySpec {
    pub fn build(&self, g: &Derivator, tol: f64) -> Result<stj_core::compactness::FamilySample, Failure> {
        let members = self.members.iter().map(|m| m.build(g, tol)).collect::<Result<Vec<_>, _>>()?;
        let mut fam = stj_core::compactness::FamilySample::new(members);
        fam.outside_mass = self.outside_mass;
        if let Some(n) = self.sample_n {
            fam.sample_n = n;
        }
        Ok(fam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub sequences: Vec<TruncatedSequence>,
}
