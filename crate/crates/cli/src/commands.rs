use serde_json::{json, Value};
use stj_core::calculus::{
    atom_part, embedding_check, g_derivative, integrate, integrate_direct, integrate_direct_extrapolated, lebesgue_part,
    lp_norm, sobolev_norm, DerivOptions,
};
use stj_core::compactness::{
    bc_diagnose, buc_diagnose, dc_diagnose, epsilon_net, lp_diagnose, lp_seq_diagnose, Certificate, DcParams, LpParams,
    Metric,
};
use stj_core::decompose::{additive_split, multiplicative_split};
use stj_core::exponential::{exp_g, extend, verify_exp, ExpSpec};
use stj_core::gfunc::{factorize, fit_samples, weierstrass_fit, FactorizeOptions, FitMethod};
use stj_core::grid::{dense_samples, log_grid, GridSpec};
use stj_core::{Derivator, GFunction};

use crate::report::{Output, Table};
use crate::spec::{load_derivator, load_function, read_json, FamilySpec, SequenceFile, SobolevSpec};
use crate::{Command, CompactCmd, DecomposeCmd, DerivatorCmd, FamilyArgs, Failure, FitArg, IntegrateMethod, MetricArg};

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn window_or(g: &Derivator, interval: Option<(f64, f64)>) -> (f64, f64) {
    interval.unwrap_or_else(|| g.window())
}

fn samples(g: &Derivator, knots: &[f64]) -> Vec<f64> {
    let (lo, hi) = g.window();
    dense_samples(g, lo, hi, knots, &GridSpec::with_uniform(201))
}

pub fn dispatch(command: &Command, tol: f64) -> Result<Output, Failure> {
    match command {
        Command::Derivator { action: DerivatorCmd::Analyze { g } } => analyze(&load_derivator(g)?),
        Command::Integrate { g, f, interval, method, n } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let (c, d) = window_or(&g, *interval);
            let report = match method {
                IntegrateMethod::Quad => {
                    let value = integrate(&f, &g, c, d, tol)?;
                    json!({
                        "method": "quad",
                        "interval": [c, d],
                        "value": value,
                        "lebesgue": lebesgue_part(&f, &g, c, d, tol)?,
                        "atoms": atom_part(&f, &g, c, d),
                    })
                }
                IntegrateMethod::Direct => {
                    g.measure(&[(c, d)])?;
                    json!({
                        "method": "direct",
                        "interval": [c, d],
                        "cells": n,
                        "value": integrate_direct(&f, &g, c, d, *n),
                        "extrapolated": integrate_direct_extrapolated(&f, &g, c, d, *n),
                    })
                }
            };
            Ok(Output::new("integral", report))
        }
        Command::Derive { g, f, at, numeric } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let opts = DerivOptions { tol, use_declared: !numeric, ..DerivOptions::default() };
            let value = g_derivative(&f, &g, *at, &opts)?;
            let branch = if g.delta(*at) > 0.0 {
                "atom"
            } else if g.classify().constancy_interval(*at).is_some() {
                "constancy_interval"
            } else {
                "generic"
            };
            Ok(Output::new("derivative", json!({ "at": at, "value": value, "branch": branch })))
        }
        Command::Norm { g, f, p, interval, sobolev } => {
            let g = load_derivator(g)?;
            if *sobolev {
                let s: SobolevSpec = read_json(f)?;
                let s = s.build(&g, tol)?;
                let norm = sobolev_norm(&s, &g, *p, tol)?;
                let embedding = embedding_check(&s, &g, *p, tol)?;
                return Ok(Output::new(
                    "norm",
                    json!({ "p": p_value(*p), "sobolev_norm": norm, "embedding": to_value(&embedding) }),
                ));
            }
            let f = load_function(f, &g, tol)?;
            let (c, d) = window_or(&g, *interval);
            let norm = lp_norm(&f, &g, *p, c, d, tol)?;
            Ok(Output::new("norm", json!({ "p": p_value(*p), "interval": [c, d], "norm": norm })))
        }
        Command::Factorize { g, f, nodes, recon_tol } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let r = factorize(&f, &g, &FactorizeOptions { nodes: *nodes, recon_tol: *recon_tol, tol })?;
            let report = json!({
                "reconstruction_error": r.reconstruction_error,
                "gap_list": r.gap_list,
                "uniformity": { "delta": r.uniformity.0, "omega": r.uniformity.1 },
                "node_count": r.tilde_f.xs.len(),
            });
            let tilde = Table::from_pairs("tilde_f", ["x", "value"], r.tilde_f.xs.iter().copied().zip(r.tilde_f.ys.iter().copied()));
            let sigma = Table::from_pairs("sigma", ["x", "sigma"], r.sigma_table.iter().copied());
            Ok(Output::new("factorization", report).table(tilde).table(sigma))
        }
        Command::Weierstrass { g, f, degree, method, samples: n } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let method = match method {
                FitArg::LeastSquares => FitMethod::LeastSquares,
                FitArg::ChebyshevNodes => FitMethod::ChebyshevNodes,
            };
            let fit = weierstrass_fit(&f, &g, *degree, *n, method)?;
            let mut table = Table::new("fit", &["x", "f", "p"]);
            table.rows = fit_samples(&f, &g, *n)?.into_iter().map(|(x, y)| vec![x, y, fit.eval(x)]).collect();
            Ok(Output::new("weierstrass", to_value(&fit)).table(table))
        }
        Command::Expg { g, lambda, alpha, at, verify } => {
            let g = load_derivator(g)?;
            let spec = ExpSpec::constant(*lambda, *alpha);
            let mut report = json!({ "lambda": lambda, "alpha": alpha });
            if let Some(t) = at {
                report["at"] = json!(t);
                report["value"] = json!(exp_g(&spec, &g, *t, tol)?);
            }
            if let Some(n) = verify {
                let (lo, hi) = g.window();
                let n = (*n).max(2);
                let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
                report["verification"] = to_value(&verify_exp(&spec, &g, &grid, tol)?);
            }
            let rows = samples(&g, &[*alpha])
                .into_iter()
                .map(|t| Ok(vec![t, exp_g(&spec, &g, t, tol)?]))
                .collect::<Result<Vec<_>, stj_core::Error>>()?;
            let mut table = Table::new("exp_g", &["t", "value"]);
            table.rows = rows;
            Ok(Output::new("expg", report).table(table))
        }
        Command::Extend { g, sobolev, window, p } => {
            let g = load_derivator(g)?;
            let s: SobolevSpec = read_json(sobolev)?;
            let s = s.build(&g, tol)?;
            let ext = extend(&s, &g, *window, *p, tol)?;
            let mut report = to_value(&ext.result);
            report["pass"] = json!(ext.result.pass());
            report["norms"]["p"] = p_value(*p);
            if let Value::Object(map) = &mut report {
                map.remove("tails");
            }
            let tails = Table::from_pairs("tails", ["t", "value"], ext.result.tails.iter().copied());
            let mut pf = Table::new("pf", &["t", "value", "density"]);
            let restricted = g.restrict(window.0, window.1)?;
            pf.rows = samples(&restricted, &[s.start, s.end])
                .into_iter()
                .map(|t| vec![t, ext.pf.eval(t), ext.density.eval(t)])
                .collect();
            Ok(Output::new("extension", report).table(tails).table(pf))
        }
        Command::Compact { kind } => compact(kind, tol),
        Command::Decompose { kind } => decompose(kind, tol),
    }
}

/// `p` for reports; JSON has no infinity.
fn p_value(p: f64) -> Value {
    if p.is_infinite() {
        json!("inf")
    } else {
        json!(p)
    }
}

fn analyze(g: &Derivator) -> Result<Output, Failure> {
    let classes = g.classify();
    let split = g.split();
    let (lo, hi) = g.window();
    let report = json!({
        "derivator": to_value(g),
        "D_g": classes.jump_points,
        "C_g": classes.constancy_intervals.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
        "N_minus": classes.n_minus,
        "N_plus": classes.n_plus,
        "total_variation": g.total_variation(),
        "jump_mass": g.jump_mass_before(hi) ,
        "continuous_range": [g.continuous(lo), g.continuous(hi)],
        "split_offset": split.offset,
        "special_points": g.special_points(),
    });
    let mut table = Table::new("split", &["t", "g", "g_continuous", "g_jump"]);
    table.rows = samples(g, &[])
        .into_iter()
        .map(|t| {
            let v = g.eval(t).unwrap_or(f64::NAN);
            let c = g.continuous(t);
            vec![t, v, c, v - c]
        })
        .collect();
    Ok(Output::new("derivator", report).table(table))
}

fn default_deltas(g: &Derivator, given: &Option<Vec<f64>>) -> Vec<f64> {
    match given {
        Some(d) => d.clone(),
        None => {
            let span = g.total_variation().max(f64::MIN_POSITIVE);
            log_grid(1e-8 * span, 0.5 * span, 16)
        }
    }
}

fn certificate_output(cert: Certificate) -> Output {
    let tables: Vec<Table> = cert
        .curves
        .iter()
        .map(|c| Table::from_pairs(&format!("{}_{}", cert.criterion, c.name), ["x", "y"], c.x.iter().copied().zip(c.y.iter().copied())))
        .collect();
    let mut report = to_value(&cert);
    if let Value::Object(map) = &mut report {
        map.remove("curves");
    }
    let mut out = Output::new("certificate", report);
    out.tables = tables;
    out
}

fn load_family(args: &FamilyArgs, tol: f64) -> Result<(Derivator, stj_core::compactness::FamilySample), Failure> {
    let g = load_derivator(&args.g)?;
    let spec: FamilySpec = read_json(&args.family)?;
    let fam = spec.build(&g, tol)?;
    Ok((g, fam))
}

fn compact(kind: &CompactCmd, tol: f64) -> Result<Output, Failure> {
    let cert = match kind {
        CompactCmd::Bc(args) => {
            let (g, fam) = load_family(args, tol)?;
            bc_diagnose(&fam, &g, args.eps, &default_deltas(&g, &args.delta))?
        }
        CompactCmd::Buc(args) => {
            let (g, fam) = load_family(args, tol)?;
            buc_diagnose(&fam, &g, args.eps, &default_deltas(&g, &args.delta))?
        }
        CompactCmd::Dc { family, n } => {
            let (g, fam) = load_family(family, tol)?;
            let params = DcParams { eps: family.eps, deltas: default_deltas(&g, &family.delta), n: *n, tol };
            dc_diagnose(&fam, &g, &params)?
        }
        CompactCmd::Lp { g, family, eps, p, r, rho, n } => {
            let g = load_derivator(g)?;
            let spec: FamilySpec = read_json(family)?;
            let fam = spec.build(&g, tol)?;
            let mut params = LpParams::new(*p, *eps, *r, *rho);
            params.n = *n;
            params.tol = tol;
            lp_diagnose(&fam, &g, &params)?
        }
        CompactCmd::Net { g, family, eps, metric, p, cap } => {
            let g = load_derivator(g)?;
            let spec: FamilySpec = read_json(family)?;
            let members: Vec<GFunction> = spec.build(&g, tol)?.members;
            let metric = match metric {
                MetricArg::Sup => Metric::Sup,
                MetricArg::Lp => Metric::Lp { p: *p },
                MetricArg::Dc => Metric::Dc,
            };
            let net = epsilon_net(&members, &g, metric, *eps, *cap, tol)?;
            let mut report = to_value(&net);
            report["metric"] = to_value(&metric);
            report["is_net"] = json!(net.is_net());
            return Ok(Output::new("net", report));
        }
        CompactCmd::Seq { sequences, eps, p, n } => {
            let file: SequenceFile = read_json(sequences)?;
            lp_seq_diagnose(&file.sequences, *p, *eps, *n)?
        }
    };
    Ok(certificate_output(cert))
}

fn decompose(kind: &DecomposeCmd, tol: f64) -> Result<Output, Failure> {
    match kind {
        DecomposeCmd::Add { g, f } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let s = additive_split(&f, &g, tol)?;
            let report = json!({
                "jumps": to_value(&s.series.entries),
                "jump_sum": s.jump_sum,
                "g_tail_bound": s.series.g_tail_bound,
                "residuals": s.residuals,
                "max_residual": s.max_residual,
                "integral_gap": s.integral_gap,
            });
            let mut table = Table::new("additive", &["t", "f", "f_jump", "f_continuous"]);
            table.rows = samples(&g, f.knots()).into_iter().map(|t| vec![t, f.eval(t), s.f_b.eval(t), s.f_c.eval(t)]).collect();
            Ok(Output::new("additive", report).table(table))
        }
        DecomposeCmd::Mul { g, f, alpha } => {
            let g = load_derivator(g)?;
            let f = load_function(f, &g, tol)?;
            let m = multiplicative_split(&f, &g, *alpha, tol)?;
            let report = json!({
                "alpha": m.alpha,
                "d_gf": m.d_gf,
                "log_sum": m.log_sum,
                "phi_steps": m.phi_steps,
                "form_gap": m.form_gap,
                "psi_residuals": m.psi_residuals,
                "max_psi_residual": m.max_psi_residual,
                "phi_min": m.phi_min,
                "phi_lower_bound": m.phi_lower_bound,
            });
            let mut table = Table::new("multiplicative", &["t", "f", "phi", "psi"]);
            table.rows = samples(&g, f.knots()).into_iter().map(|t| vec![t, f.eval(t), m.phi.eval(t), m.psi.eval(t)]).collect();
            Ok(Output::new("multiplicative", report).table(table))
        }
    }
}
