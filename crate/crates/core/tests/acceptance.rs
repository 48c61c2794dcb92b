//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use stj_core::calculus::{self, DerivOptions};
use stj_core::compactness::{self, FamilySample, LpParams, TruncatedSequence, Verdict};
use stj_core::decompose;
use stj_core::exponential::{self, ExpSpec};
use stj_core::gfunc::{self, FactorizeOptions, FitMethod};
use stj_core::grid::log_grid;
use stj_core::{Derivator, Error, GFunction, SobolevFunction};

use common::*;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn random_interval(r: &mut rand_chacha::ChaCha8Rng, g: &Derivator) -> (f64, f64) {
    let (lo, hi) = g.window();
    let atoms: Vec<f64> = g.jumps().iter().map(|j| j.at).collect();
    let pick = |r: &mut rand_chacha::ChaCha8Rng| {
        if !atoms.is_empty() && r.gen_bool(0.2) {
            atoms[r.gen_range(0..atoms.len())]
        } else {
            r.gen_range(lo..=hi)
        }
    };
    let (a, b) = (pick(r), pick(r));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn integration_vs_riemann_stieltjes() -> Outcome {
    let mut r = rng(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..200 {
        let g = random_derivator(&mut r);
        let f = random_piecewise(&mut r, &g, false).to_gfunction(&g);
        let (c, d) = random_interval(&mut r, &g);
        let v = calculus::integrate(&f, &g, c, d, 1e-11).unwrap();
        let rs = calculus::integrate_direct(&f, &g, c, d, 100_000);
        let rel = (v - rs).abs() / (1.0 + v.abs());
        worst = worst.max(rel);
        if rel > 1e-6 {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(failures == 0 && secs <= 60.0, format!("200 triples, worst |I - S|/(1+|I|) = {worst:.2e}, {secs:.1} s"))
}

fn measure_decomposition() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut worst_rs = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let g = random_derivator(&mut r);
        let f = random_piecewise(&mut r, &g, false).to_gfunction(&g);
        let (c, d) = random_interval(&mut r, &g);
        let whole = calculus::integrate(&f, &g, c, d, 1e-12).unwrap();
        let split = calculus::integrate_continuous_density(&f, &g, c, d, 1e-12).unwrap() + calculus::atom_part(&f, &g, c, d);
        let rs = calculus::integrate_direct_extrapolated(&f, &g, c, d, 20_000);
        let scale = whole.abs().max(f64::MIN_POSITIVE);
        let rel = (whole - split).abs() / scale;
        let rel_rs = (rs - split).abs() / scale;
        worst = worst.max(rel);
        worst_rs = worst_rs.max(rel_rs);
        if !(rel <= 1e-8 && rel_rs <= 1e-8) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("100 cases, worst relative gap {worst:.2e} (pseudoinverse route), {worst_rs:.2e} (extrapolated sum)"),
    )
}

fn pseudoinverse_identities() -> Outcome {
    let mut r = rng(3);
    let mut right_inverse = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..50 {
        let g = random_derivator(&mut r);
        let gamma = g.pseudoinverse();
        let (x0, x1) = gamma.domain();
        let xs: Vec<f64> = (0..1000).map(|i| x0 + (x1 - x0) * i as f64 / 999.0).collect();
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let t = gamma.eval(x).unwrap();
            right_inverse = right_inverse.max((g.continuous(t) - x).abs());
            if x > x0 && t <= prev {
                violations += 1;
            }
            prev = t;
        }
        // flats of g^C, as half-open (a, b]
        let bp = g.breakpoints();
        let v = g.cont_values();
        let flats: Vec<(f64, f64)> = (0..bp.len() - 1).filter(|&i| v[i + 1] == v[i]).map(|i| (bp[i], bp[i + 1])).collect();
        let (lo, hi) = g.window();
        let mut ts: Vec<f64> = (0..1000).map(|i| (lo + (hi - lo) * i as f64 / 999.0).min(hi)).collect();
        ts.extend(g.special_points());
        for &t in &ts {
            let back = gamma.eval(g.continuous(t)).unwrap();
            if back > t {
                violations += 1;
            }
            let in_flat = flats.iter().any(|&(a, b)| a < t && t <= b);
            if !in_flat && (back - t).abs() > 1e-12 * (1.0 + t.abs()) {
                violations += 1;
            }
        }
    }
    outcome(
        right_inverse <= 1e-12 && violations == 0,
        format!("50 derivators, max |g^C(γ(x)) - x| = {right_inverse:.2e}, {violations} order/equality violations"),
    )
}

fn ftc_round_trip() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut atom_mismatch = 0usize;
    let mut checked = 0usize;
    let mut errors = 0usize;
    for _ in 0..100 {
        let g = random_derivator(&mut r);
        let dens = random_piecewise(&mut r, &g, false);
        let density = dens.to_gfunction(&g);
        let s = SobolevFunction::on_window(&g, r.gen_range(-1.0..1.0), density.clone());
        let u = calculus::ftc_build(&s, &g, 1e-13).unwrap();
        let (lo, hi) = g.window();
        let class = g.classify();
        let mut avoid: Vec<f64> = g.special_points();
        avoid.extend(&dens.knots);
        let opts = DerivOptions::numeric(1e-9);
        let mut found = 0;
        while found < 50 {
            let t = r.gen_range(lo..hi);
            let near = avoid.iter().any(|&p| (p - t).abs() < 1e-3 * (hi - lo));
            let flat = class.constancy_intervals.iter().any(|&(a, b)| a <= t && t <= b);
            if near || flat {
                continue;
            }
            found += 1;
            checked += 1;
            match calculus::g_derivative(&u, &g, t, &opts) {
                Ok(v) => worst = worst.max((v - dens.eval(t)).abs()),
                Err(_) => errors += 1,
            }
        }
        for j in g.jumps() {
            let quotient = (u.declared_right_limit(j.at).unwrap() - u.eval(j.at)) / j.size;
            match calculus::g_derivative(&u, &g, j.at, &opts) {
                Ok(v) if v == quotient => {}
                _ => atom_mismatch += 1,
            }
        }
    }
    outcome(
        worst <= 1e-6 && atom_mismatch == 0 && errors == 0,
        format!("{checked} continuity points, max |u'_g - ũ| = {worst:.2e}, {errors} errors, {atom_mismatch} atom mismatches"),
    )
}

fn g_exponential() -> Outcome {
    let g = g1();
    let value = exponential::exp_g(&ExpSpec::constant(1.0, -1.0), &g, 2.0, 1e-12).unwrap();
    let target = 2.0 * 2.5f64.exp();
    let fixture_gap = (value - target).abs();
    let mut r = rng(5);
    let (mut residual, mut jump, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..30 {
        let g = if case == 0 { g1() } else { random_derivator(&mut r) };
        let max_jump = g.jumps().iter().map(|j| j.size).fold(0.0, f64::max);
        let lam = if case == 0 { 1.0 } else { r.gen_range(-0.9 * (1.0f64).min(1.0 / max_jump.max(1e-300))..2.0) };
        let (lo, hi) = g.window();
        let alpha = if case == 0 { -1.0 } else { r.gen_range(lo..hi) };
        let grid: Vec<f64> = (0..40).map(|i| (lo + (hi - lo) * i as f64 / 39.0).min(hi)).collect();
        let v = exponential::verify_exp(&ExpSpec::constant(lam, alpha), &g, &grid, 1e-12).unwrap();
        residual = residual.max(v.residual);
        jump = jump.max(v.jump_error);
        inverse = inverse.max(v.inverse_error);
    }
    let ok = fixture_gap <= 1e-10 && residual <= 1e-8 && jump <= 4.0 * f64::EPSILON && inverse <= 1e-10;
    outcome(
        ok,
        format!(
            "exp_g(1;-1,2) - 2e^2.5 = {fixture_gap:.2e}; 30 cases: residual {residual:.2e}, jump {jump:.2e}, forward·backward {inverse:.2e}"
        ),
    )
}

fn lambda_plus_range() -> Outcome {
    let mut r = rng(6);
    let mut violations = 0;
    let mut checked = 0;
    for case in 0..100 {
        let n = r.gen_range(1..8);
        let mut sizes: Vec<f64> = (0..n).map(|_| 10f64.powf(r.gen_range(-3.0..1.0))).collect();
        if case % 10 == 0 {
            sizes[0] = 0.5;
        }
        let jumps: Vec<(f64, f64)> = sizes.iter().enumerate().map(|(i, &s)| (i as f64 + 0.5, s)).collect();
        let top = n as f64 + 1.0;
        let mut g = Derivator::new(vec![0.0, top], vec![0.0, top], jumps).unwrap();
        if r.gen_bool(0.3) {
            g = g.with_tail_bound(10f64.powf(r.gen_range(-3.0..0.5))).unwrap();
        }
        let lp = exponential::choose_lambda_plus(&g, 0.0);
        for j in g.jumps() {
            checked += 1;
            let x = lp * j.size;
            if !(x > 0.0 && x <= 0.5) {
                violations += 1;
            }
        }
        if !(lp > 0.0 && lp <= 1.0) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("100 jump lists, {checked} atoms, {violations} violations"))
}

fn extension_bounds() -> Outcome {
    let mut r = rng(7);
    let mut failures = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut null_cores = 0;
    let mut case = 0;
    while case < 50 {
        let p = [1.0, 2.0, f64::INFINITY][case % 3];
        let g = random_derivator(&mut r);
        let (lo, hi) = g.window();
        let a = lo + (hi - lo) * r.gen_range(0.1..0.4);
        let b = lo + (hi - lo) * r.gen_range(0.6..0.9);
        // a core without g-mass has vanishing norms and is not a fixture
        if g.measure(&[(a, b)]).unwrap() == 0.0 {
            null_cores += 1;
            continue;
        }
        case += 1;
        let dens = random_piecewise(&mut r, &g, false).to_gfunction(&g);
        let s = SobolevFunction::new(a, b, r.gen_range(-2.0..2.0), dens);
        match exponential::extend(&s, &g, (lo, hi), p, 1e-10) {
            Ok(ext) => {
                let res = &ext.result;
                worst_ratio = worst_ratio.max(res.norms.pf_sobolev / (res.norms.c_tilde * res.norms.f_sobolev));
                if !res.pass() {
                    failures.push(case);
                }
            }
            Err(_) => failures.push(case),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "50 fixtures over p in {{1, 2, inf}} ({null_cores} null cores redrawn), worst ‖Pf‖/(C̃‖f‖) = {worst_ratio:.3}, failing cases {failures:?}"
        ),
    )
}

fn factorization() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    let mut errors = 0;
    let opts = FactorizeOptions { recon_tol: 1e-9, ..FactorizeOptions::default() };
    for case in 0..50 {
        let g = if case == 0 { g1() } else { random_derivator(&mut r) };
        let (label, h) = random_outer(&mut r);
        let f = outer_of_g(&g, h, &label);
        match gfunc::factorize(&f, &g, &opts) {
            Ok(res) => worst = worst.max(res.reconstruction_error),
            Err(Error::ReconstructionError { error, .. }) => {
                worst = worst.max(error);
                errors += 1;
            }
            Err(_) => errors += 1,
        }
    }
    let g = Derivator::new(vec![-1.0, 1.0], vec![-1.0, 1.0], [(0.0, 1.0)]).unwrap();
    let osc = GFunction::new("sin(1/t)", |t: f64| if t <= 0.0 { t } else { (1.0 / t).sin() }).with_knots(vec![0.0]);
    let rejected = matches!(gfunc::factorize(&osc, &g, &FactorizeOptions::default()), Err(Error::NotRegulated { .. }));
    outcome(
        errors == 0 && worst <= 1e-9 && rejected,
        format!("50 compositions, worst reconstruction {worst:.2e}, {errors} errors; sin(1/t) rejected: {rejected}"),
    )
}

fn weierstrass() -> Outcome {
    let mut r = rng(9);
    let mut coeff_err = 0.0f64;
    for case in 0..20 {
        let g = if case < 10 { g1() } else { random_derivator(&mut r) };
        let degree = r.gen_range(0..=5);
        let c: Vec<f64> = (0..=degree).map(|_| r.gen_range(-1.0..1.0)).collect();
        let cc = c.clone();
        let f = GFunction::from_derivator(&g).compose("poly", move |x| cc.iter().rev().fold(0.0, |a, &k| a * x + k));
        let fit = gfunc::weierstrass_fit(&f, &g, degree, 2001, FitMethod::LeastSquares).unwrap();
        for (k, &ck) in c.iter().enumerate() {
            coeff_err = coeff_err.max((fit.coefficients[k] - ck).abs());
        }
    }
    let g = g1();
    let f = GFunction::from_derivator(&g).compose("cos", f64::cos);
    let errs: Vec<f64> =
        (0..=12).map(|d| gfunc::weierstrass_fit(&f, &g, d, 2001, FitMethod::LeastSquares).unwrap().sup_error).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        coeff_err <= 1e-8 && errs[12] <= 1e-3 && monotone,
        format!("20 polynomials, max coefficient error {coeff_err:.2e}; cos∘g degree 12 sup error {:.2e}, non-increasing: {monotone}", errs[12]),
    )
}

fn compactness_checks() -> Outcome {
    let mut r = rng(10);
    let mut implication_broken = 0;
    let mut buc_passes = 0;
    for _ in 0..100 {
        let g = random_derivator(&mut r);
        let mut members = Vec::new();
        for _ in 0..r.gen_range(1..5) {
            let m = match r.gen_range(0..3) {
                0 => {
                    let (label, h) = random_outer(&mut r);
                    outer_of_g(&g, h, &label)
                }
                1 => random_piecewise(&mut r, &g, true).to_gfunction(&g),
                _ => GFunction::from_derivator(&g).scale(r.gen_range(-1.0..1.0)),
            };
            members.push(m);
        }
        let fam = FamilySample::new(members);
        let eps = r.gen_range(0.05..0.5);
        let (lo, hi) = g.window();
        let deltas = log_grid(1e-6 * (hi - lo), 0.5 * (hi - lo), 12);
        let buc = compactness::buc_diagnose(&fam, &g, eps, &deltas).unwrap();
        let bc = compactness::bc_diagnose(&fam, &g, eps, &deltas).unwrap();
        if buc.passes() {
            buc_passes += 1;
            if !bc.passes() {
                implication_broken += 1;
            }
        }
    }

    let bump = |center: f64| {
        GFunction::continuous(format!("bump {center}"), move |t: f64| {
            let u = t - center;
            if u.abs() < 0.5 {
                (1.0 - 4.0 * u * u).powi(2)
            } else {
                0.0
            }
        })
        .with_knots(vec![center - 0.5, center + 0.5])
    };
    let line = Derivator::identity(0.0, 31.0).unwrap();
    let bumps = FamilySample::new((1..=30).map(|k| bump(k as f64)).collect()).with_outside_mass(0.0);
    let cert = compactness::lp_diagnose(&bumps, &line, &LpParams::new(2.0, 0.1, 20.0, 0.01)).unwrap();
    let bumps_fail = cert.condition(3).map(|c| c.verdict) == Some(Verdict::Fail);

    let g = Derivator::new(vec![0.0, 20.0], vec![0.0, 20.0], [(1.0, 0.5), (3.0, 0.25)]).unwrap();
    let lp = exponential::choose_lambda_plus(&g, 0.0);
    let decay = exponential::exp_function(&ExpSpec::constant(-lp, 0.0), &g, 1e-12).unwrap();
    // the tail continues as exp(-lp (t - 20)) times its value at 20
    let end = decay.eval(20.0);
    let outside = end * end / (2.0 * lp);
    let single = FamilySample::new(vec![decay]).with_outside_mass(outside);
    let cert = compactness::lp_diagnose(&single, &g, &LpParams::new(2.0, 0.1, 10.0, 1e-3)).unwrap();
    let decay_passes = cert.passes() && cert.conditions.len() == 4;

    let basis = |k: usize| {
        let mut v = vec![0.0; 40];
        v[k] = 1.0;
        TruncatedSequence::new(v, 0.0)
    };
    let family: Vec<_> = (0..40).map(basis).collect();
    let basis_fails = [0.9, 0.5, 0.1].iter().all(|&eps| {
        compactness::lp_seq_diagnose(&family, 2.0, eps, None).map(|c| c.verdict == Verdict::Fail).unwrap_or(false)
    });

    outcome(
        implication_broken == 0 && bumps_fail && decay_passes && basis_fails,
        format!(
            "BUC => BC on 100 families ({buc_passes} BUC passes, {implication_broken} broken); shifting bumps fail tightness: {bumps_fail}; decaying exponential passes: {decay_passes}; shifting basis fails: {basis_fails}"
        ),
    )
}

fn decompositions() -> Outcome {
    let mut r = rng(11);
    let mut sum_gap = 0usize;
    let mut residual = 0.0f64;
    for _ in 0..100 {
        let g = random_derivator(&mut r);
        let f = random_piecewise(&mut r, &g, true).to_gfunction(&g);
        let split = decompose::additive_split(&f, &g, 1e-12).unwrap();
        residual = residual.max(split.max_residual);
        let (lo, hi) = g.window();
        let mut ts: Vec<f64> = (0..200).map(|i| lo + (hi - lo) * i as f64 / 199.0).collect();
        ts.extend(g.special_points());
        for t in ts {
            let (fb, fc, fv) = (split.f_b.eval(t), split.f_c.eval(t), f.eval(t));
            if (fb + fc - fv).abs() > 2.0 * f64::EPSILON * fb.abs().max(fv.abs()) {
                sum_gap += 1;
            }
        }
    }
    let g = g1();
    let dc = decompose::dc_norm(&GFunction::from_derivator(&g), &g, 1e-12).unwrap();
    let shifted = GFunction::from_derivator(&g).compose("+2", |x| x + 2.0);
    let mul = decompose::multiplicative_split(&shifted, &g, 0.0, 1e-12).unwrap();
    let step_ok = mul.phi.eval(0.0) == 1.0 && mul.phi_steps.len() == 1 && (mul.phi_steps[0].1 - 1.5).abs() <= 1e-15;
    outcome(
        sum_gap == 0 && residual <= 1e-9 && (dc - 3.5).abs() <= 1e-12 && step_ok && mul.max_psi_residual <= 1e-9,
        format!(
            "100 fixtures: {sum_gap} points with f^B + f^C != f, max f^C jump {residual:.2e}; DC norm of g = {dc}; φ step (1, {}) with ψ residual {:.2e}",
            mul.phi_steps.first().map_or(f64::NAN, |s| s.1),
            mul.max_psi_residual
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("integral against the Riemann–Stieltjes sum", integration_vs_riemann_stieltjes),
        ("continuous part plus atoms", measure_decomposition),
        ("pseudoinverse identities", pseudoinverse_identities),
        ("fundamental theorem round trip", ftc_round_trip),
        ("g-exponential", g_exponential),
        ("tail rate range", lambda_plus_range),
        ("extension bounds", extension_bounds),
        ("factorization through g", factorization),
        ("polynomial fits in g", weierstrass),
        ("compactness certificates", compactness_checks),
        ("jump decompositions", decompositions),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let status = if out.ok { "PASS" } else { "FAIL" };
        if !out.ok {
            failed += 1;
        }
        println!("{status} criterion {}: {name}: {} [{:.1} s]", i + 1, out.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
