mod common;

use proptest::prelude::*;
use rand::Rng;
use stj_core::calculus;
use stj_core::decompose::dc_norm;
use stj_core::exponential::{q_transform, Rate};
use stj_core::gfunc::NodeTable;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivator_is_non_decreasing(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = random_derivator(&mut rng(seed));
        let (lo, hi) = g.window();
        let (s, t) = (lo + (hi - lo) * a.min(b), lo + (hi - lo) * a.max(b));
        prop_assert!(g.eval(s).unwrap() <= g.eval(t).unwrap());
        prop_assert!(g.eval(t).unwrap() <= g.eval_right(t).unwrap());
    }

    #[test]
    fn pseudoinverse_never_overshoots(seed in any::<u64>(), a in 0.0f64..=1.0) {
        let g = random_derivator(&mut rng(seed));
        let (lo, hi) = g.window();
        let t = (lo + (hi - lo) * a).min(hi);
        let gamma = g.pseudoinverse();
        prop_assert!(gamma.eval(g.continuous(t)).unwrap() <= t);
    }

    #[test]
    fn q_is_an_involution(seed in any::<u64>(), lam in -0.9f64..3.0, pick in 0usize..8) {
        let g = random_derivator(&mut rng(seed));
        let t = match g.jumps().get(pick) {
            Some(j) => j.at,
            None => g.window().0,
        };
        let lam = lam / g.delta(t).max(1.0);
        let q = q_transform(&Rate::Constant(lam), &g, t).unwrap();
        let back = q_transform(&Rate::Constant(q), &g, t).unwrap();
        prop_assert!((back - lam).abs() <= 1e-12 * (1.0 + lam.abs()));
    }

    #[test]
    fn measure_splits_into_continuous_and_atoms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_derivator(&mut r);
        let f = random_piecewise(&mut r, &g, false).to_gfunction(&g);
        let (lo, hi) = g.window();
        let (c, d) = (r.gen_range(lo..hi), hi);
        let whole = calculus::integrate(&f, &g, c, d, 1e-12).unwrap();
        let split = calculus::integrate_continuous_density(&f, &g, c, d, 1e-12).unwrap() + calculus::atom_part(&f, &g, c, d);
        prop_assert!((whole - split).abs() <= 1e-8 * (1.0 + whole.abs()));
    }

    #[test]
    fn dc_norm_is_a_norm(seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut r = rng(seed);
        let g = random_derivator(&mut r);
        let f = random_piecewise(&mut r, &g, true).to_gfunction(&g);
        let h = random_piecewise(&mut r, &g, true).to_gfunction(&g);
        let nf = dc_norm(&f, &g, 1e-12).unwrap();
        let nh = dc_norm(&h, &g, 1e-12).unwrap();
        let sum = dc_norm(&f.add(&h), &g, 1e-12).unwrap();
        prop_assert!(sum <= nf + nh + 1e-12 * (nf + nh));
        let scaled = dc_norm(&f.scale(c), &g, 1e-12).unwrap();
        prop_assert!((scaled - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
    }

    #[test]
    fn node_table_hits_its_nodes(xs in prop::collection::btree_set(-1000i32..1000, 2..40)) {
        let xs: Vec<f64> = xs.into_iter().map(|v| v as f64 / 100.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let table = NodeTable::new(xs.clone(), ys.clone(), &[xs[xs.len() / 2]]);
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert_eq!(table.eval(*x), *y);
        }
    }
}

#[test]
fn node_table_is_cubic_exact() {
    let xs: Vec<f64> = (0..30).map(|i| (i as f64 / 29.0).powi(2) * 3.0).collect();
    let cubic = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
    let table = NodeTable::new(xs.clone(), xs.iter().map(|&x| cubic(x)).collect(), &[]);
    for k in 0..300 {
        let x = 3.0 * k as f64 / 299.0;
        assert!((table.eval(x) - cubic(x)).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn node_table_keeps_breaks_linear() {
    let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let ys = vec![0.0, 1.0, 4.0, 4.0, 4.0];
    let table = NodeTable::new(xs, ys, &[2.0, 3.0]);
    assert_eq!(table.eval(2.5), 4.0);
}

#[test]
fn pseudoinverse_near_zero_is_minimal() {
    let g = g1();
    let gamma = g.pseudoinverse();
    for x in [2.6234726767955157e-9, 1e-300, -1e-17, 0.5] {
        let t = gamma.eval(x).unwrap();
        assert!(g.continuous(t) >= x);
        assert!(g.continuous(t.next_down()) < x || t == -1.0, "x = {x}");
    }
}
