mod common;

use std::f64::consts::PI;

use bundle_flow::geometry::{
    curvature_sup_proxy, oneill_quantity, radial_laplacian, ricci_full, ricci_kahler, shape_operator_eigs, RadialJet,
};
use bundle_flow::grid::{Endpoint, ProfileState};
use bundle_flow::{test_b, BundleSpec};
use common::{berger_f, berger_h, jet_of, rel_diff, test_b_jet, BergerOracle};
use proptest::prelude::*;

fn check_oracle(c: f64) {
    let oracle = BergerOracle { h: berger_h, f: berger_f, c };
    let (q, k) = oracle.bundle();
    let spec = BundleSpec::new(vec![1], vec![k], vec![q], None).unwrap();
    for j in 0..10 {
        let s = PI * (j as f64 + 0.5) / 10.0;
        let ours = ricci_full(&spec, &jet_of(berger_h, berger_f, s));
        let ric = oracle.ricci(s);
        let f = berger_f(s).0;
        assert!(rel_diff(ours.radial, ric[0][0]) < 1e-8, "s={s}: {} vs {}", ours.radial, ric[0][0]);
        assert!(rel_diff(ours.fiber, ric[3][3]) < 1e-8, "s={s}: {} vs {}", ours.fiber, ric[3][3]);
        let horiz = ours.horizontal[0] / (f * f);
        assert!(rel_diff(horiz, ric[1][1]) < 1e-8, "s={s}: {horiz} vs {}", ric[1][1]);
        assert!(rel_diff(ric[1][1], ric[2][2]) < 1e-10);
        for x in 0..4 {
            for y in 0..4 {
                if x != y {
                    assert!(ric[x][y].abs() < 1e-8, "Ric({x},{y}) = {}", ric[x][y]);
                }
            }
        }
    }
}

#[test]
fn oracle_agrees_with_unit_twist() {
    check_oracle(2.0);
}

#[test]
fn oracle_agrees_with_double_twist() {
    check_oracle(1.0);
}

#[test]
fn oracle_on_round_sphere() {
    // H = F = sin s with c = 1 is the round unit S⁴, so Ric = 3
    fn h(s: f64) -> (f64, f64, f64) {
        (s.sin(), s.cos(), -s.sin())
    }
    fn f(s: f64) -> (f64, f64, f64) {
        (s.sin(), s.cos(), -s.sin())
    }
    let oracle = BergerOracle { h, f, c: 1.0 };
    let ric = oracle.ricci(1.1);
    for a in 0..4 {
        assert!((ric[a][a] - 3.0).abs() < 1e-9, "{:?}", ric);
    }
    let spec = BundleSpec::new(vec![1], vec![4.0], vec![2], None).unwrap();
    let ours = ricci_full(&spec, &jet_of(h, f, 1.1));
    assert!((ours.radial - 3.0).abs() < 1e-12);
    assert!((ours.fiber - 3.0).abs() < 1e-12);
    assert!((ours.horizontal[0] / 1.1f64.sin().powi(2) - 3.0).abs() < 1e-12);
}

#[test]
fn cross_form_on_test_b() {
    let spec = BundleSpec::new(vec![1], vec![2.0], vec![2], Some(vec![1.0])).unwrap();
    for j in 1..20 {
        let jet = test_b_jet(PI * j as f64 / 20.0);
        let full = ricci_full(&spec, &jet);
        let kahler = ricci_kahler(&spec, &jet, 1e-6);
        assert!(!kahler.advisory);
        assert!(full.max_relative_diff(&kahler.ricci) < 1e-10);
        assert!(rel_diff(full.radial, full.fiber) < 1e-12);
    }
}

#[test]
fn discrete_matches_analytic_at_second_order() {
    // odd cell counts put a center on s = π/2
    let mut errs = Vec::new();
    for cells in [101, 201, 401] {
        let (_, st) = test_b(cells).unwrap();
        let e = shape_operator_eigs(&st, cells / 2).unwrap();
        errs.push((e.base[0] - 0.25).abs() + e.fiber.abs());
    }
    assert!(errs[2] < 1e-6);
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn laplacian_anchors() {
    let (spec, st) = test_b(401).unwrap();
    let f2 = st.f_sq(0);
    assert!((radial_laplacian(&spec, &st, &f2, 200).unwrap() - 1.0).abs() < 1e-6);
    let ones = vec![3.0; st.cells()];
    assert!(radial_laplacian(&spec, &st, &ones, 17).unwrap().abs() < 1e-9);
    let left = bundle_flow::geometry::boundary_laplacian(&spec, &st, &f2, Endpoint::Left).unwrap();
    let right = bundle_flow::geometry::boundary_laplacian(&spec, &st, &f2, Endpoint::Right).unwrap();
    assert!((left - 4.0).abs() < 1e-3, "{left}");
    assert!((right + 4.0).abs() < 1e-3, "{right}");
    assert!(radial_laplacian(&spec, &st, &f2, 401).is_err());
}

#[test]
fn non_kahler_constant_f() {
    let spec = BundleSpec::new(vec![1], vec![2.0], vec![2], None).unwrap();
    let jet = RadialJet { h: 1.0, dh: 0.0, d2h: -1.0, f: vec![2.0], df: vec![0.0], d2f: vec![0.0] };
    let full = ricci_full(&spec, &jet);
    assert!((full.radial - 1.0).abs() < 1e-15);
    assert!(ricci_kahler(&spec, &jet, 1e-6).advisory);
    assert_eq!(oneill_quantity(&jet), 0.0);
}

fn scaled_jet(jet: &RadialJet, lam: f64) -> RadialJet {
    // lengths scale by λ, s by λ: d/ds scales by 1/λ
    RadialJet {
        h: jet.h * lam,
        dh: jet.dh,
        d2h: jet.d2h / lam,
        f: jet.f.iter().map(|v| v * lam).collect(),
        df: jet.df.clone(),
        d2f: jet.d2f.iter().map(|v| v / lam).collect(),
    }
}

proptest! {
    #[test]
    fn ricci_scales_inversely(s in 0.2f64..2.9, k_scale in 0.1f64..10.0) {
        let spec = BundleSpec::new(vec![1], vec![2.0], vec![1], None).unwrap();
        let jet = jet_of(berger_h, berger_f, s);
        let lam = k_scale.sqrt();
        let a = ricci_full(&spec, &jet);
        let b = ricci_full(&spec, &scaled_jet(&jet, lam));
        prop_assert!(rel_diff(b.radial * k_scale, a.radial) < 1e-10);
        prop_assert!(rel_diff(b.fiber * k_scale, a.fiber) < 1e-10);
        // the horizontal coefficient is taken against g_N, which does not scale
        prop_assert!(rel_diff(b.horizontal[0], a.horizontal[0]) < 1e-10);
        prop_assert!(rel_diff(oneill_quantity(&scaled_jet(&jet, lam)) * k_scale, oneill_quantity(&jet)) < 1e-10);
    }

    #[test]
    fn proxy_scales_inversely(k_scale in 0.05f64..20.0, cells in 16usize..80) {
        let (spec, st) = test_b(cells).unwrap();
        let a = curvature_sup_proxy(&spec, &st).unwrap();
        let b = curvature_sup_proxy(&spec, &st.scaled(k_scale)).unwrap();
        prop_assert!(rel_diff(b.value * k_scale, a.value) < 1e-10);
    }
}

#[test]
fn proxy_of_test_b_is_one() {
    let (spec, st) = test_b(400).unwrap();
    let p = curvature_sup_proxy(&spec, &st).unwrap();
    assert!((p.value - 1.0).abs() < 1e-3);
    let bad = ProfileState { h: vec![f64::NAN; 400], ..st };
    assert!(curvature_sup_proxy(&spec, &bad).is_err());
}
