use orlicz_core::embedding::{embedding_functions, growth_class, regularity_targets, sobolev_poincare_check, GrowthClass};
use orlicz_core::nfunction::{Growth, NFunction};
use orlicz_core::numerics::geomspace;
use orlicz_core::{Exec, SampledField};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn subcritical_power_has_sobolev_conjugate_slope(n in 2usize..5, frac in 0.15f64..0.85) {
        let p = 1.0 + frac * (n as f64 - 1.0);
        let e = embedding_functions(&NFunction::power(p).unwrap(), n, None, Exec::Sequential).unwrap();
        let expected = n as f64 * p / (n as f64 - p);
        prop_assert!((e.b_n_tail_slope(32) - expected).abs() < 0.05 * expected.max(1.0));
        prop_assert_eq!(e.growth.class, GrowthClass::Slow);
    }

    #[test]
    fn supercritical_power_is_never_slow(n in 2usize..5, excess in 0.01f64..4.0) {
        // doubling increments shrink by 2^{-excess/(N-1)}; below 0.9 the verdict must be Fast
        let p = n as f64 + excess;
        let class = growth_class(&NFunction::power(p).unwrap(), n, None).unwrap().class;
        prop_assert_ne!(class, GrowthClass::Slow);
        if excess / (n as f64 - 1.0) >= 0.2 {
            prop_assert_eq!(class, GrowthClass::Fast);
        }
    }
}

#[test]
fn embedding_tables_are_increasing_and_invertible() {
    for (b, n) in [(NFunction::power(2.0).unwrap(), 3), (NFunction::llogl(), 2), (NFunction::zygmund(1.5, 1.0).unwrap(), 3)] {
        let e = embedding_functions(&b, n, None, Exec::Sequential).unwrap();
        let knots = e.b_n.knots();
        assert!(knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1), "{}", b.name());
        for (s, h) in e.h.knots().into_iter().step_by(17) {
            let back = e.h_inverse.eval(h).unwrap();
            assert!((back - s).abs() < 1e-10 * s, "{}: knot {s} -> {back}", b.name());
        }
        // between knots the two interpolants differ by the table resolution
        for s in geomspace(1e-3, 1e3, 13) {
            let back = e.h_inverse.eval(e.h_n(s).unwrap()).unwrap();
            assert!((back - s).abs() < 1e-3 * s, "{}: {s} -> {back}", b.name());
        }
    }
}

#[test]
fn power_two_in_three_dimensions_matches_closed_form() {
    let e = embedding_functions(&NFunction::power(2.0).unwrap(), 3, None, Exec::Sequential).unwrap();
    for t in geomspace(0.1, 10.0, 9) {
        let exact = t.powi(6) / 16.0;
        assert!((e.b_n(t).unwrap() - exact).abs() < 1e-3 * exact, "t={t}");
    }
}

#[test]
fn fast_growth_functions_classify_fast() {
    for b in [NFunction::t_exp_t(), NFunction::exp_conjugate()] {
        assert_eq!(growth_class(&b, 3, None).unwrap().class, GrowthClass::Fast, "{}", b.name());
    }
}

#[test]
fn targets_are_increasing() {
    let t = regularity_targets(&NFunction::power(1.5).unwrap(), 2, 1.0, 2f64.sqrt(), None, Exec::Sequential).unwrap();
    for target in [&t.phi1, &t.psi1, &t.phi2, &t.psi2].into_iter().flatten() {
        let vals: Vec<f64> = geomspace(1e-2, 1e2, 30).iter().map(|&s| target.value(s).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{}", target.name());
    }
}

#[test]
fn sobolev_poincare_holds_for_a_bump() {
    let n = 48;
    let u = SampledField::from_fn(2, n, 1.0, |x| (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()).unwrap();
    // zero the boundary ring so the check accepts the field
    let vals: Vec<f64> = (0..u.cells()).map(|c| if u.is_boundary_cell(c) { 0.0 } else { u.values()[c] }).collect();
    let u = u.with_values(1, vals).unwrap();
    let g = u.gradient().unwrap();
    let c = sobolev_poincare_check(&NFunction::power(1.5).unwrap(), &u, &g, 2, Exec::Sequential).unwrap();
    assert!(c.ratio <= 1.0, "{c:?}");
}
