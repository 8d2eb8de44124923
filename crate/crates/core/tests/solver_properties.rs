use std::f64::consts::PI;

use orlicz_core::nfunction::NFunction;
use orlicz_core::solver::problem::test_identity;
use orlicz_core::solver::{mollify_measure, solve_approximate, Atom, FluxForm, Grid, OperatorSpec, SolveOptions};
use orlicz_core::{Exec, SampledField};
use proptest::prelude::*;

fn seq() -> SolveOptions {
    SolveOptions { exec: Exec::Sequential, ..Default::default() }
}

/// Green's function of `-Δ` on the unit square with zero boundary values,
/// summed along the direction in which the source is farther away.
fn green(x: [f64; 2], y: [f64; 2]) -> f64 {
    let (along, across) = if (x[1] - y[1]).abs() >= (x[0] - y[0]).abs() { (0, 1) } else { (1, 0) };
    let (lo, hi) = (x[across].min(y[across]), x[across].max(y[across]));
    let mut g = 0.0;
    for m in 1..400 {
        let k = m as f64 * PI;
        // sinh(k lo) sinh(k (1 - hi)) / sinh(k), written without overflow
        let a = k * lo;
        let b = k * (1.0 - hi);
        let ratio = (a + b - k).exp() * (1.0 - (-2.0 * a).exp()) * (1.0 - (-2.0 * b).exp()) / (2.0 * (1.0 - (-2.0 * k).exp()));
        g += 2.0 / k * (k * x[along]).sin() * (k * y[along]).sin() * ratio;
    }
    g
}

#[test]
fn dirac_solution_matches_green_function() {
    let n = 129;
    let grid = Grid { dim: 2, n, extent: 1.0 };
    let atoms = [Atom { location: vec![0.5, 0.5], weight: 1.0 }];
    let f = mollify_measure(&atoms, 16.0, &grid, Exec::Parallel).unwrap();
    let op = OperatorSpec::potential(NFunction::power(2.0).unwrap()).unwrap();
    let s = solve_approximate(&op, &f, &SolveOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for c in 0..s.u.cells() {
        let x = s.u.centre(c);
        let r = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
        let wall = x[0].min(x[1]).min(1.0 - x[0]).min(1.0 - x[1]);
        if r >= 0.2 && wall >= 0.1 {
            // the flux of t^2 is 2 grad u, so u is half the Green's function
            let exact = 0.5 * green(x, [0.5, 0.5]);
            worst = worst.max((s.u.values()[c] - exact).abs() / exact);
            checked += 1;
        }
    }
    assert!(checked > 1000);
    assert!(worst <= 0.05, "worst relative error {worst}");
}

#[test]
fn green_function_is_symmetric_and_positive() {
    let a = green([0.3, 0.7], [0.6, 0.2]);
    let b = green([0.6, 0.2], [0.3, 0.7]);
    assert!(a > 0.0 && (a - b).abs() < 1e-12 * a);
}

#[test]
fn execution_policies_give_identical_solutions() {
    let op = OperatorSpec::potential(NFunction::power(3.0).unwrap()).unwrap();
    let f = SampledField::from_fn(2, 33, 1.0, |x| 1.0 + x[0] * x[1]).unwrap();
    let a = solve_approximate(&op, &f, &seq()).unwrap();
    let b = solve_approximate(&op, &f, &SolveOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.energy_history, b.energy_history);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn newton_energy_never_increases(p in 1.5f64..5.0, c in 0.1f64..10.0, n in 16usize..96) {
        let op = OperatorSpec::potential(NFunction::power(p).unwrap()).unwrap();
        let f = SampledField::from_fn(1, n, 1.0, |x| c * (1.0 + (3.0 * x[0]).sin())).unwrap();
        let s = solve_approximate(&op, &f, &seq()).unwrap();
        let scale = s.energy_history.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        prop_assert!(s.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-13 * scale));
    }

    #[test]
    fn weak_form_identity_holds(p in 1.5f64..4.0, c in 0.5f64..5.0, seed in 0u64..1000) {
        let op = OperatorSpec::potential(NFunction::power(p).unwrap()).unwrap();
        let f = SampledField::from_fn(2, 17, 1.0, |x| c * (1.0 + x[0])).unwrap();
        let s = solve_approximate(&op, &f, &seq()).unwrap();
        prop_assert!(test_identity(&op, &s.u, &f, seed, Exec::Sequential).unwrap() <= 1e-7);
    }

    #[test]
    fn nonnegative_data_give_nonnegative_solutions(p in 1.5f64..4.0, vals in prop::collection::vec(0.0f64..5.0, 64)) {
        let op = OperatorSpec::potential(NFunction::power(p).unwrap()).unwrap();
        let f = SampledField::scalar(1, 64, 1.0, vals).unwrap();
        let s = solve_approximate(&op, &f, &seq()).unwrap();
        prop_assert!(s.u.values().iter().all(|&v| v >= -1e-12 * s.u.sup_norm().max(1.0)));
    }

    #[test]
    fn larger_data_give_larger_solutions(p in 1.5f64..4.0, vals in prop::collection::vec(0.0f64..5.0, 48), bump in 0.1f64..3.0) {
        let op = OperatorSpec::potential(NFunction::power(p).unwrap()).unwrap();
        let f = SampledField::scalar(1, 48, 1.0, vals).unwrap();
        let g = f.map(|v| v + bump).unwrap();
        let (u, w) = (solve_approximate(&op, &f, &seq()).unwrap().u, solve_approximate(&op, &g, &seq()).unwrap().u);
        let tol = 1e-9 * w.sup_norm();
        prop_assert!(u.values().iter().zip(w.values()).all(|(a, b)| *a <= b + tol));
    }

    #[test]
    fn z_perturbed_operator_converges(theta in -0.8f64..0.8, c in 0.5f64..5.0) {
        let op = OperatorSpec::new(NFunction::power(2.0).unwrap(), FluxForm::ZPerturbed { theta }).unwrap();
        let f = SampledField::constant(1, 48, 1.0, c).unwrap();
        prop_assert!(solve_approximate(&op, &f, &seq()).unwrap().converged);
    }
}
