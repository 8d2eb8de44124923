use orlicz_core::nfunction::NFunction;
use orlicz_core::norms::{holder_check, luxemburg_norm, rearrange, truncate};
use orlicz_core::{Exec, SampledField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kind(idx: usize) -> NFunction {
    match idx {
        0 => NFunction::power(2.0).unwrap(),
        1 => NFunction::power(4.0).unwrap(),
        2 => NFunction::zygmund(1.0, 1.0).unwrap(),
        3 => NFunction::llogl(),
        _ => NFunction::exp_conjugate(),
    }
}

fn field(vals: Vec<f64>) -> SampledField {
    let n = vals.len();
    SampledField::scalar(1, n, 1.0, vals).unwrap()
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (4usize..48).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn luxemburg_triangle_inequality(idx in 0usize..5, (a, b) in pair()) {
        let b_fn = kind(idx);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let lhs = luxemburg_norm(&b_fn, &field(sum), Exec::Sequential).unwrap();
        let rhs = luxemburg_norm(&b_fn, &field(a), Exec::Sequential).unwrap()
            + luxemburg_norm(&b_fn, &field(b), Exec::Sequential).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn luxemburg_homogeneity(idx in 0usize..5, (a, _) in pair(), alpha in -20.0f64..20.0) {
        let b_fn = kind(idx);
        let f = field(a);
        let n = luxemburg_norm(&b_fn, &f, Exec::Sequential).unwrap();
        let scaled = luxemburg_norm(&b_fn, &f.map(|v| alpha * v).unwrap(), Exec::Sequential).unwrap();
        prop_assert!((scaled - alpha.abs() * n).abs() <= 1e-11 * alpha.abs() * n + 1e-300);
    }

    #[test]
    fn hardy_littlewood_inequality((a, b) in pair()) {
        let (f, g) = (field(a), field(b));
        let cm = f.cell_measure();
        let direct: f64 = f.values().iter().zip(g.values()).map(|(x, y)| (x * y).abs()).sum::<f64>() * cm;
        let (pf, pg) = (rearrange(&f, Exec::Sequential).unwrap(), rearrange(&g, Exec::Sequential).unwrap());
        let sorted: f64 = pf.fstar.iter().zip(&pg.fstar).map(|(x, y)| x * y).sum::<f64>() * cm;
        prop_assert!(direct <= sorted * (1.0 + 1e-12));
    }

    #[test]
    fn maximal_function_dominates_and_decreases((a, _) in pair()) {
        let p = rearrange(&field(a), Exec::Sequential).unwrap();
        let fss = p.fstarstar();
        prop_assert!(p.fstar.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(fss.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(fss.iter().zip(&p.fstar).all(|(s, f)| *s >= f * (1.0 - 1e-12)));
    }

    #[test]
    fn truncation_is_bounded_and_idempotent((a, _) in pair(), t in 0.1f64..4.0) {
        let once = truncate(&field(a), t).unwrap();
        prop_assert!(once.sup_norm() <= t);
        prop_assert_eq!(truncate(&once, t).unwrap(), once);
    }
}

#[test]
fn holder_inequality_on_two_hundred_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..200 {
        let b = kind(i % 5);
        let n = rng.gen_range(4..24);
        let cells = n * n;
        let scale: f64 = rng.gen_range(0.1..4.0);
        let xi: Vec<f64> = (0..2 * cells).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..2 * cells).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi = SampledField::new(2, n, 1.0, 2, xi).unwrap();
        let eta = SampledField::new(2, n, 1.0, 2, eta).unwrap();
        let h = holder_check(&b, &xi, &eta, Exec::Sequential).unwrap();
        assert!(h.ok, "pair {i} with {}: {} > {}", b.name(), h.lhs, h.rhs);
    }
}

#[test]
fn norms_agree_across_execution_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vals: Vec<f64> = (0..64 * 64).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let f = SampledField::scalar(2, 64, 1.0, vals).unwrap();
    for i in 0..5 {
        let b = kind(i);
        let seq = luxemburg_norm(&b, &f, Exec::Sequential).unwrap();
        let par = luxemburg_norm(&b, &f, Exec::Parallel).unwrap();
        assert_eq!(seq.to_bits(), par.to_bits());
    }
}
