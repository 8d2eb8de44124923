use orlicz_core::nfunction::{delta2_stats, NFunction};
use orlicz_core::numerics::geomspace;
use orlicz_core::Exec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn sample_kinds() -> Vec<NFunction> {
    vec![
        NFunction::power(2.0).unwrap(),
        NFunction::power(3.5).unwrap(),
        NFunction::zygmund(1.5, 1.0).unwrap(),
        NFunction::llogl(),
        NFunction::exp_conjugate(),
        NFunction::t_exp_t(),
        NFunction::pathological(2.0, 3.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_power_conjugate_matches_closed_form(p in 1.2f64..6.0, s in 0.01f64..50.0) {
        // (t^p / p)~ = s^q / q with 1/p + 1/q = 1
        let q = p / (p - 1.0);
        let conj = NFunction::scaled_power(p, 1.0 / p).unwrap().conjugate().unwrap();
        prop_assert!(rel(conj.eval(s).unwrap(), s.powf(q) / q) < 1e-9);
    }

    #[test]
    fn conjugation_reverses_order(p in 1.2f64..5.0, a in 0.1f64..3.0, ratio in 1.0f64..4.0, s in 0.01f64..20.0) {
        let small = NFunction::scaled_power(p, a).unwrap();
        let large = NFunction::scaled_power(p, a * ratio).unwrap();
        let (cs, cl) = (small.conjugate().unwrap(), large.conjugate().unwrap());
        prop_assert!(cl.eval(s).unwrap() <= cs.eval(s).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn biconjugate_returns_power(p in 1.2f64..6.0, t in 0.01f64..50.0) {
        let b = NFunction::power(p).unwrap();
        let bb = b.conjugate().unwrap().conjugate().unwrap();
        prop_assert!(rel(bb.eval(t).unwrap(), b.eval(t).unwrap()) < 1e-8);
    }

    #[test]
    fn inverse_round_trips(idx in 0usize..7, t in 0.01f64..30.0) {
        let b = &sample_kinds()[idx];
        let y = b.eval(t).unwrap();
        prop_assert!(rel(b.inverse(y).unwrap(), t) < 1e-10);
    }
}

#[test]
fn fenchel_young_holds_on_a_thousand_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for b in sample_kinds() {
        let conj = b.conjugate().unwrap();
        for _ in 0..1000 {
            let t: f64 = 10f64.powf(rng.gen_range(-2.0..1.2));
            let s: f64 = 10f64.powf(rng.gen_range(-2.0..1.2));
            let rhs = b.eval(t).unwrap() + conj.eval(s).unwrap();
            assert!(t * s <= rhs * (1.0 + 1e-10), "{}: t={t} s={s}", b.name());
        }
    }
}

#[test]
fn fenchel_young_is_sharp_on_the_derivative() {
    for b in sample_kinds().into_iter().filter(|b| b.is_smooth()) {
        let conj = b.conjugate().unwrap();
        for t in geomspace(0.05, 10.0, 15) {
            let s = b.derivative(t).unwrap();
            let rhs = b.eval(t).unwrap() + conj.eval(s).unwrap();
            assert!(rel(t * s, rhs) < 1e-8, "{}: t={t}", b.name());
        }
    }
}

#[test]
fn pathological_doubling_ratio_is_unbounded() {
    let b = NFunction::pathological(2.0, 3.0).unwrap();
    let stats = delta2_stats(&b, 1.0, 1e9, 4000, Exec::Sequential).unwrap();
    assert!(stats.ratio_max >= 16.0 && stats.growing_evidence, "{}", stats.ratio_max);
    let p = NFunction::power(3.0).unwrap();
    let stats = delta2_stats(&p, 1.0, 1e9, 400, Exec::Sequential).unwrap();
    assert!((stats.ratio_max - 8.0).abs() < 1e-9);
}
