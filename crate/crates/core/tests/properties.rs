use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;
use strichartz_lab::exponent::{
    a_of_p, classify_power_potential, derivative_exponents, is_admissible, parse_rational, strichartz_pair, Assumption, ClassifyOptions,
    ClusterSpec, Exponent,
};
use strichartz_lab::norms::{mixed_norm, random_field, MixedNormSpec, RandomFieldOptions};
use strichartz_lab::propagator::{BackendConfig, BackendKind, Evolver, Propagate};
use strichartz_lab::state::StateVector;
use strichartz_lab::verify::Check;
use strichartz_lab::{ParticleSystem, TensorGrid};

fn finite(num: i64, den: i64) -> Exponent {
    Exponent::ratio(num, den)
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![(1i64..200, 1i64..40).prop_map(|(a, b)| finite(a, b)), Just(Exponent::Infinite),]
}

fn state_2x16(seed: u64) -> StateVector {
    let grid = Arc::new(TensorGrid::uniform(2, 1, 4.0, 16).unwrap());
    random_field(&grid, seed, 0, &RandomFieldOptions::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strichartz_pair_is_admissible(n in 3usize..9, p in exponent()) {
        if let Ok((l, theta)) = strichartz_pair(n, p) {
            prop_assert!(is_admissible(n, l, theta), "n={n} p={p} -> ({l}, {theta})");
        }
    }

    #[test]
    fn a_of_p_matches_reciprocal_relation(n in 3usize..9, p in exponent()) {
        if let Ok(a) = a_of_p(n, p) {
            let lhs = a.recip().unwrap();
            let rhs = Rational64::from_integer(1) - Rational64::from_integer(n as i64) * p.recip().unwrap() / 2;
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn derivative_exponents_stay_lebesgue(n in 3usize..9, p in exponent()) {
        if let Ok(d) = derivative_exponents(n, p) {
            for e in [d.b, d.q, d.p_tilde] {
                prop_assert!(e >= Exponent::int(1));
            }
            prop_assert!(d.p_tilde >= Exponent::int(2));
        }
    }

    #[test]
    fn exponent_text_round_trip(p in exponent()) {
        let back: Exponent = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rational_text_round_trip(num in -500i64..500, den in 1i64..60) {
        let r = Rational64::new(num, den);
        prop_assert_eq!(parse_rational(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn feasibility_is_monotone_in_gamma(n in 3usize..7, a in 0i64..40, b in 0i64..40) {
        let (lo, hi) = (a.min(b), a.max(b));
        let opts = ClassifyOptions { denominator: 20, ..Default::default() };
        let at = |g: i64| classify_power_potential(n, Rational64::new(g, 10), Assumption::V2, opts).unwrap().feasible;
        prop_assert!(!at(hi) || at(lo), "feasible at {hi}/10 but not at {lo}/10");
    }

    #[test]
    fn mixed_norm_with_equal_exponents_is_lebesgue(seed in 0u64..1000, p in 1i64..8) {
        let u = state_2x16(seed);
        let cluster = ClusterSpec::new(&[1, 2], 1).unwrap();
        let spec = MixedNormSpec { cluster, p: Exponent::int(p), q: Exponent::int(p) };
        let vol = u.grid().cell_volume();
        let direct = u.data().iter().map(|z| z.norm().powi(p as i32)).sum::<f64>() * vol;
        let m = mixed_norm(&u, &spec).unwrap();
        prop_assert!((m - direct.powf(1.0 / p as f64)).abs() <= 1e-10 * m.max(1.0));
    }

    #[test]
    fn mixed_norm_is_a_seminorm(s1 in 0u64..500, s2 in 500u64..1000, c in -3.0f64..3.0) {
        let (u, v) = (state_2x16(s1), state_2x16(s2));
        let cluster = ClusterSpec::new(&[1], 1).unwrap();
        let spec = MixedNormSpec { cluster, p: Exponent::int(4), q: Exponent::int(2) };
        let n = |w: &StateVector| mixed_norm(w, &spec).unwrap();
        let mut sum = u.clone();
        sum.axpy(Complex64::new(1.0, 0.0), &v).unwrap();
        prop_assert!(n(&sum) <= n(&u) + n(&v) + 1e-12);
        let scaled = u.scaled(Complex64::new(c, 0.0));
        prop_assert!((n(&scaled) - c.abs() * n(&u)).abs() <= 1e-12 * n(&u).max(1.0));
    }

    #[test]
    fn state_bytes_round_trip(seed in 0u64..1000) {
        let u = state_2x16(seed);
        let back = StateVector::from_bytes(&u.to_bytes()).unwrap();
        prop_assert_eq!(back.data(), u.data());
    }

    #[test]
    fn check_pass_follows_relation(v in -10.0f64..10.0, t in -10.0f64..10.0) {
        prop_assert_eq!(Check::at_most("x", v, t).pass, v <= t);
        prop_assert_eq!(Check::below("x", v, t).pass, v < t);
        prop_assert_eq!(Check::at_least("x", v, t).pass, v >= t);
        prop_assert_eq!(Check::above("x", v, t).pass, v > t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn free_spectral_evolution_is_unitary_and_composes(seed in 0u64..1000, t in 0.1f64..2.0, r in 0.0f64..1.0) {
        let grid = Arc::new(TensorGrid::uniform(1, 1, 8.0, 64).unwrap());
        let model = strichartz_lab::hamiltonian::Model::new(
            ParticleSystem::unit(1, 1).unwrap(),
            strichartz_lab::field::FieldSpec::zero(1),
            Vec::new(),
            grid.clone(),
        ).unwrap();
        let ev = Evolver::new(model, BackendConfig::with_kind(BackendKind::SplitStep, 0.05)).unwrap();
        let u = random_field(&grid, seed, 1, &RandomFieldOptions::default());
        let whole = ev.propagate(&u, t, 0.0).unwrap();
        prop_assert!((whole.norm() - u.norm()).abs() <= 1e-12 * u.norm());
        let mid = r * t;
        let split = ev.propagate(&ev.propagate(&u, mid, 0.0).unwrap(), t, mid).unwrap();
        prop_assert!(split.distance(&whole).unwrap() <= 1e-10 * u.norm());
    }
}
