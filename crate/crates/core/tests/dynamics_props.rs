use memflow::dynamics::{integrate_seeded, rng_for_seed, step, FlowParams, SystemState, Termination};
use memflow::{build_multiplier, encode_cnf};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steps_stay_in_the_box(seed in any::<u64>(), theta in prop_oneof![Just(0.0), 0.001f64..0.05]) {
        let cs = encode_cnf(&build_multiplier(3, 3).unwrap(), 35).unwrap();
        let p = FlowParams::for_clauses(cs.clauses.len()).with_noise(theta);
        let mut rng = rng_for_seed(seed);
        let mut s = SystemState::random(&cs, &mut rng);
        for _ in 0..200 {
            s = step(&s, &cs, &p, &mut rng).unwrap();
            prop_assert!(s.within_bounds(&p));
        }
    }

    #[test]
    fn solved_runs_decode_to_true_factors(seed in 0u64..10_000) {
        let cs = encode_cnf(&build_multiplier(3, 4).unwrap(), 77).unwrap();
        let p = FlowParams::for_clauses(cs.clauses.len());
        let tr = integrate_seeded(&cs, &p, seed, 1e4, 100).unwrap();
        if let Termination::Solved(a) = &tr.termination {
            prop_assert!(cs.satisfied_by(a));
            let (x, y) = cs.decode_factors(a).unwrap();
            prop_assert_eq!(x * y, 77);
        } else {
            prop_assert!(false, "seed {} ended with {}", seed, tr.termination.label());
        }
    }

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>()) {
        let cs = encode_cnf(&build_multiplier(2, 3).unwrap(), 21).unwrap();
        let p = FlowParams::for_clauses(cs.clauses.len()).with_noise(0.01);
        let a = integrate_seeded(&cs, &p, seed, 50.0, 5).unwrap();
        let b = integrate_seeded(&cs, &p, seed, 50.0, 5).unwrap();
        prop_assert_eq!(a, b);
    }
}
