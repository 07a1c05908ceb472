use memflow::cnf::Lit;
use memflow::{build_multiplier, encode_cnf, ClauseSystem};
use proptest::prelude::*;

/// Random clause systems in canonical form: units live in `units`, every
/// clause has at least two distinct variables.
fn clause_system() -> impl Strategy<Value = ClauseSystem> {
    (1usize..12).prop_flat_map(|num_vars| {
        let lit = (0..num_vars, any::<bool>()).prop_map(|(v, s)| Lit::new(v, s));
        let clause = proptest::collection::vec(lit, 2..6);
        (
            proptest::collection::vec(clause, 1..20),
            proptest::collection::vec(proptest::option::weighted(0.2, any::<bool>()), num_vars),
        )
            .prop_map(move |(clauses, units)| {
                let clauses: Vec<Vec<Lit>> = clauses
                    .into_iter()
                    .map(|mut c| {
                        // Drop repeats and tautologies.
                        c.sort_by_key(|l| l.var);
                        c.dedup_by_key(|l| l.var);
                        c
                    })
                    .filter(|c| c.len() >= 2)
                    .collect();
                let mut used = vec![false; num_vars];
                clauses.iter().flatten().for_each(|l| used[l.var] = true);
                let units = units
                    .into_iter()
                    .zip(&used)
                    .map(|(u, &used)| if used { u } else { Some(u.unwrap_or(true)) })
                    .collect();
                ClauseSystem {
                    num_vars,
                    clauses,
                    units,
                    node_map: (0..num_vars).map(|v| format!("n{v}")).collect(),
                }
            })
    })
}

proptest! {
    #[test]
    fn dimacs_round_trip_is_exact(cs in clause_system()) {
        cs.validate().unwrap();
        let text = cs.export_dimacs();
        let back = ClauseSystem::parse_dimacs(&text).unwrap();
        prop_assert_eq!(&back, &cs);
        prop_assert_eq!(back.export_dimacs(), text);
    }
}

#[test]
fn foreign_dimacs_without_names() {
    let text = "c from elsewhere\np cnf 4 3\n1 -2 0\n2 3\n-4 0\n4 0\n";
    let cs = ClauseSystem::parse_dimacs(text).unwrap();
    assert_eq!(cs.num_vars, 4);
    assert_eq!(cs.units[3], Some(true));
    assert!(cs.satisfied_by(&[true, false, false, true]) || cs.satisfied_by(&[true, true, true, true]));
    let again = ClauseSystem::parse_dimacs(&cs.export_dimacs()).unwrap();
    assert_eq!(again, cs);
}

#[test]
fn multiplier_instances_survive_the_trip() {
    for (n, pw, qw) in [(15, 2, 3), (899, 5, 5), (497503, 9, 10)] {
        let cs = encode_cnf(&build_multiplier(pw, qw).unwrap(), n).unwrap();
        assert_eq!(ClauseSystem::parse_dimacs(&cs.export_dimacs()).unwrap(), cs);
    }
}
