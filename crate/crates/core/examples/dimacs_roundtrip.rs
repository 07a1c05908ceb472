//! Export a multiplier instance as DIMACS, parse it back, and solve the
//! parsed copy.

use memflow::dynamics::{integrate_seeded, FlowParams};
use memflow::{build_multiplier, encode_cnf, ClauseSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cs = encode_cnf(&build_multiplier(3, 4)?, 77)?;
    let text = cs.export_dimacs();
    let head: Vec<&str> = text.lines().filter(|l| l.starts_with('p')).collect();
    println!("{} bytes, header {:?}", text.len(), head);

    let parsed = ClauseSystem::parse_dimacs(&text)?;
    assert_eq!(parsed, cs);
    assert_eq!(parsed.export_dimacs(), text);
    println!("round trip is exact");

    let p = FlowParams::for_clauses(parsed.clauses.len());
    let traj = integrate_seeded(&parsed, &p, 1, 1e4, 100)?;
    if let memflow::dynamics::Termination::Solved(a) = &traj.termination {
        println!("factors from the parsed instance: {:?}", parsed.decode_factors(a));
    }

    // A hand-written instance without node names works too.
    let tiny = ClauseSystem::parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n")?;
    println!("hand-written: {} vars, {} clauses, names {:?}", tiny.num_vars, tiny.clauses.len(), tiny.node_map);
    Ok(())
}
