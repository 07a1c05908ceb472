//! The 20-bit instance 497503 = 499 x 997. Long-running; tries seeds until
//! one solves or the list runs out.
//!
//! ```text
//! cargo run --release --example factorize_20bit -- [max_time] [seeds]
//! ```

use std::time::Instant;

use memflow::dynamics::{integrate_seeded, FlowParams, Termination};
use memflow::{build_multiplier, encode_cnf};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_time: f64 = std::env::args().nth(1).map_or(Ok(1e6), |s| s.parse())?;
    let seeds: u64 = std::env::args().nth(2).map_or(Ok(3), |s| s.parse())?;
    let cs = encode_cnf(&build_multiplier(9, 10)?, 497503)?;
    let p = FlowParams::for_clauses(cs.clauses.len());
    println!("{} variables, {} clauses", cs.num_vars, cs.clauses.len());
    for seed in 0..seeds {
        let start = Instant::now();
        let traj = integrate_seeded(&cs, &p, seed, max_time, 1000)?;
        let elapsed = start.elapsed();
        match &traj.termination {
            Termination::Solved(a) => {
                let (x, y) = cs.decode_factors(a).expect("factor registers");
                assert_eq!(x * y, 497503);
                println!("seed {seed}: 497503 = {x} x {y} at t = {:.1} ({elapsed:.1?})", traj.final_state.t);
                return Ok(());
            }
            other => println!("seed {seed}: {} at t = {:.1} ({elapsed:.1?})", other.label(), traj.final_state.t),
        }
    }
    Ok(())
}
