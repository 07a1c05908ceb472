//! Factor a product with a single trajectory of the memory dynamics.
//!
//! ```text
//! cargo run --release --example factorize -- 899 5 5 [seed] [theta]
//! ```

use memflow::dynamics::{integrate_seeded, FlowParams, Termination};
use memflow::{build_multiplier, encode_cnf};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let n: u64 = arg(0, "899").parse()?;
    let p_width: usize = arg(1, "5").parse()?;
    let q_width: usize = arg(2, "5").parse()?;
    let seed: u64 = arg(3, "0").parse()?;
    let theta: f64 = arg(4, "0").parse()?;

    let net = build_multiplier(p_width, q_width)?;
    println!("{}", net.summary());
    let cs = encode_cnf(&net, n)?;
    println!("{} variables ({} free), {} clauses", cs.num_vars, cs.free_vars().len(), cs.clauses.len());

    let params = FlowParams::for_clauses(cs.clauses.len()).with_noise(theta);
    let traj = integrate_seeded(&cs, &params, seed, 1e5, 100)?;
    match &traj.termination {
        Termination::Solved(assignment) => {
            let (p, q) = cs.decode_factors(assignment).expect("multiplier has factor registers");
            assert_eq!(p * q, n);
            println!(
                "{n} = {p} x {q}  (t = {:.2}, {} steps, {} threshold crossings)",
                traj.final_state.t,
                traj.steps,
                traj.crossings.len()
            );
        }
        other => println!("no factors: run ended with {}", other.label()),
    }
    Ok(())
}
