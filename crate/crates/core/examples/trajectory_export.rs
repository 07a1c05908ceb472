//! Record one trajectory and write its voltages and threshold crossings as
//! CSV, then report the instantonic phase.
//!
//! ```text
//! cargo run --release --example trajectory_export -- out_dir
//! ```

use std::path::PathBuf;

use memflow::dynamics::{detect_instanton_phase, integrate_seeded, FlowParams};
use memflow::{build_multiplier, encode_cnf};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "trajectory-out".into()));
    std::fs::create_dir_all(&dir)?;

    let cs = encode_cnf(&build_multiplier(4, 4)?, 143)?;
    let p = FlowParams::for_clauses(cs.clauses.len());
    let traj = integrate_seeded(&cs, &p, 7, 1e4, 10)?;

    // Factor registers only; pass every variable for the full picture.
    let vars: Vec<usize> = (0..cs.num_vars)
        .filter(|&v| cs.node_map[v].starts_with('p') || cs.node_map[v].starts_with('q'))
        .collect();
    std::fs::write(dir.join("voltages.csv"), traj.to_csv(&cs, &vars))?;
    std::fs::write(dir.join("crossings.csv"), traj.crossings_csv())?;

    println!("{} samples, {} crossings, ended {}", traj.num_samples(), traj.crossings.len(), traj.termination.label());
    if let Some(ph) = detect_instanton_phase(&traj) {
        println!("instantonic phase {:.2} .. {:.2} (duration {:.2})", ph.t_start, ph.t_end, ph.duration());
    }
    println!("wrote {}", dir.display());
    Ok(())
}
