//! Spatial and temporal correlations over an ensemble of trajectories.
//!
//! ```text
//! cargo run --release --example correlations -- [runs]
//! ```

use memflow::dynamics::FlowParams;
use memflow::ensemble::{analyze, run_ensemble, EnsembleConfig, PairReduction, TimeRule};
use memflow::{build_multiplier, encode_cnf, literal_graph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: usize = std::env::args().nth(1).map_or(Ok(100), |s| s.parse())?;
    let cs = encode_cnf(&build_multiplier(4, 6)?, 481)?;
    let p = FlowParams::for_clauses(cs.clauses.len());
    let mut cfg = EnsembleConfig::new(cs.clone(), p, runs, 1);
    cfg.record_stride = 4;
    let ens = run_ensemble(&cfg)?;
    let graph = literal_graph(&cs);
    let duration = ens.median_phase_duration().unwrap_or(0.0);
    println!("{} of {} runs solved, median instantonic phase {duration:.1}", ens.solved(), ens.len());

    for rule in [TimeRule::PerTrajectory, TimeRule::Global] {
        let r = analyze(&ens, &graph, graph.vertices(), rule, PairReduction::Max, 3.0 * duration)?;
        println!("\n[{}]", rule.label());
        for (d, c) in &r.c_d {
            println!("  C(d={d}) = {c:+.3}");
        }
        let tau = r.mean_c_tau();
        let step = (tau.len() / 8).max(1);
        for (lag, c) in tau.iter().step_by(step) {
            println!("  C(tau={lag:>7.2}) = {c:+.3}");
        }
        println!("  correlation length {:?}, time {:?}", r.correlation_length, r.correlation_time);
    }
    Ok(())
}
