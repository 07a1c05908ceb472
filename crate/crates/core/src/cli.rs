//! Batch commands behind the `memflow` binary.
//!
//! Each command takes a [`RunConfig`], writes its artifacts into
//! `out_dir` and returns an [`Outcome`] carrying the exit code and the
//! text meant for stdout/stderr. Nothing here prints.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{Command, RunConfig};
use crate::dynamics::{detect_instanton_phase, integrate_seeded, FlowParams, Termination};
use crate::ensemble::{analyze, fnv1a, manifest as ensemble_manifest, run_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::graph::literal_graph;
use crate::toy::{build_instanton_family, invariance_scan};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TIMEOUT: u8 = 3;
pub const EXIT_FIXED_POINT: u8 = 4;
pub const EXIT_TANGENCY: u8 = 5;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }
}

/// Exit code for an error raised before or during a run.
pub fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::WidthTooSmall(_)
        | Error::NotRepresentable { .. }
        | Error::Dimacs { .. }
        | Error::InvalidClauses(_) => EXIT_CONFIG,
        Error::Tangency { .. } => EXIT_TANGENCY,
        _ => EXIT_FAILURE,
    }
}

/// Dispatches on `cfg.command`, folding errors into the outcome.
pub fn run(cfg: &RunConfig) -> Outcome {
    let result = cfg.validate().and_then(|()| {
        with_threads(cfg.threads, || match cfg.command {
            Command::Factorize => cmd_factorize(cfg),
            Command::Analyze => cmd_analyze(cfg),
            Command::Toy => cmd_toy(cfg),
        })
    });
    result.unwrap_or_else(|e| Outcome {
        code: error_code(&e),
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// The config with every flow parameter pinned, plus code version and
/// instance fingerprint.
fn manifest(cfg: &RunConfig, params: Option<&FlowParams>, instance_text: Option<&str>) -> String {
    let mut pinned = cfg.clone();
    if let Some(p) = params {
        for (k, v) in p.entries() {
            pinned.params.insert(k.to_string(), v);
        }
    }
    let mut out = format!("version={}\n", env!("CARGO_PKG_VERSION"));
    if let Some(text) = instance_text {
        let _ = writeln!(out, "instance_hash={:016x}", fnv1a(text.as_bytes()));
    }
    out.push_str(&pinned.to_text());
    out
}

/// One trajectory from `cfg.seed`. Prints `p q` on success after checking
/// `p * q = n`.
pub fn cmd_factorize(cfg: &RunConfig) -> Result<Outcome> {
    let instance = cfg.instance.as_ref().ok_or_else(|| Error::Config("missing instance".into()))?;
    let cs = instance.load()?;
    let params = cfg.resolve_params(&cs)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let dimacs = cs.export_dimacs();

    let traj = integrate_seeded(&cs, &params, cfg.seed, cfg.max_time, cfg.record_stride)?;
    let all: Vec<usize> = (0..cs.num_vars).collect();
    write(&cfg.out_dir, "trajectory.csv", &traj.to_csv(&cs, &all))?;
    write(&cfg.out_dir, "crossings.csv", &traj.crossings_csv())?;
    write(&cfg.out_dir, "instance.cnf", &dimacs)?;
    write(&cfg.out_dir, "manifest.txt", &manifest(cfg, Some(&params), Some(&dimacs)))?;

    let mut record = String::new();
    let _ = writeln!(record, "status={}", traj.termination.label());
    let _ = writeln!(record, "seed={}", cfg.seed);
    let _ = writeln!(record, "t_final={}", traj.final_state.t);
    let _ = writeln!(record, "steps={}", traj.steps);
    let _ = writeln!(record, "crossings={}", traj.crossings.len());
    if let Some(ph) = detect_instanton_phase(&traj) {
        let _ = writeln!(record, "phase_start={}\nphase_end={}", ph.t_start, ph.t_end);
    }

    let outcome = match &traj.termination {
        Termination::Solved(assignment) => match cs.decode_factors(assignment) {
            Some((p, q)) => {
                let _ = writeln!(record, "p={p}\nq={q}");
                let target = instance.product().or_else(|| cs.decode_product(assignment));
                match target {
                    Some(n) if p.checked_mul(q) == Some(n) => Outcome::ok(format!("{p} {q}\n")),
                    _ => Outcome {
                        code: EXIT_FAILURE,
                        stdout: String::new(),
                        stderr: format!("error: decoded factors {p} x {q} do not multiply to the target\n"),
                    },
                }
            }
            None => {
                let bits: String = assignment.iter().map(|&b| if b { '1' } else { '0' }).collect();
                let _ = writeln!(record, "assignment={bits}");
                Outcome::ok(format!("SAT {bits}\n"))
            }
        },
        Termination::MaxTime => Outcome {
            code: EXIT_TIMEOUT,
            stdout: String::new(),
            stderr: format!("timeout: no solution by t = {}\n", cfg.max_time),
        },
        Termination::FixedPointNonSolution => Outcome {
            code: EXIT_FIXED_POINT,
            stdout: String::new(),
            stderr: format!(
                "stalled on a non-solution fixed point at t = {} (seed {})\n",
                traj.final_state.t, cfg.seed
            ),
        },
    };
    write(&cfg.out_dir, "result.txt", &record)?;
    Ok(outcome)
}

/// Ensemble of `cfg.runs` trajectories, correlations for each requested
/// reference-time rule.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome> {
    let instance = cfg.instance.as_ref().ok_or_else(|| Error::Config("missing instance".into()))?;
    let cs = instance.load()?;
    let params = cfg.resolve_params(&cs)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let mut ecfg = EnsembleConfig::new(cs.clone(), params.clone(), cfg.runs, cfg.seed);
    ecfg.max_time = cfg.max_time;
    ecfg.record_stride = cfg.record_stride;
    let ens = run_ensemble(&ecfg)?;
    let graph = literal_graph(&cs);
    let max_lag = match cfg.max_lag {
        Some(l) => l,
        None => 4.0 * ens.median_phase_duration().unwrap_or(0.0),
    };

    let mut stdout = String::new();
    let mut stderr = String::new();
    let partial = ens.solved() < ens.len();
    if partial {
        let _ = writeln!(
            stderr,
            "warning: partial ensemble, {} of {} runs solved ({} timeouts, {} non-solution fixed points)",
            ens.solved(),
            ens.len(),
            ens.timeouts(),
            ens.fixed_point_failures().len()
        );
    }
    for rule in cfg.rules.rules() {
        let r = analyze(&ens, &graph, graph.vertices(), rule, cfg.reduction, max_lag)?;
        let label = rule.label();
        write(&cfg.out_dir, &format!("c_d_{label}.csv"), &r.c_d_csv())?;
        write(&cfg.out_dir, &format!("c_tau_{label}.csv"), &r.c_tau_csv(&cs))?;
        let summary = format!("{}partial={partial}\nmax_lag={max_lag}\n", r.summary());
        write(&cfg.out_dir, &format!("summary_{label}.txt"), &summary)?;
        let _ = writeln!(
            stdout,
            "{label}: correlation_length={} correlation_time={} diameter={}",
            r.correlation_length.map_or("none".into(), |d| d.to_string()),
            r.correlation_time.map_or("none".into(), |t| t.to_string()),
            r.diameter
        );
    }
    let dimacs = cs.export_dimacs();
    let mut text = manifest(cfg, Some(&params), Some(&dimacs));
    text.push_str(&ensemble_manifest(&ecfg, &ens));
    write(&cfg.out_dir, "manifest.txt", &dedup_keys(&text))?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        stderr,
    })
}

/// Drops repeated keys, keeping the first occurrence.
fn dedup_keys(text: &str) -> String {
    let mut seen = std::collections::BTreeSet::new();
    text.lines()
        .filter(|l| l.split_once('=').is_none_or(|(k, _)| seen.insert(k.to_string())))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Intersection-number scan over the configured time grid.
pub fn cmd_toy(cfg: &RunConfig) -> Result<Outcome> {
    let flow = cfg.flow.build()?;
    let family = build_instanton_family(&flow, &cfg.family)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let m = family.moduli_dim();
    let literals: Vec<usize> = (0..m).collect();
    let grid = cfg.time_grid(m);
    let report = invariance_scan(&family, &literals, &grid);
    write(&cfg.out_dir, "report.txt", &report.to_text())?;

    // Trajectories through every crossing of the first tuple, plus the
    // centre of the moduli box.
    let mut sigmas: Vec<Vec<f64>> = report
        .entries
        .first()
        .and_then(|e| e.result.as_ref().ok())
        .map(|r| r.crossings.iter().map(|c| c.sigma.clone()).collect())
        .unwrap_or_default();
    sigmas.push(vec![0.5 * (cfg.family.sigma_lo + cfg.family.sigma_hi); m]);
    let t_end = family.settle_time.max(cfg.t_hi).max(cfg.t_rest);
    write(&cfg.out_dir, "trajectories.csv", &family.trajectories_csv(&sigmas, 0.1, t_end))?;
    write(&cfg.out_dir, "manifest.txt", &manifest(cfg, None, None))?;

    let mut stdout = format!(
        "values={:?} raw_counts={:?}\n",
        report.values(),
        report.raw_counts()
    );
    let mut stderr = String::new();
    for w in report.warnings() {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let tangencies = report.tangency_errors();
    for (times, msg) in &tangencies {
        let _ = writeln!(stderr, "error at t = {times:?}: {msg}");
    }
    if let Some(only) = report.values().iter().next().filter(|_| report.values().len() == 1) {
        let _ = writeln!(stdout, "intersection number {only} at every scanned time");
    }
    Ok(Outcome {
        code: if tangencies.is_empty() { EXIT_OK } else { EXIT_TANGENCY },
        stdout,
        stderr,
    })
}
