//! Acceptance checks. Each test writes one `PASS`/`FAIL` line straight to
//! stderr so the verdicts show up even when output capture is on.

use std::io::Write as _;
use std::sync::OnceLock;
use std::time::Instant;

use memflow::cli::{run, EXIT_OK};
use memflow::config::{Command, Instance, RunConfig};
use memflow::dynamics::{integrate_seeded, FlowParams, Termination};
use memflow::ensemble::{analyze, median, run_ensemble, CorrelationResult, Ensemble, EnsembleConfig, PairReduction, TimeRule};
use memflow::toy::{build_instanton_family, invariance_scan, linspace, FamilySpec, ToyFlow};
use memflow::{build_multiplier, encode_cnf, literal_graph, ClauseSystem, LiteralGraph};

/// Instances with the widths of their true factors.
const DESK: [(u64, usize, usize); 7] = [(15, 2, 3), (21, 2, 3), (35, 3, 3), (77, 3, 4), (143, 4, 4), (323, 5, 5), (899, 5, 5)];

fn verdict(name: &str, ok: bool, detail: &str) {
    let line = format!("[acceptance] {} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn trial_division(n: u64) -> (u64, u64) {
    let p = (2..).find(|d| n % d == 0).unwrap();
    (p, n / p)
}

fn instance(n: u64, pw: usize, qw: usize) -> ClauseSystem {
    encode_cnf(&build_multiplier(pw, qw).unwrap(), n).unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("memflow-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn factorization_correctness() {
    let dir = scratch("factorize");
    let mut worst = 10;
    let mut slowest = 0.0f64;
    let mut detail = Vec::new();
    for (n, pw, qw) in DESK {
        let (a, b) = trial_division(n);
        let mut good = 0;
        for seed in 0..10 {
            let mut cfg = RunConfig::new(Command::Factorize);
            cfg.instance = Some(Instance::Product { n, p_width: pw, q_width: qw });
            cfg.seed = seed;
            cfg.out_dir = dir.clone();
            let start = Instant::now();
            let out = run(&cfg);
            let secs = start.elapsed().as_secs_f64();
            slowest = slowest.max(secs);
            let got: Vec<u64> = out.stdout.split_whitespace().filter_map(|s| s.parse().ok()).collect();
            if out.code == EXIT_OK && got.len() == 2 && got[0] * got[1] == n && got.contains(&a) && got.contains(&b) && secs <= 60.0 {
                good += 1;
            }
        }
        worst = worst.min(good);
        detail.push(format!("{n}:{good}/10"));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let ok = worst >= 9;
    verdict(
        "factorization correctness",
        ok,
        &format!("{} (need >= 9/10 each), slowest run {slowest:.2} s", detail.join(" ")),
    );
    assert!(ok);
}

#[test]
fn attractor_property() {
    let per_instance = 72;
    let mut runs = 0;
    let mut failures = Vec::new();
    for (n, pw, qw) in DESK {
        let cs = instance(n, pw, qw);
        let p = FlowParams::for_clauses(cs.clauses.len());
        for seed in 0..per_instance {
            let tr = integrate_seeded(&cs, &p, 1000 + seed, 1e5, 1000).unwrap();
            runs += 1;
            if tr.termination == Termination::FixedPointNonSolution {
                let s = &tr.final_state;
                eprintln!("fixed point n={n} seed={} t={} v={:?} x_s={:?} x_l={:?}", 1000 + seed, s.t, s.v, s.x_s, s.x_l);
                failures.push((n, 1000 + seed));
            }
        }
    }
    let ok = runs >= 500 && failures.is_empty();
    verdict(
        "attractor property",
        ok,
        &format!("{runs} deterministic runs, {} non-solution fixed points {failures:?}", failures.len()),
    );
    assert!(ok);
}

/// 481 = 13 x 37, ten product bits, M = 200.
struct Shared {
    cs: ClauseSystem,
    graph: LiteralGraph,
    ens: Ensemble,
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let cs = instance(481, 4, 6);
        let p = FlowParams::for_clauses(cs.clauses.len());
        let mut cfg = EnsembleConfig::new(cs.clone(), p, 200, 1);
        cfg.record_stride = 4;
        let ens = run_ensemble(&cfg).unwrap();
        let graph = literal_graph(&cs);
        Shared { cs, graph, ens }
    })
}

fn correlations(rule: TimeRule, max_lag: f64) -> CorrelationResult {
    let s = shared();
    analyze(&s.ens, &s.graph, s.graph.vertices(), rule, PairReduction::Max, max_lag).unwrap()
}

#[test]
fn correlation_normalization() {
    let s = shared();
    let md = s.ens.median_phase_duration().unwrap();
    let mut literals = 0;
    let mut bad = Vec::new();
    for rule in [TimeRule::PerTrajectory, TimeRule::Global] {
        for reduction in [PairReduction::Max, PairReduction::Mean] {
            let r = analyze(&s.ens, &s.graph, s.graph.vertices(), rule, reduction, md).unwrap();
            for (lit, c) in &r.c_tau {
                literals += 1;
                if c[0].1 != 1.0 {
                    bad.push(format!("C_{}(0) = {}", s.cs.node_map[*lit], c[0].1));
                }
            }
            for (d, c) in &r.c_d {
                if c.abs() > 1.0 {
                    bad.push(format!("C(d={d}) = {c}"));
                }
            }
        }
    }
    let ok = bad.is_empty() && literals > 0;
    verdict(
        "correlation normalization",
        ok,
        &format!("{literals} literal series with C(0) == 1, |C(d)| <= 1 under both rules and reductions {bad:?}"),
    );
    assert!(ok);
}

#[test]
fn long_range_order() {
    let s = shared();
    let md = s.ens.median_phase_duration().unwrap();
    let r = correlations(TimeRule::PerTrajectory, 4.0 * md);
    let diameter = s.graph.diameter();
    let plateau = r.c_d[&1];
    let spatial = (1..=diameter.saturating_sub(2)).all(|d| r.c_d.get(&d).is_some_and(|&c| c >= 0.1 * plateau));

    let tau = r.mean_c_tau();
    let within = tau.iter().filter(|(lag, _)| *lag <= md).map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
    let beyond = tau.iter().filter(|(lag, _)| *lag > 3.0 * md).map(|&(_, c)| c).fold(f64::NEG_INFINITY, f64::max);
    let holds = within >= 0.1;
    let drops = beyond < 0.1;
    let first_below = tau.iter().find(|(_, c)| *c < 0.1).map(|&(lag, _)| lag);

    let c_d: Vec<String> = r.c_d.iter().map(|(d, c)| format!("{d}:{c:.3}")).collect();
    let ok = spatial && holds && drops;
    verdict(
        "long-range order",
        ok,
        &format!(
            "M={} diameter={diameter} C(d)=[{}] plateau>=0.1*C(1) up to d={}: {spatial}; median phase {md:.1}, min C(tau<=md)={within:.3} (need >= 0.1): {holds}, first C(tau)<0.1 at {first_below:?}; max C(tau>3md)={beyond:.3} (need < 0.1): {drops}",
            s.ens.len(),
            c_d.join(" "),
            diameter.saturating_sub(2)
        ),
    );
    assert!(spatial, "spatial plateau");
    assert!(drops, "temporal drop beyond three phase durations");
    assert!(holds, "temporal correlation within one phase duration");
}

#[test]
fn intersection_invariance() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;

    let logistic_2d = build_instanton_family(&ToyFlow::logistic_product(2).unwrap(), &FamilySpec::default()).unwrap();
    let grid: Vec<Vec<f64>> = linspace(5.0, 13.0, 20).into_iter().map(|t| vec![t, 9.0]).collect();
    let rep = invariance_scan(&logistic_2d, &[0, 1], &grid);
    let each_one = rep.entries.iter().all(|e| e.result.as_ref().is_ok_and(|r| r.value() == 1 && r.raw_count() == 1));
    ok &= each_one && grid.len() == 20;
    lines.push(format!("logistic 2D values {:?}", rep.values()));

    let logistic_1d = build_instanton_family(&ToyFlow::logistic_product(1).unwrap(), &FamilySpec::default()).unwrap();
    let grid: Vec<Vec<f64>> = linspace(4.0, 16.0, 20).into_iter().map(|t| vec![t]).collect();
    let rep = invariance_scan(&logistic_1d, &[0], &grid);
    ok &= rep.entries.iter().all(|e| e.result.as_ref().is_ok_and(|r| r.value() == 1));
    lines.push(format!("logistic 1D values {:?}", rep.values()));

    let spec = FamilySpec {
        sigma_lo: -6.0,
        sigma_hi: 4.0,
        points: 21,
        ..FamilySpec::default()
    };
    let spiral = build_instanton_family(&ToyFlow::spiral(0.5, 6.0).unwrap(), &spec).unwrap();
    let grid: Vec<Vec<f64>> = linspace(8.5, 11.5, 20).into_iter().map(|t| vec![t, 10.0]).collect();
    let rep = invariance_scan(&spiral, &[0, 1], &grid);
    let sums_one = rep.entries.iter().all(|e| e.result.as_ref().is_ok_and(|r| r.value() == 1));
    let varied = rep.raw_counts().len() >= 2;
    ok &= sums_one && varied;
    lines.push(format!("spiral values {:?} raw counts {:?}", rep.values(), rep.raw_counts()));

    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    verdict("intersection-number invariance", ok, &format!("{}; {secs:.2} s (need < 10 s)", lines.join("; ")));
    assert!(ok);
}

#[test]
fn noise_robustness() {
    let mut detail = Vec::new();
    let mut ok = true;
    for (n, pw, qw) in DESK.into_iter().filter(|&(n, _, _)| n <= 255) {
        let cs = instance(n, pw, qw);
        let p = FlowParams::for_clauses(cs.clauses.len()).with_noise(0.005);
        let solved = (0..50)
            .filter(|&seed| {
                let tr = integrate_seeded(&cs, &p, seed, 1e4, 1000).unwrap();
                match &tr.termination {
                    Termination::Solved(a) => cs.decode_factors(a).is_some_and(|(x, y)| x * y == n),
                    _ => false,
                }
            })
            .count();
        ok &= solved >= 45;
        detail.push(format!("{n}:{solved}/50"));
    }
    verdict("noise robustness", ok, &format!("theta=0.005 {} (need >= 45/50)", detail.join(" ")));
    assert!(ok);
}

#[test]
fn transient_scaling() {
    // Product register width -> instance with factors of the given widths.
    let sizes: [(usize, u64, usize, usize); 9] = [
        (4, 9, 2, 2),
        (5, 15, 2, 3),
        (6, 35, 3, 3),
        (7, 77, 3, 4),
        (8, 143, 4, 4),
        (9, 377, 4, 5),
        (10, 899, 5, 5),
        (11, 1147, 5, 6),
        (12, 3599, 6, 6),
    ];
    let mut points = Vec::new();
    for (bits, n, pw, qw) in sizes {
        let cs = instance(n, pw, qw);
        assert_eq!(cs.num_vars > 0 && pw + qw == bits, true);
        let p = FlowParams::for_clauses(cs.clauses.len());
        let counts: Vec<f64> = (0..20)
            .map(|seed| integrate_seeded(&cs, &p, seed, 1e5, 1000).unwrap().crossings.len() as f64)
            .collect();
        points.push((bits as f64, median(counts).unwrap().max(1.0)));
    }
    // Least-squares slope of ln(count) against bits.
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ok = slope < std::f64::consts::LN_2;
    let table: Vec<String> = points.iter().map(|(b, c)| format!("{b}:{c}")).collect();
    verdict(
        "transient scaling probe",
        ok,
        &format!("median crossings by bits [{}], slope {slope:.3} per bit (need < ln 2 = 0.693)", table.join(" ")),
    );
    assert!(ok);
}

#[test]
fn determinism_and_formats() {
    let mut ok = true;
    let mut notes = Vec::new();

    let a = scratch("det-a");
    let b = scratch("det-b");
    for (dir, cmd) in [(&a, Command::Factorize), (&b, Command::Factorize)] {
        let mut cfg = RunConfig::new(cmd);
        cfg.instance = Some(Instance::Product { n: 143, p_width: 4, q_width: 4 });
        cfg.seed = 12;
        cfg.out_dir = dir.to_path_buf();
        ok &= run(&cfg).code == EXIT_OK;
    }
    for f in ["trajectory.csv", "crossings.csv", "result.txt"] {
        let same = std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
        ok &= same;
        notes.push(format!("factorize {f} identical: {same}"));
    }

    let mut cfgs = Vec::new();
    for dir in [&a, &b] {
        let mut cfg = RunConfig::new(Command::Analyze);
        cfg.instance = Some(Instance::Product { n: 77, p_width: 3, q_width: 4 });
        cfg.runs = 12;
        cfg.seed = 5;
        cfg.record_stride = 4;
        cfg.out_dir = dir.to_path_buf();
        cfgs.push(cfg);
    }
    // Same ensemble on one thread and on the default pool.
    cfgs[0].threads = Some(1);
    for cfg in &cfgs {
        ok &= run(cfg).code == EXIT_OK;
    }
    for f in ["c_d_per-trajectory.csv", "c_tau_per-trajectory.csv"] {
        let same = std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
        ok &= same;
        notes.push(format!("analyze {f} identical: {same}"));
    }
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);

    let mut round_trips = 0;
    for (n, pw, qw) in DESK.into_iter().chain([(497503, 9, 10)]) {
        let cs = instance(n, pw, qw);
        let text = cs.export_dimacs();
        let back = ClauseSystem::parse_dimacs(&text).unwrap();
        if back == cs && back.export_dimacs() == text {
            round_trips += 1;
        } else {
            ok = false;
        }
    }
    notes.push(format!("DIMACS round trips exact: {round_trips}/8"));
    verdict("determinism and formats", ok, &notes.join(", "));
    assert!(ok);
}
