//! Seeded trajectory ensembles and their space/time correlation functions.
//!
//! Spatial correlations use the normalized covariance of literal pairs at a
//! given graph distance, reduced by a maximum over the pairs:
//!
//! ```text
//! C(d)   = max_{(a,b) : dist(a,b) = d} E2{v_a, v_b} / sqrt(E2{v_a} E2{v_b})
//! C(tau) = E2{v_a(t), v_a(t + tau)} / E2{v_a(t)}
//! ```
//!
//! with `t` inside the instantonic phase of each run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cnf::ClauseSystem;
use crate::dynamics::{
    detect_instanton_phase, integrate_seeded, FlowParams, InstantonPhase, Termination, Trajectory,
};
use crate::error::{Error, Result};
use crate::graph::LiteralGraph;
use crate::stats::{MomentAccumulator, PairAccumulator};

/// Variances below this are treated as degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// How the reference time `t` is chosen in each run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TimeRule {
    /// Each run uses the midpoint of its own instantonic phase.
    #[default]
    PerTrajectory,
    /// All runs share one time: the median of the per-run midpoints.
    Global,
}

impl TimeRule {
    pub fn label(self) -> &'static str {
        match self {
            TimeRule::PerTrajectory => "per-trajectory",
            TimeRule::Global => "global",
        }
    }
}

/// Reduction over the pairs at one distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairReduction {
    #[default]
    Max,
    Mean,
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub cs: ClauseSystem,
    pub params: FlowParams,
    pub runs: usize,
    pub base_seed: u64,
    /// Overrides the seeds derived from `base_seed`.
    pub seeds: Option<Vec<u64>>,
    pub max_time: f64,
    pub record_stride: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(cs: ClauseSystem, params: FlowParams, runs: usize, base_seed: u64) -> Self {
        EnsembleConfig {
            cs,
            params,
            runs,
            base_seed,
            seeds: None,
            max_time: 1e5,
            record_stride: 10,
            threads: None,
        }
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.runs as u64).map(|i| derive_seed(self.base_seed, i)).collect(),
        }
    }
}

/// SplitMix64 finalizer applied to `base + index`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub seeds: Vec<u64>,
    pub trajectories: Vec<Trajectory>,
    pub phases: Vec<Option<InstantonPhase>>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn solved(&self) -> usize {
        self.trajectories.iter().filter(|t| t.termination.is_solved()).count()
    }

    /// Seeds whose run stalled on a non-solution fixed point.
    pub fn fixed_point_failures(&self) -> Vec<u64> {
        self.seeds
            .iter()
            .zip(&self.trajectories)
            .filter(|(_, t)| t.termination == Termination::FixedPointNonSolution)
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn timeouts(&self) -> usize {
        self.trajectories
            .iter()
            .filter(|t| t.termination == Termination::MaxTime)
            .count()
    }

    /// Runs without any threshold crossing.
    pub fn without_phase(&self) -> usize {
        self.phases.iter().filter(|p| p.is_none()).count()
    }

    pub fn median_phase_duration(&self) -> Option<f64> {
        median(self.phases.iter().flatten().map(|p| p.duration()).collect())
    }

    /// Reference grid index of each run with a phase.
    fn reference_indices(&self, rule: TimeRule) -> Vec<(usize, usize)> {
        let global = match rule {
            TimeRule::Global => median(self.phases.iter().flatten().map(|p| p.mid_time).collect()),
            TimeRule::PerTrajectory => None,
        };
        self.phases
            .iter()
            .enumerate()
            .filter_map(|(r, p)| {
                let p = p.as_ref()?;
                let t = global.unwrap_or(p.mid_time);
                Some((r, self.trajectories[r].grid_index(t)))
            })
            .collect()
    }
}

pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

/// Runs every seed and detects the instantonic phase of each trajectory.
/// Non-solution fixed points are kept in the ensemble and reported through
/// [`Ensemble::fixed_point_failures`].
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<Ensemble> {
    if cfg.runs < 2 && cfg.seeds.as_ref().is_none_or(|s| s.len() < 2) {
        return Err(Error::Config("an ensemble needs at least two runs".into()));
    }
    cfg.params.validate()?;
    let seeds = cfg.run_seeds();
    let work = || -> Result<Vec<Trajectory>> {
        seeds
            .par_iter()
            .map(|&s| integrate_seeded(&cfg.cs, &cfg.params, s, cfg.max_time, cfg.record_stride))
            .collect()
    };
    let trajectories = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let phases = trajectories.iter().map(detect_instanton_phase).collect();
    Ok(Ensemble {
        seeds,
        trajectories,
        phases,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialCorrelation {
    pub c_d: BTreeMap<usize, f64>,
    /// Runs contributing a snapshot.
    pub used_runs: usize,
    /// Runs without an instantonic phase.
    pub excluded_runs: usize,
    /// Pairs skipped for degenerate variance.
    pub skipped_pairs: usize,
}

/// Normalized spatial correlation over graph distance. Distances without a
/// usable pair are absent from the map.
pub fn spatial_correlation(
    ens: &Ensemble,
    graph: &LiteralGraph,
    rule: TimeRule,
    reduction: PairReduction,
) -> Result<SpatialCorrelation> {
    let refs = ens.reference_indices(rule);
    if refs.len() < 2 {
        return Err(Error::TooFewSamples(refs.len()));
    }
    let verts = graph.vertices();
    let slot: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();

    let mut acc = MomentAccumulator::new(verts.len());
    let mut row = vec![0.0; verts.len()];
    for &(r, k) in &refs {
        let v = ens.trajectories[r].voltages_at_grid(k);
        for (x, &var) in row.iter_mut().zip(verts) {
            *x = v[var];
        }
        acc.push(&row);
    }

    let mut c_d = BTreeMap::new();
    let mut skipped = 0;
    for (d, pairs) in graph.pairs_by_distance().iter().enumerate().skip(1) {
        let mut values = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let (i, j) = (slot[&a], slot[&b]);
            let (va, vb) = (acc.covariance(i, i), acc.covariance(j, j));
            if va < VARIANCE_FLOOR || vb < VARIANCE_FLOOR {
                skipped += 1;
                continue;
            }
            // Cauchy-Schwarz holds exactly; clamp rounding overshoot.
            values.push((acc.covariance(i, j) / (va * vb).sqrt()).clamp(-1.0, 1.0));
        }
        if values.is_empty() {
            continue;
        }
        let c = match reduction {
            PairReduction::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            PairReduction::Mean => values.iter().sum::<f64>() / values.len() as f64,
        };
        c_d.insert(d, c);
    }
    Ok(SpatialCorrelation {
        c_d,
        used_runs: refs.len(),
        excluded_runs: ens.len() - refs.len(),
        skipped_pairs: skipped,
    })
}

/// Normalized temporal correlation of one literal on the recording grid,
/// lags `0, dt_rec, ..` up to `max_lag`. Returns `(lag, C)` pairs.
pub fn temporal_correlation(
    ens: &Ensemble,
    literal: usize,
    rule: TimeRule,
    max_lag: f64,
) -> Result<Vec<(f64, f64)>> {
    let refs = ens.reference_indices(rule);
    if refs.len() < 2 {
        return Err(Error::TooFewSamples(refs.len()));
    }
    let sample_dt = ens.trajectories[refs[0].0].sample_dt();
    let lags = (max_lag / sample_dt).floor().max(0.0) as usize;

    let mut out = Vec::with_capacity(lags + 1);
    let mut variance = 0.0;
    for lag in 0..=lags {
        let mut acc = PairAccumulator::default();
        for &(r, k) in &refs {
            let tr = &ens.trajectories[r];
            acc.push(tr.voltages_at_grid(k)[literal], tr.voltages_at_grid(k + lag)[literal]);
        }
        if lag == 0 {
            variance = acc.variance_a();
            if variance < VARIANCE_FLOOR {
                return Err(Error::DegenerateVariance { var: literal });
            }
        }
        out.push((lag as f64 * sample_dt, acc.covariance() / variance));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationResult {
    pub rule: TimeRule,
    pub reduction: PairReduction,
    pub c_d: BTreeMap<usize, f64>,
    /// Per analyzed literal: `(lag, C)` on the recording grid.
    pub c_tau: BTreeMap<usize, Vec<(f64, f64)>>,
    /// Literals dropped for degenerate variance at the reference time.
    pub degenerate_literals: Vec<usize>,
    pub correlation_length: Option<usize>,
    pub correlation_time: Option<f64>,
    pub diameter: usize,
    pub used_runs: usize,
    pub excluded_runs: usize,
    pub skipped_pairs: usize,
    pub median_phase_duration: Option<f64>,
}

impl CorrelationResult {
    /// Literal-averaged C(tau).
    pub fn mean_c_tau(&self) -> Vec<(f64, f64)> {
        let Some(first) = self.c_tau.values().next() else {
            return Vec::new();
        };
        let n = self.c_tau.len() as f64;
        (0..first.len())
            .map(|k| {
                let s: f64 = self.c_tau.values().map(|c| c[k].1).sum();
                (first[k].0, s / n)
            })
            .collect()
    }

    pub fn c_d_csv(&self) -> String {
        let mut out = String::from("d,C\n");
        for (d, c) in &self.c_d {
            let _ = writeln!(out, "{d},{c}");
        }
        out
    }

    pub fn c_tau_csv(&self, cs: &ClauseSystem) -> String {
        let mut out = String::from("tau");
        for &v in self.c_tau.keys() {
            out.push(',');
            out.push_str(&cs.node_map[v]);
        }
        out.push_str(",mean\n");
        for (k, (lag, mean)) in self.mean_c_tau().into_iter().enumerate() {
            let _ = write!(out, "{lag}");
            for c in self.c_tau.values() {
                let _ = write!(out, ",{}", c[k].1);
            }
            let _ = writeln!(out, ",{mean}");
        }
        out
    }

    pub fn summary(&self) -> String {
        let opt = |x: Option<String>| x.unwrap_or_else(|| "none".into());
        format!(
            "time_rule={}\nreduction={:?}\ndiameter={}\ncorrelation_length={}\ncorrelation_time={}\nmedian_phase_duration={}\nused_runs={}\nexcluded_runs={}\nskipped_pairs={}\ndegenerate_literals={}\n",
            self.rule.label(),
            self.reduction,
            self.diameter,
            opt(self.correlation_length.map(|d| d.to_string())),
            opt(self.correlation_time.map(|t| t.to_string())),
            opt(self.median_phase_duration.map(|t| t.to_string())),
            self.used_runs,
            self.excluded_runs,
            self.skipped_pairs,
            self.degenerate_literals.len(),
        )
    }
}

/// Distance and lag at which the correlations drop by an order of
/// magnitude: `C(d) < C(1) / 10` and mean `C(tau) < C(0) / 10`.
pub fn correlation_scales(
    c_d: &BTreeMap<usize, f64>,
    c_tau: &[(f64, f64)],
) -> (Option<usize>, Option<f64>) {
    let length = c_d.get(&1).and_then(|&plateau| {
        c_d.iter()
            .find(|(_, &c)| c < plateau / 10.0)
            .map(|(&d, _)| d)
    });
    let time = c_tau.first().and_then(|&(_, plateau)| {
        c_tau
            .iter()
            .find(|(_, c)| *c < plateau / 10.0)
            .map(|&(lag, _)| lag)
    });
    (length, time)
}

/// Full analysis: C(d) over all graph vertices and C(tau) over `literals`.
pub fn analyze(
    ens: &Ensemble,
    graph: &LiteralGraph,
    literals: &[usize],
    rule: TimeRule,
    reduction: PairReduction,
    max_lag: f64,
) -> Result<CorrelationResult> {
    let spatial = spatial_correlation(ens, graph, rule, reduction)?;
    let mut c_tau = BTreeMap::new();
    let mut degenerate = Vec::new();
    for &lit in literals {
        match temporal_correlation(ens, lit, rule, max_lag) {
            Ok(c) => {
                c_tau.insert(lit, c);
            }
            Err(Error::DegenerateVariance { var }) => degenerate.push(var),
            Err(e) => return Err(e),
        }
    }
    let mut result = CorrelationResult {
        rule,
        reduction,
        c_d: spatial.c_d,
        c_tau,
        degenerate_literals: degenerate,
        correlation_length: None,
        correlation_time: None,
        diameter: graph.diameter(),
        used_runs: spatial.used_runs,
        excluded_runs: spatial.excluded_runs,
        skipped_pairs: spatial.skipped_pairs,
        median_phase_duration: ens.median_phase_duration(),
    };
    let (length, time) = correlation_scales(&result.c_d, &result.mean_c_tau());
    result.correlation_length = length;
    result.correlation_time = time;
    Ok(result)
}

/// 64-bit FNV-1a, used to fingerprint instances in manifests.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `key=value` manifest describing an ensemble run.
pub fn manifest(cfg: &EnsembleConfig, ens: &Ensemble) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "instance_hash={:016x}", fnv1a(cfg.cs.export_dimacs().as_bytes()));
    let _ = writeln!(out, "runs={}", ens.len());
    let _ = writeln!(out, "base_seed={}", cfg.base_seed);
    let seeds: Vec<String> = ens.seeds.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "seeds={}", seeds.join(","));
    let _ = writeln!(out, "max_time={}", cfg.max_time);
    let _ = writeln!(out, "record_stride={}", cfg.record_stride);
    for (k, v) in cfg.params.entries() {
        let _ = writeln!(out, "{k}={v}");
    }
    let _ = writeln!(out, "solved={}", ens.solved());
    let _ = writeln!(out, "timeouts={}", ens.timeouts());
    let _ = writeln!(out, "fixed_point_failures={}", ens.fixed_point_failures().len());
    let _ = writeln!(out, "without_phase={}", ens.without_phase());
    out
}
