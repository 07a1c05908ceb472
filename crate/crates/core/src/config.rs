//! Run configuration as flat `key=value` text.
//!
//! One [`RunConfig`] describes a whole batch run. Stored with every
//! resolved flow parameter it reproduces the run exactly, so the manifest
//! written next to the artifacts doubles as a config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::cnf::{encode_cnf, ClauseSystem};
use crate::dynamics::FlowParams;
use crate::ensemble::{PairReduction, TimeRule};
use crate::error::{Error, Result};
use crate::netlist::build_multiplier;
use crate::toy::{linspace, FamilySpec, ToyFlow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Factorize,
    Analyze,
    Toy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Factorize => "factorize",
            Command::Analyze => "analyze",
            Command::Toy => "toy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Product { n: u64, p_width: usize, q_width: usize },
    Dimacs(PathBuf),
}

impl Instance {
    pub fn load(&self) -> Result<ClauseSystem> {
        match self {
            Instance::Product { n, p_width, q_width } => {
                if *n < 4 {
                    return Err(Error::Config(format!("n must be at least 4, got {n}")));
                }
                encode_cnf(&build_multiplier(*p_width, *q_width)?, *n)
            }
            Instance::Dimacs(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                ClauseSystem::parse_dimacs(&text)
            }
        }
    }

    /// Target product, when known.
    pub fn product(&self) -> Option<u64> {
        match self {
            Instance::Product { n, .. } => Some(*n),
            Instance::Dimacs(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ToyChoice {
    Logistic { dim: usize },
    Spiral { omega: f64, twist: f64 },
}

impl ToyChoice {
    pub fn build(self) -> Result<ToyFlow> {
        match self {
            ToyChoice::Logistic { dim } => ToyFlow::logistic_product(dim),
            ToyChoice::Spiral { omega, twist } => ToyFlow::spiral(omega, twist),
        }
    }
}

/// Which reference-time rules an analysis produces output sets for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleSet {
    One(TimeRule),
    Both,
}

impl RuleSet {
    pub fn rules(self) -> Vec<TimeRule> {
        match self {
            RuleSet::One(r) => vec![r],
            RuleSet::Both => vec![TimeRule::PerTrajectory, TimeRule::Global],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub instance: Option<Instance>,
    /// Flow parameter overrides on top of the instance defaults. Setting
    /// `theta` alone also selects the matching default step.
    pub params: BTreeMap<String, f64>,
    pub max_time: f64,
    pub record_stride: usize,
    /// `None` uses every available core.
    pub threads: Option<usize>,

    pub runs: usize,
    /// `None` means four times the median instantonic phase duration.
    pub max_lag: Option<f64>,
    pub rules: RuleSet,
    pub reduction: PairReduction,

    pub flow: ToyChoice,
    pub family: FamilySpec,
    /// First observation time is scanned over `linspace(lo, hi, count)`.
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_count: usize,
    /// Fixed time of the remaining observables.
    pub t_rest: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            out_dir: PathBuf::from(format!("memflow-{}", command.name())),
            seed: 0,
            instance: None,
            params: BTreeMap::new(),
            max_time: 1e5,
            record_stride: 10,
            threads: None,
            runs: 200,
            max_lag: None,
            rules: RuleSet::One(TimeRule::PerTrajectory),
            reduction: PairReduction::Max,
            flow: ToyChoice::Logistic { dim: 2 },
            family: FamilySpec::default(),
            t_lo: 5.0,
            t_hi: 13.0,
            t_count: 20,
            t_rest: 9.0,
        }
    }

    /// Switches to the spiral flow with its scan defaults.
    pub fn use_spiral(&mut self) {
        self.flow = ToyChoice::Spiral { omega: 0.5, twist: 6.0 };
        self.family.sigma_lo = -6.0;
        self.family.sigma_hi = 4.0;
        self.family.points = 21;
        self.t_lo = 8.5;
        self.t_hi = 11.5;
        self.t_rest = 10.0;
    }

    /// Instance defaults, then `theta` with its step, then the overrides.
    pub fn resolve_params(&self, cs: &ClauseSystem) -> Result<FlowParams> {
        let mut p = FlowParams::for_clauses(cs.clauses.len());
        if let Some(&theta) = self.params.get("theta") {
            p = p.with_noise(theta);
        }
        for (k, &v) in &self.params {
            if !p.set(k, v) {
                return Err(Error::Config(format!("unknown flow parameter {k}")));
            }
        }
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    /// Observation-time tuples of the toy scan.
    pub fn time_grid(&self, moduli: usize) -> Vec<Vec<f64>> {
        linspace(self.t_lo, self.t_hi, self.t_count)
            .into_iter()
            .map(|t| {
                let mut v = vec![self.t_rest; moduli];
                if let Some(first) = v.first_mut() {
                    *first = t;
                }
                v
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.command {
            Command::Factorize | Command::Analyze if self.instance.is_none() => {
                return bad("an instance (n with widths, or a DIMACS path) is required".into());
            }
            Command::Analyze if self.runs < 2 => return bad(format!("runs must be at least 2, got {}", self.runs)),
            _ => {}
        }
        if !(self.max_time.is_finite() && self.max_time > 0.0) {
            return bad(format!("max_time must be positive, got {}", self.max_time));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.max_lag.is_some_and(|l| !(l.is_finite() && l >= 0.0)) {
            return bad("max_lag must be non-negative".into());
        }
        if self.command == Command::Toy && (self.t_count == 0 || self.t_hi < self.t_lo) {
            return bad("toy time grid needs t_count >= 1 and t_hi >= t_lo".into());
        }
        Ok(())
    }

    /// Serializes every field, one `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("command", self.command.name().into());
        kv("out_dir", self.out_dir.display().to_string());
        kv("seed", self.seed.to_string());
        match &self.instance {
            Some(Instance::Product { n, p_width, q_width }) => {
                kv("n", n.to_string());
                kv("p_width", p_width.to_string());
                kv("q_width", q_width.to_string());
            }
            Some(Instance::Dimacs(path)) => kv("cnf", path.display().to_string()),
            None => {}
        }
        for (k, v) in &self.params {
            kv(k, v.to_string());
        }
        kv("max_time", self.max_time.to_string());
        kv("record_stride", self.record_stride.to_string());
        kv("threads", self.threads.map_or("auto".into(), |t| t.to_string()));
        kv("runs", self.runs.to_string());
        kv("max_lag", self.max_lag.map_or("auto".into(), |l| l.to_string()));
        kv(
            "t_rule",
            match self.rules {
                RuleSet::One(r) => r.label().into(),
                RuleSet::Both => "both".into(),
            },
        );
        kv("reduction", reduction_name(self.reduction).into());
        match self.flow {
            ToyChoice::Logistic { dim } => {
                kv("flow", "logistic".into());
                kv("dim", dim.to_string());
            }
            ToyChoice::Spiral { omega, twist } => {
                kv("flow", "spiral".into());
                kv("omega", omega.to_string());
                kv("twist", twist.to_string());
            }
        }
        let f = &self.family;
        kv("sigma_lo", f.sigma_lo.to_string());
        kv("sigma_hi", f.sigma_hi.to_string());
        kv("points", f.points.to_string());
        kv("seed_radius", f.r.to_string());
        kv("toy_dt", f.dt.to_string());
        kv("horizon", f.horizon.to_string());
        kv("t_lo", self.t_lo.to_string());
        kv("t_hi", self.t_hi.to_string());
        kv("t_count", self.t_count.to_string());
        kv("t_rest", self.t_rest.to_string());
        out
    }

    /// Parses `key=value` lines (`#` starts a comment). Keys absent from the
    /// text keep their defaults; `version` and `instance_hash` lines from
    /// manifests are accepted and ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let command = match pairs.iter().find(|(k, _)| k == "command").map(|(_, v)| v.as_str()) {
            Some("factorize") => Command::Factorize,
            Some("analyze") => Command::Analyze,
            Some("toy") => Command::Toy,
            Some(other) => return Err(Error::Config(format!("unknown command {other}"))),
            None => return Err(Error::Config("missing command".into())),
        };
        let mut cfg = RunConfig::new(command);
        if pairs.iter().any(|(k, v)| k == "flow" && v == "spiral") {
            cfg.use_spiral();
        }
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "command" | "version" | "instance_hash" => {}
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = num(key, value)?,
            "n" | "p_width" | "q_width" => {
                let (mut n, mut pw, mut qw) = match self.instance {
                    Some(Instance::Product { n, p_width, q_width }) => (n, p_width, q_width),
                    _ => (0, 0, 0),
                };
                match key {
                    "n" => n = num(key, value)?,
                    "p_width" => pw = num(key, value)?,
                    _ => qw = num(key, value)?,
                }
                self.instance = Some(Instance::Product { n, p_width: pw, q_width: qw });
            }
            "cnf" => self.instance = Some(Instance::Dimacs(PathBuf::from(value))),
            "max_time" => self.max_time = num(key, value)?,
            "record_stride" => self.record_stride = num(key, value)?,
            "threads" => self.threads = if value == "auto" { None } else { Some(num(key, value)?) },
            "runs" => self.runs = num(key, value)?,
            "max_lag" => self.max_lag = if value == "auto" { None } else { Some(num(key, value)?) },
            "t_rule" => {
                self.rules = match value {
                    "per-trajectory" => RuleSet::One(TimeRule::PerTrajectory),
                    "global" => RuleSet::One(TimeRule::Global),
                    "both" => RuleSet::Both,
                    _ => return Err(Error::Config(format!("unknown t_rule {value}"))),
                }
            }
            "reduction" => {
                self.reduction = match value {
                    "max" => PairReduction::Max,
                    "mean" => PairReduction::Mean,
                    _ => return Err(Error::Config(format!("unknown reduction {value}"))),
                }
            }
            "flow" => match value {
                "logistic" => {
                    if !matches!(self.flow, ToyChoice::Logistic { .. }) {
                        self.flow = ToyChoice::Logistic { dim: 2 };
                    }
                }
                "spiral" => {
                    if !matches!(self.flow, ToyChoice::Spiral { .. }) {
                        self.use_spiral();
                    }
                }
                _ => return Err(Error::Config(format!("unknown flow {value}"))),
            },
            "dim" => match &mut self.flow {
                ToyChoice::Logistic { dim } => *dim = num(key, value)?,
                _ => return Err(Error::Config("dim applies to the logistic flow only".into())),
            },
            "omega" | "twist" => match &mut self.flow {
                ToyChoice::Spiral { omega, twist } => {
                    let slot = if key == "omega" { omega } else { twist };
                    *slot = num(key, value)?;
                }
                _ => return Err(Error::Config(format!("{key} applies to the spiral flow only"))),
            },
            "sigma_lo" => self.family.sigma_lo = num(key, value)?,
            "sigma_hi" => self.family.sigma_hi = num(key, value)?,
            "points" => self.family.points = num(key, value)?,
            "seed_radius" => self.family.r = num(key, value)?,
            "toy_dt" => self.family.dt = num(key, value)?,
            "horizon" => self.family.horizon = num(key, value)?,
            "t_lo" => self.t_lo = num(key, value)?,
            "t_hi" => self.t_hi = num(key, value)?,
            "t_count" => self.t_count = num(key, value)?,
            "t_rest" => self.t_rest = num(key, value)?,
            _ => {
                let v: f64 = num(key, value)?;
                if !FlowParams::for_clauses(1).set(key, v) {
                    return Err(Error::Config(format!("unknown key {key}")));
                }
                self.params.insert(key.to_string(), v);
            }
        }
        Ok(())
    }
}

fn reduction_name(r: PairReduction) -> &'static str {
    match r {
        PairReduction::Max => "max",
        PairReduction::Mean => "mean",
    }
}
