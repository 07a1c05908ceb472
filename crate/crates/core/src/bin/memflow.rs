use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use memflow::cli::{run, EXIT_CONFIG};
use memflow::config::{Command, Instance, RuleSet, RunConfig, ToyChoice};
use memflow::ensemble::{PairReduction, TimeRule};

#[derive(Parser)]
#[command(name = "memflow", version, about = "Memcomputing factorization and correlation experiments")]
struct Cli {
    /// key=value run config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MEMFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor n with one trajectory.
    Factorize {
        n: Option<u64>,
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Ensemble correlations in space and time.
    Analyze {
        n: Option<u64>,
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        flow: FlowArgs,
        /// Ensemble size M.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        max_lag: Option<f64>,
        #[arg(long, value_enum)]
        t_rule: Option<RuleArg>,
        #[arg(long, value_enum)]
        reduction: Option<ReductionArg>,
    },
    /// Intersection-number scan on a toy flow.
    Toy {
        #[arg(long, value_enum)]
        flow: Option<FlowArg>,
        /// Logistic dimension (1 to 3).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        twist: Option<f64>,
        /// Scan of the first observation time as `lo:hi:count`.
        #[arg(long)]
        times: Option<String>,
        /// Time of the remaining observables.
        #[arg(long)]
        t_rest: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        sigma_lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sigma_hi: Option<f64>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    p_bits: Option<usize>,
    #[arg(long)]
    q_bits: Option<usize>,
    /// DIMACS instance; bypasses the multiplier builder.
    #[arg(long)]
    cnf: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    max_time: Option<f64>,
    /// Noise intensity.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    record_stride: Option<usize>,
    /// Flow parameter override, e.g. `--set alpha=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    PerTrajectory,
    Global,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReductionArg {
    Max,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Logistic,
    Spiral,
}

fn build(cli: Cli) -> Result<RunConfig, String> {
    let command = match cli.cmd {
        Cmd::Factorize { .. } => Command::Factorize,
        Cmd::Analyze { .. } => Command::Analyze,
        Cmd::Toy { .. } => Command::Toy,
    };
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = RunConfig::parse(&text).map_err(|e| e.to_string())?;
            if cfg.command != command {
                return Err(format!("{} holds a {} config", path.display(), cfg.command.name()));
            }
            cfg
        }
        None => RunConfig::new(command),
    };
    let set = |cfg: &mut RunConfig, k: &str, v: String| cfg.set(k, &v).map_err(|e| e.to_string());

    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.cmd {
        Cmd::Factorize { n, inst, flow } => {
            apply_instance(&mut cfg, n, inst)?;
            apply_flow(&mut cfg, flow)?;
        }
        Cmd::Analyze {
            n,
            inst,
            flow,
            runs,
            max_lag,
            t_rule,
            reduction,
        } => {
            apply_instance(&mut cfg, n, inst)?;
            apply_flow(&mut cfg, flow)?;
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(l) = max_lag {
                cfg.max_lag = Some(l);
            }
            if let Some(r) = t_rule {
                cfg.rules = match r {
                    RuleArg::PerTrajectory => RuleSet::One(TimeRule::PerTrajectory),
                    RuleArg::Global => RuleSet::One(TimeRule::Global),
                    RuleArg::Both => RuleSet::Both,
                };
            }
            if let Some(r) = reduction {
                cfg.reduction = match r {
                    ReductionArg::Max => PairReduction::Max,
                    ReductionArg::Mean => PairReduction::Mean,
                };
            }
        }
        Cmd::Toy {
            flow,
            dim,
            omega,
            twist,
            times,
            t_rest,
            points,
            sigma_lo,
            sigma_hi,
        } => {
            match flow {
                Some(FlowArg::Spiral) if !matches!(cfg.flow, ToyChoice::Spiral { .. }) => cfg.use_spiral(),
                Some(FlowArg::Logistic) => set(&mut cfg, "flow", "logistic".into())?,
                _ => {}
            }
            let pairs = [
                ("dim", dim.map(|v| v.to_string())),
                ("omega", omega.map(|v| v.to_string())),
                ("twist", twist.map(|v| v.to_string())),
                ("t_rest", t_rest.map(|v| v.to_string())),
                ("points", points.map(|v| v.to_string())),
                ("sigma_lo", sigma_lo.map(|v| v.to_string())),
                ("sigma_hi", sigma_hi.map(|v| v.to_string())),
            ];
            for (k, v) in pairs {
                if let Some(v) = v {
                    set(&mut cfg, k, v)?;
                }
            }
            if let Some(spec) = times {
                let parts: Vec<&str> = spec.split(':').collect();
                let [lo, hi, count] = parts[..] else {
                    return Err(format!("--times expects lo:hi:count, got {spec}"));
                };
                set(&mut cfg, "t_lo", lo.into())?;
                set(&mut cfg, "t_hi", hi.into())?;
                set(&mut cfg, "t_count", count.into())?;
            }
        }
    }
    Ok(cfg)
}

fn apply_instance(cfg: &mut RunConfig, n: Option<u64>, inst: InstanceArgs) -> Result<(), String> {
    if let Some(path) = inst.cnf {
        if n.is_some() {
            return Err("give either n or --cnf, not both".into());
        }
        cfg.instance = Some(Instance::Dimacs(path));
        return Ok(());
    }
    if n.is_none() && inst.p_bits.is_none() && inst.q_bits.is_none() {
        return Ok(());
    }
    let (old_n, old_p, old_q) = match cfg.instance {
        Some(Instance::Product { n, p_width, q_width }) => (Some(n), Some(p_width), Some(q_width)),
        _ => (None, None, None),
    };
    let n = n.or(old_n).ok_or("missing n")?;
    // Without explicit widths, split the bit length of n.
    let bits = (64 - n.leading_zeros()) as usize;
    let p_width = inst.p_bits.or(old_p).unwrap_or((bits / 2).max(2));
    let q_width = inst.q_bits.or(old_q).unwrap_or((bits - bits / 2).max(2));
    cfg.instance = Some(Instance::Product { n, p_width, q_width });
    Ok(())
}

fn apply_flow(cfg: &mut RunConfig, flow: FlowArgs) -> Result<(), String> {
    if let Some(t) = flow.max_time {
        cfg.max_time = t;
    }
    if let Some(t) = flow.theta {
        cfg.params.insert("theta".into(), t);
    }
    if let Some(s) = flow.record_stride {
        cfg.record_stride = s;
    }
    for kv in flow.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got {kv}"))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cfg = match build(Cli::parse()) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = run(&cfg);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(out.code)
}
