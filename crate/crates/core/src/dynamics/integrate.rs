//! Time stepping, trajectory recording and solution detection.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cnf::ClauseSystem;
use crate::error::{Error, Result};

use super::flow::{project, CompiledSystem, Derivative};
use super::params::FlowParams;
use super::state::{logical, normalized, SystemState};

/// Sup-norm of the (clamped) voltage derivative below which a state counts
/// as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-6;

/// Seeded generator used for every trajectory.
pub type TrajRng = ChaCha8Rng;

pub fn rng_for_seed(seed: u64) -> TrajRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Logical 0 -> 1.
    Up,
    /// Logical 1 -> 0.
    Down,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }
}

/// A voltage crossing the logical threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    /// Linearly interpolated crossing time within the step.
    pub t: f64,
    pub var: usize,
    pub direction: Direction,
    /// Sign of the drift `dv/dt` at the start of the step (0 if it vanished).
    pub slope_sign: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Solved(Vec<bool>),
    MaxTime,
    /// The voltages stopped moving while some clause is still violated.
    FixedPointNonSolution,
}

impl Termination {
    pub fn is_solved(&self) -> bool {
        matches!(self, Termination::Solved(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::Solved(_) => "solved",
            Termination::MaxTime => "max_time",
            Termination::FixedPointNonSolution => "fixed_point_non_solution",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub record_stride: usize,
    pub num_vars: usize,
    /// `sample_times[k] = k * record_stride * dt`.
    pub sample_times: Vec<f64>,
    /// Row-major voltage snapshots, `num_vars` per sample.
    pub samples: Vec<f64>,
    pub crossings: Vec<Crossing>,
    pub termination: Termination,
    pub final_state: SystemState,
    pub steps: u64,
}

impl Trajectory {
    pub fn num_samples(&self) -> usize {
        self.sample_times.len()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.num_vars..(k + 1) * self.num_vars]
    }

    /// Spacing of the recording grid.
    pub fn sample_dt(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    /// Voltages on grid point `k`. Past the end of the run the final state
    /// is held (the run stopped on a fixed point of the voltages or at its
    /// time limit).
    pub fn voltages_at_grid(&self, k: usize) -> &[f64] {
        if k < self.num_samples() {
            self.sample(k)
        } else {
            &self.final_state.v
        }
    }

    /// Nearest grid index to time `t`.
    pub fn grid_index(&self, t: f64) -> usize {
        (t / self.sample_dt()).round().max(0.0) as usize
    }

    /// CSV of normalized voltages `u = (v + 1) / 2` for `vars`, one row per
    /// sample plus the final state.
    pub fn to_csv(&self, cs: &ClauseSystem, vars: &[usize]) -> String {
        let mut out = String::from("t");
        for &v in vars {
            out.push(',');
            out.push_str(&cs.node_map[v]);
        }
        out.push('\n');
        let mut row = |t: f64, v: &[f64]| {
            let _ = write!(out, "{t}");
            for &i in vars {
                let _ = write!(out, ",{}", normalized(v[i]));
            }
            out.push('\n');
        };
        for k in 0..self.num_samples() {
            row(self.sample_times[k], self.sample(k));
        }
        if self.sample_times.last().is_none_or(|&t| self.final_state.t > t) {
            row(self.final_state.t, &self.final_state.v);
        }
        out
    }

    pub fn crossings_csv(&self) -> String {
        let mut out = String::from("t,var,direction,slope_sign\n");
        for c in &self.crossings {
            let _ = writeln!(out, "{},{},{},{}", c.t, c.var, c.direction.sign(), c.slope_sign);
        }
        out
    }
}

/// Bounds of the solution-search transient: first to last threshold
/// crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstantonPhase {
    pub t_start: f64,
    pub t_end: f64,
    pub crossing_count: usize,
    pub mid_time: f64,
}

impl InstantonPhase {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

pub fn detect_instanton_phase(traj: &Trajectory) -> Option<InstantonPhase> {
    let first = traj.crossings.first()?;
    let last = traj.crossings.last()?;
    Some(InstantonPhase {
        t_start: first.t,
        t_end: last.t,
        crossing_count: traj.crossings.len(),
        mid_time: 0.5 * (first.t + last.t),
    })
}

/// Rounds voltages (ties to true), overrides units and returns the
/// assignment iff every clause holds.
pub fn check_solution(state: &SystemState, cs: &ClauseSystem) -> Option<Vec<bool>> {
    if state.v.len() != cs.num_vars {
        return None;
    }
    let assignment: Vec<bool> = state
        .v
        .iter()
        .zip(&cs.units)
        .map(|(&v, u)| u.unwrap_or(logical(v)))
        .collect();
    cs.satisfied_by(&assignment).then_some(assignment)
}

/// Reusable stepping machinery for one clause system.
pub struct Stepper<'a> {
    cs: &'a ClauseSystem,
    sys: CompiledSystem,
    params: FlowParams,
    deriv: Derivative,
}

/// What happened during one step.
#[derive(Debug, Default)]
pub struct StepReport {
    /// Sup-norm of the clamped voltage drift at the start of the step.
    pub drift_norm: f64,
    pub crossings: Vec<Crossing>,
}

impl<'a> Stepper<'a> {
    pub fn new(cs: &'a ClauseSystem, params: &FlowParams) -> Result<Self> {
        params.validate()?;
        Ok(Stepper {
            cs,
            sys: CompiledSystem::new(cs),
            params: params.clone(),
            deriv: Derivative::zeros(cs.num_vars, cs.clauses.len()),
        })
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    /// Euler-Maruyama step with diagonal additive noise on the free
    /// voltages; memories take a plain Euler step. `t_next` is the time
    /// assigned after the step.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        state: &mut SystemState,
        t_next: f64,
        rng: &mut R,
    ) -> Result<StepReport> {
        let p = &self.params;
        self.sys.eval(state, p, &mut self.deriv);
        let d = &self.deriv;
        if d.v.iter().chain(&d.x_s).chain(&d.x_l).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { t: state.t });
        }

        let mut report = StepReport::default();
        let t0 = state.t;
        let dt = t_next - t0;
        let noise_scale = (2.0 * p.theta * dt).sqrt();
        for (i, v) in state.v.iter_mut().enumerate() {
            if self.sys.fixed[i].is_some() {
                continue;
            }
            let drift = d.v[i];
            report.drift_norm = report.drift_norm.max(project(drift, *v, p.v_clamp).abs());
            let mut next = *v + drift * dt;
            if noise_scale > 0.0 {
                let eta: f64 = rng.sample(StandardNormal);
                next += noise_scale * eta;
            }
            next = next.clamp(-p.v_clamp, p.v_clamp);
            let (before, after) = (logical(*v), logical(next));
            if before != after {
                let frac = if next == *v { 1.0 } else { (-*v / (next - *v)).clamp(0.0, 1.0) };
                report.crossings.push(Crossing {
                    t: t0 + frac * dt,
                    var: i,
                    direction: if after { Direction::Up } else { Direction::Down },
                    slope_sign: if drift > 0.0 {
                        1
                    } else if drift < 0.0 {
                        -1
                    } else {
                        0
                    },
                });
            }
            *v = next;
        }
        for (x, dx) in state.x_s.iter_mut().zip(&d.x_s) {
            *x = (*x + dx * dt).clamp(0.0, 1.0);
        }
        for (x, dx) in state.x_l.iter_mut().zip(&d.x_l) {
            *x = (*x + dx * dt).clamp(1.0, p.x_l_max);
        }
        state.t = t_next;
        report.crossings.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(report)
    }

    /// Drift norm at `state` without stepping.
    pub fn drift_norm(&mut self, state: &SystemState) -> f64 {
        self.sys.eval(state, &self.params, &mut self.deriv);
        self.deriv
            .v
            .iter()
            .zip(&state.v)
            .map(|(&dv, &v)| project(dv, v, self.params.v_clamp).abs())
            .fold(0.0, f64::max)
    }

    pub fn clause_system(&self) -> &ClauseSystem {
        self.cs
    }
}

/// One stochastic step. With `theta = 0` this is forward Euler.
pub fn step<R: Rng + ?Sized>(
    state: &SystemState,
    cs: &ClauseSystem,
    p: &FlowParams,
    rng: &mut R,
) -> Result<SystemState> {
    state.check_dims(cs)?;
    let mut stepper = Stepper::new(cs, p)?;
    let mut next = state.clone();
    stepper.advance(&mut next, state.t + p.dt, rng)?;
    Ok(next)
}

/// Integrates until a solution is found, `max_time` is reached, or the
/// voltages stall on a non-solution state.
pub fn integrate<R: Rng + ?Sized>(
    initial: &SystemState,
    cs: &ClauseSystem,
    p: &FlowParams,
    max_time: f64,
    record_stride: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    initial.check_dims(cs)?;
    let stride = record_stride.max(1);
    let mut stepper = Stepper::new(cs, p)?;
    let mut state = initial.clone();
    state.clamp(p);
    let t_origin = state.t;

    let mut traj = Trajectory {
        dt: p.dt,
        record_stride: stride,
        num_vars: cs.num_vars,
        sample_times: vec![t_origin],
        samples: state.v.clone(),
        crossings: Vec::new(),
        termination: Termination::MaxTime,
        final_state: state.clone(),
        steps: 0,
    };

    if let Some(a) = check_solution(&state, cs) {
        traj.termination = Termination::Solved(a);
        return Ok(traj);
    }
    let max_steps = if max_time > 0.0 { (max_time / p.dt).floor() as u64 } else { 0 };

    let mut k: u64 = 0;
    while k < max_steps {
        let t_next = t_origin + (k + 1) as f64 * p.dt;
        let report = stepper.advance(&mut state, t_next, rng)?;
        if report.drift_norm < FIXED_POINT_TOL {
            // the pre-step state was stationary and not a solution
            traj.termination = Termination::FixedPointNonSolution;
            break;
        }
        k += 1;
        let crossed = !report.crossings.is_empty();
        traj.crossings.extend(report.crossings);
        if k % stride as u64 == 0 {
            traj.sample_times.push(t_next);
            traj.samples.extend_from_slice(&state.v);
        }
        if crossed {
            if let Some(a) = check_solution(&state, cs) {
                traj.termination = Termination::Solved(a);
                break;
            }
        }
    }
    traj.steps = k;
    traj.final_state = state;
    Ok(traj)
}

/// Integrates from a random start drawn from `seed`; the same generator
/// then drives the noise.
pub fn integrate_seeded(
    cs: &ClauseSystem,
    p: &FlowParams,
    seed: u64,
    max_time: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    let mut rng = rng_for_seed(seed);
    let init = SystemState::random(cs, &mut rng);
    integrate(&init, cs, p, max_time, record_stride, &mut rng)
}
