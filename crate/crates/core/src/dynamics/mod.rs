//! Continuous-time memory dynamics over a clause system.

mod flow;
mod integrate;
mod params;
mod state;

pub use flow::{flow_field, CompiledSystem, Derivative};
pub use integrate::{
    check_solution, detect_instanton_phase, integrate, integrate_seeded, rng_for_seed, step,
    Crossing, Direction, InstantonPhase, StepReport, Stepper, Termination, Trajectory, TrajRng,
    FIXED_POINT_TOL,
};
pub use params::{FlowParams, DETERMINISTIC_DT, NOISY_DT};
pub use state::{logical, normalized, SystemState, INITIAL_X_L, INITIAL_X_S};
