use rand::Rng;

use crate::cnf::ClauseSystem;
use crate::error::{Error, Result};

use super::params::FlowParams;

/// Voltages (one per variable) plus fast and slow memory (one per clause).
///
/// Voltages use the symmetric convention `v in [-1, 1]`, logical 0 at -1
/// and logical 1 at +1. The normalized voltage `u = (v + 1) / 2` puts the
/// logical threshold at `u = 1/2`, i.e. `v = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub v: Vec<f64>,
    pub x_s: Vec<f64>,
    pub x_l: Vec<f64>,
    pub t: f64,
}

pub const INITIAL_X_S: f64 = 0.5;
pub const INITIAL_X_L: f64 = 1.0;

impl SystemState {
    /// Random start: free voltages uniform in `(-1, 1)`, units on their rail,
    /// `x_s = 0.5`, `x_l = 1`.
    pub fn random<R: Rng + ?Sized>(cs: &ClauseSystem, rng: &mut R) -> Self {
        let v = cs
            .units
            .iter()
            .map(|u| match u {
                Some(true) => 1.0,
                Some(false) => -1.0,
                None => loop {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    if x != -1.0 {
                        break x;
                    }
                },
            })
            .collect();
        Self::with_voltages(cs, v)
    }

    pub fn with_voltages(cs: &ClauseSystem, v: Vec<f64>) -> Self {
        let m = cs.clauses.len();
        SystemState {
            v,
            x_s: vec![INITIAL_X_S; m],
            x_l: vec![INITIAL_X_L; m],
            t: 0.0,
        }
    }

    pub fn check_dims(&self, cs: &ClauseSystem) -> Result<()> {
        if self.v.len() != cs.num_vars {
            return Err(Error::DimensionMismatch {
                expected: cs.num_vars,
                got: self.v.len(),
            });
        }
        let m = cs.clauses.len();
        for len in [self.x_s.len(), self.x_l.len()] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, got: len });
            }
        }
        Ok(())
    }

    /// Clamps every component into its box.
    pub fn clamp(&mut self, p: &FlowParams) {
        for v in &mut self.v {
            *v = v.clamp(-p.v_clamp, p.v_clamp);
        }
        for x in &mut self.x_s {
            *x = x.clamp(0.0, 1.0);
        }
        for x in &mut self.x_l {
            *x = x.clamp(1.0, p.x_l_max);
        }
    }

    pub fn within_bounds(&self, p: &FlowParams) -> bool {
        self.v.iter().all(|v| v.abs() <= p.v_clamp)
            && self.x_s.iter().all(|x| (0.0..=1.0).contains(x))
            && self.x_l.iter().all(|x| (1.0..=p.x_l_max).contains(x))
    }

    /// Logical reading of the voltages; `v = 0` reads as true.
    pub fn rounded(&self) -> Vec<bool> {
        self.v.iter().map(|&v| logical(v)).collect()
    }
}

#[inline]
pub fn logical(v: f64) -> bool {
    v >= 0.0
}

/// Normalized voltage in `[0, 1]`.
#[inline]
pub fn normalized(v: f64) -> f64 {
    0.5 * (v + 1.0)
}
