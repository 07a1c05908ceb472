//! Flow field of the memory dynamics.
//!
//! For clause `m` with literal signs `q_{i,m}` the mismatch is
//! `C_m = 1/2 min_i (1 - q_{i,m} v_i)`. Voltages follow a gradient-like term
//! weighted by both memories and a rigidity term that pulls the literal
//! holding the clause minimum toward its satisfying rail:
//!
//! ```text
//! dv_n/dt   = sum_m x_l x_s G_nm + (1 + zeta x_l)(1 - x_s) R_nm
//! G_nm      = 1/2 q_nm min_{i != n} (1 - q_im v_i)
//! R_nm      = 1/2 (q_nm - v_n)   if n attains the minimum, else 0
//! dx_s/dt   = beta (x_s + epsilon)(C_m - gamma)
//! dx_l/dt   = alpha (C_m - delta)
//! ```
//!
//! Variables fixed by units keep `dv/dt = 0`. At a satisfying vertex every
//! component of `dv/dt` is either zero or points into the voltage rail, so
//! the clamped motion vanishes.

use crate::cnf::ClauseSystem;
use crate::error::Result;

use super::params::FlowParams;
use super::state::SystemState;

/// Time derivative of a [`SystemState`].
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub v: Vec<f64>,
    pub x_s: Vec<f64>,
    pub x_l: Vec<f64>,
}

impl Derivative {
    pub fn zeros(num_vars: usize, num_clauses: usize) -> Self {
        Derivative {
            v: vec![0.0; num_vars],
            x_s: vec![0.0; num_clauses],
            x_l: vec![0.0; num_clauses],
        }
    }

    /// Voltage derivative with components that push outward at a rail set
    /// to zero: the motion actually realized under clamping.
    pub fn projected_v(&self, v: &[f64], v_clamp: f64) -> Vec<f64> {
        self.v
            .iter()
            .zip(v)
            .map(|(&dv, &x)| project(dv, x, v_clamp))
            .collect()
    }
}

#[inline]
pub(crate) fn project(dv: f64, v: f64, v_clamp: f64) -> f64 {
    if (v >= v_clamp && dv > 0.0) || (v <= -v_clamp && dv < 0.0) {
        0.0
    } else {
        dv
    }
}

/// Flattened clause system used in the inner loop.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    pub num_vars: usize,
    offsets: Vec<usize>,
    vars: Vec<usize>,
    signs: Vec<f64>,
    /// Per variable: `Some(+-1.0)` when fixed by a unit.
    pub(crate) fixed: Vec<Option<f64>>,
}

impl CompiledSystem {
    pub fn new(cs: &ClauseSystem) -> Self {
        let mut offsets = Vec::with_capacity(cs.clauses.len() + 1);
        let mut vars = Vec::new();
        let mut signs = Vec::new();
        offsets.push(0);
        for clause in &cs.clauses {
            for l in clause {
                vars.push(l.var);
                signs.push(l.sign());
            }
            offsets.push(vars.len());
        }
        let fixed = cs
            .units
            .iter()
            .map(|u| u.map(|b| if b { 1.0 } else { -1.0 }))
            .collect();
        CompiledSystem {
            num_vars: cs.num_vars,
            offsets,
            vars,
            signs,
            fixed,
        }
    }

    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    fn clause(&self, m: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[m]..self.offsets[m + 1];
        (&self.vars[r.clone()], &self.signs[r])
    }

    /// Clause mismatch `C_m` for every clause.
    pub fn mismatches(&self, v: &[f64]) -> Vec<f64> {
        (0..self.num_clauses())
            .map(|m| {
                let (vars, signs) = self.clause(m);
                0.5 * vars
                    .iter()
                    .zip(signs)
                    .map(|(&i, &q)| 1.0 - q * v[i])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Evaluates the flow into `out`.
    pub fn eval(&self, state: &SystemState, p: &FlowParams, out: &mut Derivative) {
        out.v.iter_mut().for_each(|x| *x = 0.0);
        let v = &state.v;
        for m in 0..self.num_clauses() {
            let (vars, signs) = self.clause(m);
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut arg = 0;
            for (k, (&i, &q)) in vars.iter().zip(signs).enumerate() {
                let a = 1.0 - q * v[i];
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    arg = k;
                } else if a < min2 {
                    min2 = a;
                }
            }
            if vars.len() == 1 {
                min2 = 1.0;
            }
            let c = 0.5 * min1;
            let xs = state.x_s[m];
            let xl = state.x_l[m];
            let grad_w = xl * xs;
            let rigid_w = (1.0 + p.zeta * xl) * (1.0 - xs);
            for (k, (&i, &q)) in vars.iter().zip(signs).enumerate() {
                let others = if k == arg { min2 } else { min1 };
                let g = 0.5 * q * others;
                let r = if 1.0 - q * v[i] == min1 {
                    0.5 * (q - v[i])
                } else {
                    0.0
                };
                out.v[i] += grad_w * g + rigid_w * r;
            }
            out.x_s[m] = p.beta * (xs + p.epsilon) * (c - p.gamma);
            out.x_l[m] = p.alpha * (c - p.delta);
        }
        for (dv, f) in out.v.iter_mut().zip(&self.fixed) {
            if f.is_some() {
                *dv = 0.0;
            }
        }
    }
}

/// Evaluates the flow field at `state`.
pub fn flow_field(state: &SystemState, cs: &ClauseSystem, p: &FlowParams) -> Result<Derivative> {
    state.check_dims(cs)?;
    let sys = CompiledSystem::new(cs);
    let mut out = Derivative::zeros(cs.num_vars, cs.clauses.len());
    sys.eval(state, p, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{encode_cnf, Lit};
    use crate::error::Error;
    use crate::netlist::build_multiplier;
    use proptest::prelude::*;

    fn single_or() -> ClauseSystem {
        ClauseSystem {
            num_vars: 2,
            clauses: vec![vec![Lit::pos(0), Lit::pos(1)]],
            units: vec![None, None],
            node_map: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn single_clause_hand_values() {
        // v = (-1, -1): both terms 1 - v = 2, C = 1, min over the other = 2.
        // Ties: both literals attain the minimum.
        // G = 1/2 * 2 = 1, R = 1/2 (1 - (-1)) = 1.
        // x_s = 0, x_l = 1: dv = 0 * G + (1 + 0.1)(1 - 0) R = 1.1.
        let cs = single_or();
        let p = FlowParams::for_clauses(1);
        let s = SystemState {
            v: vec![-1.0, -1.0],
            x_s: vec![0.0],
            x_l: vec![1.0],
            t: 0.0,
        };
        let d = flow_field(&s, &cs, &p).unwrap();
        assert_eq!(d.v[0], d.v[1]);
        assert!((d.v[0] - 1.1).abs() < 1e-15);
        // dx_s = 20 * (0 + 1e-3) * (1 - 0.25), dx_l = 5 * (1 - 0.05)
        assert!((d.x_s[0] - 0.015).abs() < 1e-15);
        assert!((d.x_l[0] - 4.75).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_single_clause() {
        // v = (-0.5, 0.2): terms 1.5 and 0.8; min = 0.8 held by literal 1.
        // G_0 = 1/2 * 0.8 = 0.4, G_1 = 1/2 * 1.5 = 0.75, R_1 = 1/2 (1 - 0.2) = 0.4.
        // x_s = 0.5, x_l = 2: grad weight 1, rigid weight (1.2)(0.5) = 0.6.
        let cs = single_or();
        let p = FlowParams::for_clauses(1);
        let s = SystemState {
            v: vec![-0.5, 0.2],
            x_s: vec![0.5],
            x_l: vec![2.0],
            t: 0.0,
        };
        let d = flow_field(&s, &cs, &p).unwrap();
        assert!((d.v[0] - 0.4).abs() < 1e-15);
        assert!((d.v[1] - (0.75 + 0.6 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn solution_vertex_is_fixed() {
        let net = build_multiplier(2, 3).unwrap();
        let cs = encode_cnf(&net, 15).unwrap();
        let assignment = net.simulate(3, 5);
        let s = SystemState {
            v: assignment.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect(),
            x_s: vec![0.3; cs.clauses.len()],
            x_l: vec![7.0; cs.clauses.len()],
            t: 0.0,
        };
        let d = flow_field(&s, &cs, &FlowParams::for_clauses(cs.clauses.len())).unwrap();
        // The sole true literal of a clause still feels G pushing it into its
        // rail; under clamping that motion is null.
        assert!(d.projected_v(&s.v, 1.0).iter().all(|&x| x == 0.0));
        assert!(d.x_l.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let cs = single_or();
        let s = SystemState {
            v: vec![0.0],
            x_s: vec![0.5],
            x_l: vec![1.0],
            t: 0.0,
        };
        assert!(matches!(
            flow_field(&s, &cs, &FlowParams::for_clauses(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn mismatch_is_bounded(v in proptest::collection::vec(-1.0f64..=1.0, 11)) {
            let cs = encode_cnf(&build_multiplier(2, 3).unwrap(), 15).unwrap();
            let sys = CompiledSystem::new(&cs);
            let mut full = vec![0.0; cs.num_vars];
            for (k, x) in full.iter_mut().enumerate() {
                *x = v[k % v.len()];
            }
            for c in sys.mismatches(&full) {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }
}
