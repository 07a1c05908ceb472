use crate::error::{Error, Result};

/// Rates and thresholds of the memory dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowParams {
    /// Slow-memory rate.
    pub alpha: f64,
    /// Fast-memory rate.
    pub beta: f64,
    /// Fast-memory threshold.
    pub gamma: f64,
    /// Slow-memory threshold.
    pub delta: f64,
    /// Fast-memory floor.
    pub epsilon: f64,
    /// Rigidity weight.
    pub zeta: f64,
    /// Noise intensity; zero gives deterministic dynamics.
    pub theta: f64,
    pub dt: f64,
    /// Upper bound of the slow memory.
    pub x_l_max: f64,
    /// Voltages live in `[-v_clamp, v_clamp]`.
    pub v_clamp: f64,
}

pub const DETERMINISTIC_DT: f64 = 0.05;
pub const NOISY_DT: f64 = 0.01;

impl FlowParams {
    /// Default tuning for a system with `num_clauses` clauses.
    pub fn for_clauses(num_clauses: usize) -> Self {
        FlowParams {
            alpha: 5.0,
            beta: 20.0,
            gamma: 0.25,
            delta: 0.05,
            epsilon: 1e-3,
            zeta: 0.1,
            theta: 0.0,
            dt: DETERMINISTIC_DT,
            x_l_max: 1e4 * num_clauses.max(1) as f64,
            v_clamp: 1.0,
        }
    }

    /// Defaults with noise intensity `theta`, switching to the smaller step
    /// when `theta > 0`.
    pub fn with_noise(mut self, theta: f64) -> Self {
        self.theta = theta;
        self.dt = if theta > 0.0 { NOISY_DT } else { DETERMINISTIC_DT };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
            self.theta,
            self.dt,
            self.x_l_max,
            self.v_clamp,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 || self.epsilon <= 0.0 || self.zeta <= 0.0 {
            return bad("rates must be positive");
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) || !(0.0 < self.delta && self.delta < 1.0) {
            return bad("gamma and delta must lie in (0, 1)");
        }
        if self.theta < 0.0 {
            return bad("theta must be non-negative");
        }
        if self.dt <= 0.0 {
            return bad("dt must be positive");
        }
        if self.x_l_max < 1.0 {
            return bad("x_l_max must be at least 1");
        }
        if self.v_clamp <= 0.0 {
            return bad("v_clamp must be positive");
        }
        Ok(())
    }

    /// `(key, value)` pairs covering every field, in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 10] {
        [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("zeta", self.zeta),
            ("theta", self.theta),
            ("dt", self.dt),
            ("x_l_max", self.x_l_max),
            ("v_clamp", self.v_clamp),
        ]
    }

    /// Sets a field by key. Returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "gamma" => &mut self.gamma,
            "delta" => &mut self.delta,
            "epsilon" => &mut self.epsilon,
            "zeta" => &mut self.zeta,
            "theta" => &mut self.theta,
            "dt" => &mut self.dt,
            "x_l_max" => &mut self.x_l_max,
            "v_clamp" => &mut self.v_clamp,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = FlowParams::for_clauses(100);
        p.validate().unwrap();
        assert_eq!(p.x_l_max, 1e6);
        let noisy = p.clone().with_noise(0.005);
        assert_eq!(noisy.dt, NOISY_DT);
        noisy.validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut p = FlowParams::for_clauses(10);
        p.gamma = 1.0;
        assert!(p.validate().is_err());
        let mut p = FlowParams::for_clauses(10);
        p.theta = -0.1;
        assert!(p.validate().is_err());
        let mut p = FlowParams::for_clauses(10);
        p.dt = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn set_round_trips_entries() {
        let src = FlowParams::for_clauses(7).with_noise(0.01);
        let mut dst = FlowParams::for_clauses(1);
        for (k, v) in src.entries() {
            assert!(dst.set(k, v));
        }
        assert_eq!(src, dst);
        assert!(!dst.set("nope", 1.0));
    }
}
