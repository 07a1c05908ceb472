//! Instanton families on low-dimensional flows and their signed
//! intersection numbers.
//!
//! An instanton family is the set of trajectories leaving an unstable
//! critical point `x_b` and landing on a sink `x_a`. Trajectories are
//! labelled by moduli `sigma`, one per unstable direction, through the seed
//!
//! ```text
//! x_cl(0, sigma) = x_b + r * sum_j exp(lambda_j sigma_j) w_j
//! ```
//!
//! with `(lambda_j, w_j)` the unstable eigenpairs. Shifting `sigma_j` by `s`
//! is, to linear order, a time shift of `s` along direction `j`.
//!
//! For observables `(alpha_i, t_i)`, `i = 1..m`, the intersection number
//! counts the moduli where `x_cl^{alpha_i}(t_i, sigma) = 1/2` for every `i`,
//! each weighted by the sign of `det d x_cl^{alpha_i}(t_i) / d sigma_j`.
//! Crossings created by moving the observation times come in pairs of
//! opposite sign, so the signed count does not depend on the times.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THRESHOLD: f64 = 0.5;
pub const CRITICAL_TOL: f64 = 1e-10;
pub const CONVERGENCE_TOL: f64 = 1e-6;
pub const ROOT_TOL: f64 = 1e-10;
pub const TANGENCY_TOL: f64 = 1e-8;
pub const MAX_DIM: usize = 3;

type Point = [f64; MAX_DIM];

/// One monomial `coef * prod_i x_i^powers[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowKind {
    /// `dx_i/dt = x_i (1 - x_i)` in every coordinate.
    LogisticProduct,
    /// Two-dimensional base field `G(x) = L(x) + x1 x2 K (x - a)` with
    /// `L_i = x_i (1 - x_i)` and `a = (1, 1)`, carried through the twist
    /// `T(z) = c + R(twist * psi(|z - c|)) (z - c)` around `c = (1/2, 1/2)`,
    /// `psi(r) = (1 - 4 r^2)^3` inside radius 1/2 and zero outside.
    ///
    /// The Jacobian at `a` is `K - I`, a spiral sink when `K` has complex
    /// eigenvalues with real part below 1. The axes stay invariant and the
    /// origin is a repeller. The twist leaves every critical point and the
    /// boundary of the unit square untouched while folding the threshold
    /// lines inside, which is where crossings of opposite sign are born.
    SpiralSink { k: [[f64; 2]; 2], twist: f64 },
    /// Component `i` of the field is the sum of `terms[i]`.
    Polynomial { terms: Vec<Vec<Monomial>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Sink,
    Repeller,
    Saddle { unstable: usize },
    NonHyperbolic,
}

impl Stability {
    pub fn label(&self) -> String {
        match self {
            Stability::Sink => "sink".into(),
            Stability::Repeller => "repeller".into(),
            Stability::Saddle { unstable } => format!("saddle({unstable})"),
            Stability::NonHyperbolic => "non-hyperbolic".into(),
        }
    }

    pub fn unstable_count(&self, dim: usize) -> usize {
        match self {
            Stability::Sink | Stability::NonHyperbolic => 0,
            Stability::Repeller => dim,
            Stability::Saddle { unstable } => *unstable,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub stability: Stability,
    /// `(re, im)` pairs of the Jacobian spectrum.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// A polynomial vector field in one to three dimensions together with its
/// classified critical points.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyFlow {
    pub dim: usize,
    pub kind: FlowKind,
    pub critical_points: Vec<CriticalPoint>,
}

impl ToyFlow {
    pub fn logistic_product(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let corners = (0..1usize << dim)
            .map(|mask| (0..dim).map(|i| ((mask >> i) & 1) as f64).collect())
            .collect();
        Self::with_points(dim, FlowKind::LogisticProduct, corners)
    }

    /// Spiral sink with rotation matrix `[[0, -omega], [omega, 0]]`.
    pub fn spiral(omega: f64, twist: f64) -> Result<Self> {
        Self::spiral_sink([[0.0, -omega], [omega, 0.0]], twist)
    }

    pub fn spiral_sink(k: [[f64; 2]; 2], twist: f64) -> Result<Self> {
        if !twist.is_finite() {
            return Err(Error::Toy(format!("twist must be finite, got {twist}")));
        }
        let corners = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let flow = Self::with_points(2, FlowKind::SpiralSink { k, twist }, corners)?;
        if flow.critical_points[3].stability != Stability::Sink {
            return Err(Error::Toy(format!(
                "K = {k:?} does not make (1, 1) a sink"
            )));
        }
        Ok(flow)
    }

    /// User field; `critical_points` must be zeros of the field.
    pub fn polynomial(
        dim: usize,
        terms: Vec<Vec<Monomial>>,
        critical_points: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_dim(dim)?;
        if terms.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: terms.len(),
            });
        }
        for m in terms.iter().flatten() {
            if m.powers.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.powers.len(),
                });
            }
        }
        Self::with_points(dim, FlowKind::Polynomial { terms }, critical_points)
    }

    fn with_points(dim: usize, kind: FlowKind, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut flow = ToyFlow {
            dim,
            kind,
            critical_points: Vec::new(),
        };
        for x in points {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            let f = flow.field(&to_point(&x));
            let norm = f[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm < CRITICAL_TOL) {
                return Err(Error::Toy(format!(
                    "{x:?} is not a critical point (|F| = {norm:e})"
                )));
            }
            let cp = flow.classify(&x);
            flow.critical_points.push(cp);
        }
        Ok(flow)
    }

    pub fn field(&self, x: &Point) -> Point {
        let mut f = [0.0; MAX_DIM];
        match &self.kind {
            FlowKind::LogisticProduct => {
                for i in 0..self.dim {
                    f[i] = x[i] * (1.0 - x[i]);
                }
            }
            FlowKind::SpiralSink { k, twist } => {
                f[..2].copy_from_slice(&twisted(*twist, x, |p| spiral_base(k, p)));
            }
            FlowKind::Polynomial { terms } => {
                for (i, comp) in terms.iter().enumerate() {
                    f[i] = comp.iter().map(|m| eval_monomial(m, x)).sum();
                }
            }
        }
        f
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut j = DMatrix::zeros(d, d);
        match &self.kind {
            FlowKind::LogisticProduct => {
                for i in 0..d {
                    j[(i, i)] = 1.0 - 2.0 * x[i];
                }
            }
            FlowKind::SpiralSink { twist, .. } if *twist != 0.0 && in_twist_disk(x) => {
                // Central differences; the twisted field has no compact
                // closed-form derivative.
                let h = 1e-6;
                for c in 0..2 {
                    let mut p = to_point(x);
                    let mut m = to_point(x);
                    p[c] += h;
                    m[c] -= h;
                    let (fp, fm) = (self.field(&p), self.field(&m));
                    for i in 0..2 {
                        j[(i, c)] = (fp[i] - fm[i]) / (2.0 * h);
                    }
                }
            }
            FlowKind::SpiralSink { k, .. } => {
                let y = [x[0] - 1.0, x[1] - 1.0];
                let w = x[0] * x[1];
                let dw = [x[1], x[0]];
                for i in 0..2 {
                    let ky = k[i][0] * y[0] + k[i][1] * y[1];
                    for c in 0..2 {
                        j[(i, c)] = dw[c] * ky + w * k[i][c];
                    }
                    j[(i, i)] += 1.0 - 2.0 * x[i];
                }
            }
            FlowKind::Polynomial { terms } => {
                for (i, comp) in terms.iter().enumerate() {
                    for m in comp {
                        for c in 0..d {
                            let p = m.powers[c];
                            if p == 0 {
                                continue;
                            }
                            let mut dm = m.clone();
                            dm.coef *= p as f64;
                            dm.powers[c] -= 1;
                            j[(i, c)] += eval_monomial(&dm, &to_point(x));
                        }
                    }
                }
            }
        }
        j
    }

    pub fn classify(&self, x: &[f64]) -> CriticalPoint {
        let eig = self.jacobian(x).complex_eigenvalues();
        let eigenvalues: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
        let scale = eigenvalues
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .fold(1.0, f64::max);
        let tol = 1e-9 * scale;
        let stability = if eigenvalues.iter().any(|e| e.0.abs() <= tol) {
            Stability::NonHyperbolic
        } else {
            let unstable = eigenvalues.iter().filter(|e| e.0 > 0.0).count();
            match unstable {
                0 => Stability::Sink,
                u if u == self.dim => Stability::Repeller,
                u => Stability::Saddle { unstable: u },
            }
        };
        CriticalPoint {
            x: x.to_vec(),
            stability,
            eigenvalues,
        }
    }

    pub fn rk4_step(&self, x: &Point, h: f64) -> Point {
        let d = self.dim;
        let k1 = self.field(x);
        let k2 = self.field(&axpy(x, 0.5 * h, &k1, d));
        let k3 = self.field(&axpy(x, 0.5 * h, &k2, d));
        let k4 = self.field(&axpy(x, h, &k3, d));
        let mut out = *x;
        for i in 0..d {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Real unstable eigenpairs at `x`, one eigenvector per unit of
    /// multiplicity.
    pub fn unstable_directions(&self, x: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
        let j = self.jacobian(x);
        let cp = self.classify(x);
        let mut lambdas: Vec<f64> = Vec::new();
        for &(re, im) in &cp.eigenvalues {
            if re > 0.0 {
                if im.abs() > 1e-9 * re.hypot(im) {
                    return Err(Error::Toy(format!(
                        "complex unstable eigenvalue {re} + {im}i at {x:?}"
                    )));
                }
                if !lambdas.iter().any(|l| (l - re).abs() <= 1e-9 * re.max(1.0)) {
                    lambdas.push(re);
                }
            }
        }
        lambdas.sort_by(f64::total_cmp);
        let scale = j.norm().max(1.0);
        let mut out = Vec::new();
        for l in lambdas {
            let shifted = &j - DMatrix::identity(self.dim, self.dim) * l;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            let mut idx: Vec<usize> = (0..self.dim)
                .filter(|&k| svd.singular_values[k] < 1e-8 * scale)
                .collect();
            idx.sort_unstable();
            for k in idx {
                let mut w: Vec<f64> = v_t.row(k).iter().copied().collect();
                // Orient every direction toward the positive orthant.
                let s: f64 = w.iter().sum();
                let pivot = w
                    .iter()
                    .copied()
                    .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                    .unwrap_or(1.0);
                if s < 0.0 || (s == 0.0 && pivot < 0.0) {
                    w.iter_mut().for_each(|c| *c = -*c);
                }
                out.push((l, w));
            }
        }
        let want = cp.stability.unstable_count(self.dim);
        if out.len() != want {
            return Err(Error::Toy(format!(
                "defective Jacobian at {x:?}: {} eigenvectors for {want} unstable eigenvalues",
                out.len()
            )));
        }
        // Deterministic order of repeated-eigenvalue bases: canonical axes first.
        out.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let ka = a.1.iter().map(|c| c.abs()).enumerate().max_by(|x, y| x.1.total_cmp(&y.1));
                let kb = b.1.iter().map(|c| c.abs()).enumerate().max_by(|x, y| x.1.total_cmp(&y.1));
                ka.map(|k| k.0).cmp(&kb.map(|k| k.0))
            })
        });
        Ok(out)
    }

    /// Indices of the unique repeller and the unique sink.
    pub fn default_endpoints(&self) -> Result<(usize, usize)> {
        let pick = |want: Stability| {
            let found: Vec<usize> = self
                .critical_points
                .iter()
                .enumerate()
                .filter(|(_, c)| c.stability == want)
                .map(|(i, _)| i)
                .collect();
            match found.as_slice() {
                [i] => Ok(*i),
                _ => Err(Error::Toy(format!(
                    "expected exactly one {}, found {}",
                    want.label(),
                    found.len()
                ))),
            }
        };
        Ok((pick(Stability::Repeller)?, pick(Stability::Sink)?))
    }
}

fn spiral_base(k: &[[f64; 2]; 2], x: &[f64]) -> [f64; 2] {
    let y = [x[0] - 1.0, x[1] - 1.0];
    let w = x[0] * x[1];
    let mut g = [0.0; 2];
    for i in 0..2 {
        g[i] = x[i] * (1.0 - x[i]) + w * (k[i][0] * y[0] + k[i][1] * y[1]);
    }
    g
}

const TWIST_RADIUS: f64 = 0.5;

fn in_twist_disk(x: &[f64]) -> bool {
    (x[0] - 0.5).hypot(x[1] - 0.5) < TWIST_RADIUS
}

fn rotate(theta: f64, y: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * y[0] - s * y[1], s * y[0] + c * y[1]]
}

/// Field of the base flow `G` pushed forward by the twist: `DT(z) G(z)`
/// with `z = T^{-1}(x)`. The twist keeps radii about the center, so the
/// inverse is the opposite rotation at the same radius.
fn twisted(twist: f64, x: &Point, base: impl Fn(&[f64]) -> [f64; 2]) -> [f64; 2] {
    if twist == 0.0 || !in_twist_disk(x) {
        return base(&x[..2]);
    }
    let xc = [x[0] - 0.5, x[1] - 0.5];
    let r2 = xc[0] * xc[0] + xc[1] * xc[1];
    let s = 1.0 - 4.0 * r2;
    let theta = twist * s.powi(3);
    let y = rotate(-theta, xc);
    let g = base(&[y[0] + 0.5, y[1] + 0.5]);
    // DT = R(theta) + (J R(theta) y) grad(theta)^T, grad(theta) = -24 twist s^2 y.
    let ry = rotate(theta, y);
    let jry = [-ry[1], ry[0]];
    let grad = [-24.0 * twist * s * s * y[0], -24.0 * twist * s * s * y[1]];
    let rg = rotate(theta, g);
    let dot = grad[0] * g[0] + grad[1] * g[1];
    [rg[0] + jry[0] * dot, rg[1] + jry[1] * dot]
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::Toy(format!("dimension must be 1 to {MAX_DIM}, got {dim}")));
    }
    Ok(())
}

fn to_point(x: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[..x.len()].copy_from_slice(x);
    p
}

fn axpy(x: &Point, a: f64, y: &Point, d: usize) -> Point {
    let mut out = *x;
    for i in 0..d {
        out[i] += a * y[i];
    }
    out
}

fn eval_monomial(m: &Monomial, x: &Point) -> f64 {
    m.powers
        .iter()
        .enumerate()
        .fold(m.coef, |acc, (i, &p)| acc * x[i].powi(p as i32))
}

/// Moduli grid and integration settings for an instanton family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Grid points per moduli axis.
    pub points: usize,
    pub r: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Critical point indices; the unique repeller and sink by default.
    pub start: Option<usize>,
    pub end: Option<usize>,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            sigma_lo: -8.0,
            sigma_hi: 6.0,
            points: 57,
            r: 1e-4,
            dt: 0.01,
            horizon: 40.0,
            start: None,
            end: None,
        }
    }
}

impl FamilySpec {
    pub fn spacing(&self) -> f64 {
        (self.sigma_hi - self.sigma_lo) / (self.points - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        let ok = self.sigma_lo.is_finite()
            && self.sigma_hi.is_finite()
            && self.sigma_hi > self.sigma_lo
            && self.points >= 2
            && self.r > 0.0
            && self.dt > 0.0
            && self.horizon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Toy(format!("invalid family spec {self:?}")))
        }
    }
}

/// Trajectories from `x_b` to `x_a` indexed by a rectangular moduli grid.
#[derive(Clone, Debug)]
pub struct InstantonFamily {
    pub flow: ToyFlow,
    pub spec: FamilySpec,
    pub x_b: Vec<f64>,
    pub x_a: Vec<f64>,
    /// Unstable eigenpairs at `x_b`, one per moduli coordinate.
    pub directions: Vec<(f64, Vec<f64>)>,
    /// Latest time any grid trajectory needed to settle within tolerance.
    pub settle_time: f64,
}

/// Tolerance on the distance between a seed and the unstable manifold
/// of a saddle; seeds further out leave the linear regime.
const SEED_RADIUS_SADDLE: f64 = 1e-3;

pub fn build_instanton_family(flow: &ToyFlow, spec: &FamilySpec) -> Result<InstantonFamily> {
    spec.validate()?;
    let (b_def, a_def) = match (spec.start, spec.end) {
        (Some(b), Some(a)) => (b, a),
        _ => flow.default_endpoints()?,
    };
    let b = spec.start.unwrap_or(b_def);
    let a = spec.end.unwrap_or(a_def);
    let cps = &flow.critical_points;
    let (cb, ca) = match (cps.get(b), cps.get(a)) {
        (Some(cb), Some(ca)) => (cb, ca),
        _ => return Err(Error::Toy(format!("critical point index out of range ({b}, {a})"))),
    };
    if ca.stability != Stability::Sink {
        return Err(Error::Toy(format!("end point {:?} is not a sink", ca.x)));
    }
    if !matches!(cb.stability, Stability::Repeller | Stability::Saddle { .. }) {
        return Err(Error::Toy(format!("start point {:?} has no unstable direction", cb.x)));
    }
    let directions = flow.unstable_directions(&cb.x)?;
    if let Stability::Saddle { .. } = cb.stability {
        let reach = directions
            .iter()
            .map(|(l, _)| spec.r * (l * spec.sigma_hi).exp())
            .sum::<f64>();
        if reach > SEED_RADIUS_SADDLE {
            return Err(Error::Toy(format!(
                "seeds reach {reach:e} from the saddle; lower sigma_hi or r"
            )));
        }
    }
    let mut family = InstantonFamily {
        flow: flow.clone(),
        spec: spec.clone(),
        x_b: cb.x.clone(),
        x_a: ca.x.clone(),
        directions,
        settle_time: 0.0,
    };
    let settle: Vec<Result<f64>> = (0..family.num_nodes())
        .into_par_iter()
        .map(|k| family.settle_time_of(&family.node_sigma(k)))
        .collect();
    let mut worst: f64 = 0.0;
    for s in settle {
        worst = worst.max(s?);
    }
    family.settle_time = worst;
    Ok(family)
}

impl InstantonFamily {
    pub fn moduli_dim(&self) -> usize {
        self.directions.len()
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spec.spacing();
        (0..self.spec.points)
            .map(|k| self.spec.sigma_lo + k as f64 * h)
            .collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.spec.points.pow(self.moduli_dim() as u32)
    }

    fn node_index(&self, k: usize) -> Vec<usize> {
        let n = self.spec.points;
        let mut idx = Vec::with_capacity(self.moduli_dim());
        let mut k = k;
        for _ in 0..self.moduli_dim() {
            idx.push(k % n);
            k /= n;
        }
        idx
    }

    pub fn node_sigma(&self, k: usize) -> Vec<f64> {
        let h = self.spec.spacing();
        self.node_index(k)
            .iter()
            .map(|&i| self.spec.sigma_lo + i as f64 * h)
            .collect()
    }

    pub fn seed(&self, sigma: &[f64]) -> Vec<f64> {
        let mut x = self.x_b.clone();
        for ((l, w), s) in self.directions.iter().zip(sigma) {
            let c = self.spec.r * (l * s).exp();
            for (xi, wi) in x.iter_mut().zip(w) {
                *xi += c * wi;
            }
        }
        x
    }

    /// States at the requested times (any order, non-negative).
    pub fn states_at(&self, sigma: &[f64], times: &[f64]) -> Vec<Vec<f64>> {
        let d = self.flow.dim;
        let h = self.spec.dt;
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out = vec![Vec::new(); times.len()];
        let mut x = to_point(&self.seed(sigma));
        let mut steps: u64 = 0;
        for k in order {
            let target = times[k];
            while (steps + 1) as f64 * h <= target + 1e-12 {
                x = self.flow.rk4_step(&x, h);
                steps += 1;
            }
            let rest = target - steps as f64 * h;
            let y = if rest > 0.0 { self.flow.rk4_step(&x, rest) } else { x };
            out[k] = y[..d].to_vec();
        }
        out
    }

    pub fn state_at(&self, sigma: &[f64], t: f64) -> Vec<f64> {
        self.states_at(sigma, &[t]).remove(0)
    }

    /// First multiple of `dt` at which the trajectory is within tolerance
    /// of the sink. Inside that ball the linearization governs, so the
    /// trajectory does not leave again.
    fn settle_time_of(&self, sigma: &[f64]) -> Result<f64> {
        let h = self.spec.dt;
        let n = (self.spec.horizon / h).floor() as u64;
        let mut x = to_point(&self.seed(sigma));
        for step in 1..=n {
            x = self.flow.rk4_step(&x, h);
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::Toy(format!("trajectory at sigma = {sigma:?} diverged")));
            }
            if self.distance_to_end(&x) < CONVERGENCE_TOL {
                return Ok(step as f64 * h);
            }
        }
        Err(Error::Toy(format!(
            "trajectory at sigma = {sigma:?} is {:e} from the sink at the horizon {}",
            self.distance_to_end(&x),
            self.spec.horizon
        )))
    }

    fn distance_to_end(&self, x: &Point) -> f64 {
        self.x_a
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `x^{alpha_i}(t_i, sigma) - 1/2` for each observable.
    pub fn observe(&self, obs: &Observables, sigma: &[f64]) -> Vec<f64> {
        let states = self.states_at(sigma, &obs.times);
        obs.literals
            .iter()
            .zip(&states)
            .map(|(&a, x)| x[a] - THRESHOLD)
            .collect()
    }

    /// Central finite-difference Jacobian of the observables in sigma.
    pub fn observable_jacobian(&self, obs: &Observables, sigma: &[f64], step: f64) -> DMatrix<f64> {
        let m = self.moduli_dim();
        let mut j = DMatrix::zeros(m, m);
        for c in 0..m {
            let mut plus = sigma.to_vec();
            let mut minus = sigma.to_vec();
            plus[c] += step;
            minus[c] -= step;
            let fp = self.observe(obs, &plus);
            let fm = self.observe(obs, &minus);
            for r in 0..m {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        j
    }

    /// Trajectories of the given moduli as CSV: `run,s1..,t,x1..`.
    pub fn trajectories_csv(&self, sigmas: &[Vec<f64>], t_step: f64, t_end: f64) -> String {
        let m = self.moduli_dim();
        let d = self.flow.dim;
        let mut out = String::from("run");
        (1..=m).for_each(|j| write!(out, ",s{j}").unwrap());
        out.push_str(",t");
        (1..=d).for_each(|i| write!(out, ",x{i}").unwrap());
        out.push('\n');
        let n = (t_end / t_step).floor() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * t_step).collect();
        for (run, sigma) in sigmas.iter().enumerate() {
            for (t, x) in times.iter().zip(self.states_at(sigma, &times)) {
                write!(out, "{run}").unwrap();
                sigma.iter().for_each(|s| write!(out, ",{s}").unwrap());
                write!(out, ",{t}").unwrap();
                x.iter().for_each(|v| write!(out, ",{v}").unwrap());
                out.push('\n');
            }
        }
        out
    }
}

/// Coordinates `literals[i]` observed at `times[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub literals: Vec<usize>,
    pub times: Vec<f64>,
}

impl Observables {
    pub fn new(literals: Vec<usize>, times: Vec<f64>) -> Self {
        Observables { literals, times }
    }

    fn check(&self, family: &InstantonFamily) -> Result<()> {
        let m = family.moduli_dim();
        if self.literals.len() != m || self.times.len() != m {
            return Err(Error::Toy(format!(
                "need {m} observables for {m} moduli, got {} literals and {} times",
                self.literals.len(),
                self.times.len()
            )));
        }
        if let Some(&a) = self.literals.iter().find(|&&a| a >= family.flow.dim) {
            return Err(Error::Toy(format!("literal {a} outside dimension {}", family.flow.dim)));
        }
        if let Some(t) = self.times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Toy(format!("observation time {t} must be finite and non-negative")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    pub sigma: Vec<f64>,
    pub det: f64,
    pub sign: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub crossings: Vec<Crossing>,
    pub warnings: Vec<String>,
}

impl Intersection {
    pub fn value(&self) -> i64 {
        self.crossings.iter().map(|c| c.sign).sum()
    }

    pub fn raw_count(&self) -> usize {
        self.crossings.len()
    }
}

/// Observable values on every grid node.
fn grid_values(family: &InstantonFamily, obs: &Observables) -> Vec<Vec<f64>> {
    (0..family.num_nodes())
        .into_par_iter()
        .map(|k| family.observe(obs, &family.node_sigma(k)))
        .collect()
}

/// Signed count of moduli where every observable sits on the threshold.
///
/// Candidates come from piecewise-linear interpolation over the Kuhn
/// triangulation of the moduli grid, refined by bisection (one modulus) or
/// Newton iteration, and signed by a central-difference Jacobian with step
/// `spacing / 100`.
pub fn intersection_number(family: &InstantonFamily, obs: &Observables) -> Result<Intersection> {
    obs.check(family)?;
    let values = grid_values(family, obs);
    locate(family, obs, &values)
}

fn locate(family: &InstantonFamily, obs: &Observables, values: &[Vec<f64>]) -> Result<Intersection> {
    let m = family.moduli_dim();
    let spacing = family.spec.spacing();
    let lo = family.spec.sigma_lo;
    let hi = family.spec.sigma_hi;
    let mut search = Search {
        family,
        obs,
        perms: permutations(m),
        roots: Vec::new(),
        warnings: Vec::new(),
    };
    let top = Patch {
        origin: vec![lo; m],
        h: spacing,
        cells: family.spec.points - 1,
        values: values.to_vec(),
    };
    search.patch(&top, REFINE_DEPTH);
    let Search {
        mut roots,
        mut warnings,
        ..
    } = search;

    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut crossings = Vec::with_capacity(roots.len());
    for sigma in roots {
        let det = family
            .observable_jacobian(obs, &sigma, spacing / 100.0)
            .determinant();
        if !(det.abs() >= TANGENCY_TOL) {
            return Err(Error::Tangency { sigma, det });
        }
        if sigma.iter().any(|&s| s - lo < spacing || hi - s < spacing) {
            warnings.push(format!(
                "crossing at sigma = {sigma:?} lies within one grid spacing of the moduli boundary"
            ));
        }
        crossings.push(Crossing {
            sigma,
            det,
            sign: if det > 0.0 { 1 } else { -1 },
        });
    }
    if crossings.is_empty() {
        warnings.push(format!(
            "no threshold crossing on the moduli grid at t = {:?}: observation time is outside the convergence window",
            obs.times
        ));
    }
    if obs.times.iter().any(|&t| t >= family.settle_time) {
        warnings.push(format!(
            "t = {:?} reaches the settle time {} of the family",
            obs.times, family.settle_time
        ));
    }
    Ok(Intersection {
        crossings,
        warnings,
    })
}

/// Levels of local subdivision tried when a candidate cannot be refined
/// inside its own cell.
const REFINE_DEPTH: u32 = 2;
const REFINE_SPLIT: usize = 4;
/// Slack, in cell widths, for a refined root to count as its cell's own.
const CELL_MARGIN: f64 = 0.25;

/// Axis-aligned block of `cells^m` grid cells with observable values on its
/// `(cells + 1)^m` nodes, first axis fastest.
struct Patch {
    origin: Vec<f64>,
    h: f64,
    cells: usize,
    values: Vec<Vec<f64>>,
}

impl Patch {
    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * (self.cells + 1) + i)
    }

    fn sigma(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + i as f64 * self.h)
            .collect()
    }
}

struct Search<'a> {
    family: &'a InstantonFamily,
    obs: &'a Observables,
    perms: Vec<Vec<usize>>,
    roots: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

impl Search<'_> {
    fn push_root(&mut self, s: Vec<f64>) {
        let lo = self.family.spec.sigma_lo;
        let hi = self.family.spec.sigma_hi;
        if s.iter().any(|&x| x < lo - 1e-9 || x > hi + 1e-9) {
            return;
        }
        let dup = self
            .roots
            .iter()
            .any(|r| r.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-7);
        if !dup {
            self.roots.push(s);
        }
    }

    /// Piecewise-linear candidates over the Kuhn simplices of every cell.
    /// With two or more moduli, any cell where every observable changes sign
    /// across its corners is subdivided until `depth` runs out, so that close
    /// pairs of opposite-sign roots are not merged by the interpolant.
    fn patch(&mut self, p: &Patch, depth: u32) {
        let m = p.origin.len();
        let perms = std::mem::take(&mut self.perms);
        for cell in 0..p.cells.pow(m as u32) {
            let mut base = Vec::with_capacity(m);
            let mut c = cell;
            for _ in 0..m {
                base.push(c % p.cells);
                c /= p.cells;
            }
            let corner_values = || {
                (0..1usize << m).map(|bits| {
                    let idx: Vec<usize> = (0..m).map(|j| base[j] + (bits >> j & 1)).collect();
                    &p.values[p.flat(&idx)]
                })
            };
            let straddles = (0..p.values.first().map_or(0, Vec::len)).all(|r| {
                let (min, max) = corner_values().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v[r]), b.max(v[r])));
                let slack = if m >= 2 && depth == REFINE_DEPTH { 0.5 * (max - min) } else { 0.0 };
                min <= slack && max >= -slack
            });
            if !straddles {
                continue;
            }
            if m >= 2 && depth > 0 {
                self.subdivide(p, &base, &perms, depth);
                continue;
            }
            for perm in &perms {
                let mut verts = vec![base.clone()];
                for &axis in perm {
                    let mut next = verts.last().unwrap().clone();
                    next[axis] += 1;
                    verts.push(next);
                }
                let vals: Vec<&[f64]> = verts.iter().map(|v| &p.values[p.flat(v)][..]).collect();
                let Some(lambda) = barycentric_zero(&vals) else {
                    continue;
                };
                if lambda.iter().any(|&l| l < -1e-12) {
                    continue;
                }
                let corners: Vec<Vec<f64>> = verts.iter().map(|v| p.sigma(v)).collect();
                let guess: Vec<f64> = (0..m)
                    .map(|j| lambda.iter().zip(&corners).map(|(l, c)| l * c[j]).sum())
                    .collect();
                if m == 1 {
                    let root = bisect(self.family, self.obs, corners[0][0], corners[0][0] + p.h);
                    self.push_root(root);
                    continue;
                }
                let cell_lo = &corners[0];
                let in_cell = |s: &[f64]| {
                    s.iter()
                        .zip(cell_lo)
                        .all(|(x, a)| *x >= a - CELL_MARGIN * p.h && *x <= a + (1.0 + CELL_MARGIN) * p.h)
                };
                match newton(self.family, self.obs, guess.clone(), p.h / 100.0) {
                    Some(s) if in_cell(&s) => self.push_root(s),
                    _ => self
                        .warnings
                        .push(format!("unresolved crossing candidate near sigma = {guess:?}; refine the moduli grid")),
                }
            }
        }
        self.perms = perms;
    }

    fn subdivide(&mut self, p: &Patch, base: &[usize], perms: &[Vec<usize>], depth: u32) {
        let m = base.len();
        let sub = Patch {
            origin: p.sigma(base),
            h: p.h / REFINE_SPLIT as f64,
            cells: REFINE_SPLIT,
            values: Vec::new(),
        };
        let values = (0..(REFINE_SPLIT + 1).pow(m as u32))
            .map(|k| {
                let idx: Vec<usize> = (0..m).map(|j| k / (REFINE_SPLIT + 1).pow(j as u32) % (REFINE_SPLIT + 1)).collect();
                self.family.observe(self.obs, &sub.sigma(&idx))
            })
            .collect();
        self.perms = perms.to_vec();
        self.patch(&Patch { values, ..sub }, depth - 1);
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Barycentric coordinates of the zero of the affine interpolant through
/// `m + 1` vertex values in `R^m`.
fn barycentric_zero(vals: &[&[f64]]) -> Option<Vec<f64>> {
    let n = vals.len();
    let m = n - 1;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (c, v) in vals.iter().enumerate() {
        for r in 0..m {
            a[(r, c)] = v[r];
        }
        a[(m, c)] = 1.0;
    }
    b[m] = 1.0;
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

fn bisect(family: &InstantonFamily, obs: &Observables, mut a: f64, mut b: f64) -> Vec<f64> {
    let mut fa = family.observe(obs, &[a])[0];
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = family.observe(obs, &[mid])[0];
        if fm.abs() <= ROOT_TOL || b - a <= 1e-14 {
            return vec![mid];
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    vec![0.5 * (a + b)]
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn newton(family: &InstantonFamily, obs: &Observables, mut s: Vec<f64>, fd: f64) -> Option<Vec<f64>> {
    let mut f = family.observe(obs, &s);
    for _ in 0..60 {
        if sup(&f) <= ROOT_TOL {
            return Some(s);
        }
        let j = family.observable_jacobian(obs, &s, fd);
        let rhs = -DVector::from_column_slice(&f);
        let delta = j.lu().solve(&rhs)?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = s.iter().zip(delta.iter()).map(|(a, d)| a + step * d).collect();
            let ft = family.observe(obs, &trial);
            if sup(&ft) < sup(&f) {
                s = trial;
                f = ft;
                break;
            }
            step *= 0.5;
            if step < 1e-6 {
                return None;
            }
        }
    }
    (sup(&f) <= ROOT_TOL).then_some(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanEntry {
    pub times: Vec<f64>,
    pub result: std::result::Result<Intersection, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub literals: Vec<usize>,
    pub entries: Vec<ScanEntry>,
}

impl ScanReport {
    pub fn values(&self) -> BTreeSet<i64> {
        self.entries
            .iter()
            .filter_map(|e| e.result.as_ref().ok().map(Intersection::value))
            .collect()
    }

    pub fn raw_counts(&self) -> BTreeSet<usize> {
        self.entries
            .iter()
            .filter_map(|e| e.result.as_ref().ok().map(Intersection::raw_count))
            .collect()
    }

    pub fn tangency_errors(&self) -> Vec<(&[f64], &str)> {
        self.entries
            .iter()
            .filter_map(|e| e.result.as_ref().err().map(|m| (&e.times[..], m.as_str())))
            .collect()
    }

    pub fn warnings(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter_map(|e| e.result.as_ref().ok())
            .flat_map(|r| r.warnings.iter().map(String::as_str))
            .collect()
    }

    /// Line-oriented report: one `times` block per entry, then totals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "literals = {:?}", self.literals).unwrap();
        for e in &self.entries {
            writeln!(out, "times = {:?}", e.times).unwrap();
            match &e.result {
                Ok(r) => {
                    for c in &r.crossings {
                        writeln!(out, "  crossing sigma = {:?} det = {:e} sign = {:+}", c.sigma, c.det, c.sign)
                            .unwrap();
                    }
                    writeln!(out, "  raw_count = {}", r.raw_count()).unwrap();
                    writeln!(out, "  signed_sum = {}", r.value()).unwrap();
                    for w in &r.warnings {
                        writeln!(out, "  warning: {w}").unwrap();
                    }
                }
                Err(msg) => writeln!(out, "  error: {msg}").unwrap(),
            }
        }
        writeln!(out, "values = {:?}", self.values()).unwrap();
        writeln!(out, "raw_counts = {:?}", self.raw_counts()).unwrap();
        writeln!(out, "tangency_errors = {}", self.tangency_errors().len()).unwrap();
        out
    }
}

/// Intersection numbers over a list of observation-time tuples. Errors
/// from individual tuples are collected in the report.
pub fn invariance_scan(
    family: &InstantonFamily,
    literals: &[usize],
    time_grid: &[Vec<f64>],
) -> ScanReport {
    // One integration per grid node serves every tuple of the scan.
    let mut all: Vec<f64> = time_grid.iter().flatten().copied().filter(|t| t.is_finite()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let states: Vec<Vec<Vec<f64>>> = (0..family.num_nodes())
        .into_par_iter()
        .map(|k| family.states_at(&family.node_sigma(k), &all))
        .collect();
    let entries = time_grid
        .iter()
        .map(|times| {
            let obs = Observables::new(literals.to_vec(), times.clone());
            let result = obs.check(family).and_then(|()| {
                let slots: Vec<usize> = times
                    .iter()
                    .map(|t| all.binary_search_by(|x| x.total_cmp(t)).expect("time collected above"))
                    .collect();
                let values: Vec<Vec<f64>> = states
                    .iter()
                    .map(|node| {
                        literals
                            .iter()
                            .zip(&slots)
                            .map(|(&a, &k)| node[k][a] - THRESHOLD)
                            .collect()
                    })
                    .collect();
                locate(family, &obs, &values)
            });
            ScanEntry {
                times: times.clone(),
                result: result.map_err(|e| e.to_string()),
            }
        })
        .collect();
    ScanReport {
        literals: literals.to_vec(),
        entries,
    }
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic_1d() -> InstantonFamily {
        build_instanton_family(&ToyFlow::logistic_product(1).unwrap(), &FamilySpec::default()).unwrap()
    }

    /// Crossing modulus of the 1D logistic from its closed form
    /// `x(t) = 1 / (1 + (1/x0 - 1) e^{-t})` with `x0 = r e^sigma`.
    fn closed_form_sigma(r: f64, t: f64) -> f64 {
        (1.0 / (r * (1.0 + t.exp()))).ln()
    }

    #[test]
    fn logistic_critical_points() {
        let f = ToyFlow::logistic_product(2).unwrap();
        let labels: Vec<String> = f.critical_points.iter().map(|c| c.stability.label()).collect();
        assert_eq!(labels, ["repeller", "saddle(1)", "saddle(1)", "sink"]);
        assert_eq!(f.default_endpoints().unwrap(), (0, 3));
    }

    #[test]
    fn spiral_critical_points() {
        let f = ToyFlow::spiral(3.0, 0.0).unwrap();
        let sink = &f.critical_points[3];
        assert_eq!(sink.stability, Stability::Sink);
        for &(re, im) in &sink.eigenvalues {
            assert!((re + 1.0).abs() < 1e-12 && (im.abs() - 3.0).abs() < 1e-12);
        }
        assert_eq!(f.critical_points[0].stability, Stability::Repeller);
        assert_eq!(f.critical_points[1].stability, Stability::Saddle { unstable: 1 });
    }

    #[test]
    fn rejects_non_critical_points() {
        let terms = vec![vec![Monomial { coef: 1.0, powers: vec![1] }, Monomial { coef: -1.0, powers: vec![0] }]];
        assert!(ToyFlow::polynomial(1, terms.clone(), vec![vec![1.0]]).is_ok());
        assert!(matches!(ToyFlow::polynomial(1, terms, vec![vec![0.5]]), Err(Error::Toy(_))));
        assert!(ToyFlow::logistic_product(4).is_err());
        assert!(ToyFlow::spiral_sink([[2.0, 0.0], [0.0, 2.0]], 0.0).is_err());
    }

    #[test]
    fn polynomial_matches_builtin_logistic() {
        let terms = vec![vec![
            Monomial { coef: 1.0, powers: vec![1] },
            Monomial { coef: -1.0, powers: vec![2] },
        ]];
        let p = ToyFlow::polynomial(1, terms, vec![vec![0.0], vec![1.0]]).unwrap();
        let l = ToyFlow::logistic_product(1).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((p.field(&[x, 0.0, 0.0])[0] - l.field(&[x, 0.0, 0.0])[0]).abs() < 1e-15);
            assert!((p.jacobian(&[x])[(0, 0)] - l.jacobian(&[x])[(0, 0)]).abs() < 1e-15);
        }
    }

    #[test]
    fn logistic_trajectory_matches_closed_form() {
        let fam = logistic_1d();
        for (sigma, t) in [(-3.0, 5.0), (0.0, 9.2), (4.0, 12.0)] {
            let x0 = 1e-4 * f64::exp(sigma);
            let exact = 1.0 / (1.0 + (1.0 / x0 - 1.0) * (-t as f64).exp());
            assert!((fam.state_at(&[sigma], t)[0] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn logistic_crossing_matches_closed_form() {
        let fam = logistic_1d();
        for t in [4.0, 7.5, 11.0, 15.0] {
            let r = intersection_number(&fam, &Observables::new(vec![0], vec![t])).unwrap();
            assert_eq!(r.raw_count(), 1);
            assert_eq!(r.value(), 1);
            assert!((r.crossings[0].sigma[0] - closed_form_sigma(1e-4, t)).abs() < 1e-6);
        }
    }

    #[test]
    fn product_signs_follow_observable_order() {
        let spec = FamilySpec {
            points: 15,
            ..FamilySpec::default()
        };
        let fam = build_instanton_family(&ToyFlow::logistic_product(2).unwrap(), &spec).unwrap();
        // d x^i / d sigma_j is diagonal and positive: det > 0 in natural
        // order, det < 0 when the observables are swapped.
        let straight = intersection_number(&fam, &Observables::new(vec![0, 1], vec![6.0, 9.0])).unwrap();
        assert_eq!((straight.raw_count(), straight.value()), (1, 1));
        let c = &straight.crossings[0];
        assert!((c.sigma[0] - closed_form_sigma(1e-4, 6.0)).abs() < 1e-6);
        assert!((c.sigma[1] - closed_form_sigma(1e-4, 9.0)).abs() < 1e-6);
        let swapped = intersection_number(&fam, &Observables::new(vec![1, 0], vec![6.0, 9.0])).unwrap();
        assert_eq!((swapped.raw_count(), swapped.value()), (1, -1));
    }

    #[test]
    fn out_of_window_gives_zero_with_warning() {
        let fam = logistic_1d();
        for t in [0.0, 45.0] {
            let r = intersection_number(&fam, &Observables::new(vec![0], vec![t])).unwrap();
            assert_eq!(r.value(), 0);
            assert!(r.warnings.iter().any(|w| w.contains("outside the convergence window")));
        }
    }

    #[test]
    fn observable_count_must_match_moduli() {
        let fam = logistic_1d();
        assert!(intersection_number(&fam, &Observables::new(vec![0, 0], vec![1.0, 2.0])).is_err());
        assert!(intersection_number(&fam, &Observables::new(vec![1], vec![1.0])).is_err());
    }

    #[test]
    fn non_convergence_is_an_error() {
        let spec = FamilySpec {
            horizon: 10.0,
            ..FamilySpec::default()
        };
        assert!(matches!(
            build_instanton_family(&ToyFlow::logistic_product(1).unwrap(), &spec),
            Err(Error::Toy(_))
        ));
    }

    #[test]
    fn kuhn_simplices_cover_the_cube() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(2).len(), 2);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn twist_keeps_critical_points_and_square_edges() {
        let f = ToyFlow::spiral(0.5, 6.0).unwrap();
        for c in &f.critical_points {
            let v = f.field(&to_point(&c.x));
            assert!(v.iter().all(|x| x.abs() < 1e-14), "{:?}", c.x);
        }
        for s in linspace(0.0, 1.0, 11) {
            assert!(f.field(&[s, 0.0, 0.0])[1].abs() < 1e-14);
            assert!(f.field(&[0.0, s, 0.0])[0].abs() < 1e-14);
        }
        // Outside the twist disk the field is the untwisted one.
        let g = ToyFlow::spiral(0.5, 0.0).unwrap();
        let far = [0.95, 0.97, 0.0];
        assert_eq!(f.field(&far), g.field(&far));
        let sink = &f.critical_points[3];
        for &(re, im) in &sink.eigenvalues {
            assert!((re + 1.0).abs() < 1e-12 && (im.abs() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn spiral_signed_count_survives_pair_creation() {
        let spec = FamilySpec {
            sigma_lo: -6.0,
            sigma_hi: 4.0,
            points: 21,
            ..FamilySpec::default()
        };
        let fam = build_instanton_family(&ToyFlow::spiral(0.5, 6.0).unwrap(), &spec).unwrap();
        let grid: Vec<Vec<f64>> = linspace(8.5, 11.5, 8).into_iter().map(|t| vec![t, 10.0]).collect();
        let rep = invariance_scan(&fam, &[0, 1], &grid);
        assert_eq!(rep.values(), BTreeSet::from([1]));
        assert!(rep.raw_counts().len() >= 2, "{:?}", rep.raw_counts());
        for e in &rep.entries {
            let r = e.result.as_ref().unwrap();
            assert_eq!(r.crossings.iter().filter(|c| c.sign > 0).count(), r.crossings.iter().filter(|c| c.sign < 0).count() + 1);
        }
    }

    #[test]
    fn scan_report_text() {
        let fam = logistic_1d();
        let grid: Vec<Vec<f64>> = [5.0, 10.0].iter().map(|&t| vec![t]).collect();
        let rep = invariance_scan(&fam, &[0], &grid);
        assert_eq!(rep.values(), BTreeSet::from([1]));
        let text = rep.to_text();
        assert!(text.contains("signed_sum = 1"));
        assert!(text.ends_with("tangency_errors = 0\n"));
    }
}
