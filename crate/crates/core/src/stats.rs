//! Ensemble moments with compensated summation.
//!
//! All estimators are population moments over the ensemble dimension:
//! `E2{a, b} = E{ab} - E{a} E{b}`.

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `E{ab} - E{a}E{b}` over paired samples.
pub fn covariance_e2(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples(a.len()));
    }
    // Shifted two-pass form: a constant series gives an exact zero.
    let n = a.len() as f64;
    let (a0, b0) = (a[0], b[0]);
    let ma = a.iter().map(|x| x - a0).sum::<f64>() / n;
    let mb = b.iter().map(|y| y - b0).sum::<f64>() / n;
    let mut acc = CompensatedSum::default();
    for (&x, &y) in a.iter().zip(b) {
        acc.add((x - a0 - ma) * (y - b0 - mb));
    }
    Ok(acc.value() / n)
}

/// Mergeable first and mixed second moments of one pair of series.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairAccumulator {
    n: usize,
    a: CompensatedSum,
    b: CompensatedSum,
    ab: CompensatedSum,
    aa: CompensatedSum,
}

impl PairAccumulator {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.a.add(x);
        self.b.add(y);
        self.ab.add(x * y);
        self.aa.add(x * x);
    }

    pub fn merge(&mut self, other: &PairAccumulator) {
        self.n += other.n;
        self.a.merge(&other.a);
        self.b.merge(&other.b);
        self.ab.merge(&other.ab);
        self.aa.merge(&other.aa);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// `E2{a, b}`.
    pub fn covariance(&self) -> f64 {
        let n = self.n as f64;
        self.ab.value() / n - (self.a.value() / n) * (self.b.value() / n)
    }

    /// `E2{a}`, computed with the same arithmetic as `covariance` on `(a, a)`.
    pub fn variance_a(&self) -> f64 {
        let n = self.n as f64;
        self.aa.value() / n - (self.a.value() / n) * (self.a.value() / n)
    }
}

/// Means and full covariance matrix of a vector-valued sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    dim: usize,
    n: usize,
    sums: Vec<CompensatedSum>,
    /// Upper triangle including the diagonal, row-major.
    cross: Vec<CompensatedSum>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            dim,
            n: 0,
            sums: vec![CompensatedSum::default(); dim],
            cross: vec![CompensatedSum::default(); dim * (dim + 1) / 2],
        }
    }

    #[inline]
    fn tri(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.n += 1;
        let mut k = 0;
        for i in 0..self.dim {
            self.sums[i].add(x[i]);
            for j in i..self.dim {
                self.cross[k].add(x[i] * x[j]);
                k += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        assert_eq!(self.dim, other.dim);
        self.n += other.n;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            a.merge(b);
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            a.merge(b);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sums[i].value() / self.n as f64
    }

    /// `E2{x_i, x_j}`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let n = self.n as f64;
        self.cross[self.tri(i, j)].value() / n - self.mean(i) * self.mean(j)
    }
}
