//! Self-appraisal states on the probability simplex.

use serde::Serialize;

use crate::error::{Error, Result};

/// Time-stamped self-appraisal vector on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppraisalState {
    t: f64,
    x: Vec<f64>,
    residual: f64,
}

impl AppraisalState {
    /// Accepts `x` if it is within `tol` of the simplex, clamping entries
    /// into `[0, 1]`.
    ///
    /// The residual is the worst of `|sum(x) - 1|`, the most negative entry
    /// and the largest excess over one, measured before clamping.
    pub fn on_simplex(x: Vec<f64>, t: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        if x.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotOnSimplex {
                residual: f64::INFINITY,
            });
        }
        let residual = simplex_residual(&x);
        if residual > tol {
            return Err(Error::NotOnSimplex { residual });
        }
        let x = x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self { t, x, residual })
    }

    /// The vertex `e_i` (zero-based `i`).
    pub fn vertex(n: usize, i: usize, t: f64) -> Self {
        assert!(i < n, "vertex index {i} out of range for n = {n}");
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        Self {
            t,
            x,
            residual: 0.0,
        }
    }

    /// The barycenter `(1/n) 1`.
    pub fn barycenter(n: usize, t: f64) -> Self {
        assert!(n > 0);
        let x = vec![1.0 / n as f64; n];
        let residual = simplex_residual(&x);
        Self { t, x, residual }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Pre-clamp distance from the simplex recorded at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn extremes(&self) -> Extremes {
        Extremes::of(&self.x)
    }

    /// Number of entries above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.x.iter().filter(|&&v| v > threshold).count()
    }

    /// Index of the vertex this state sits on, if any.
    pub fn vertex_index(&self) -> Option<usize> {
        let nonzero: Vec<usize> = (0..self.n()).filter(|&i| self.x[i] != 0.0).collect();
        match nonzero.as_slice() {
            [i] => Some(*i),
            _ => None,
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }
}

/// `max(|sum(x) - 1|, -min(x), max(x) - 1, 0)`.
pub fn simplex_residual(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().sum();
    let mut r = (sum - 1.0).abs();
    for &v in x {
        r = r.max(-v).max(v - 1.0);
    }
    r
}

/// Largest and smallest self-appraisal and their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremes {
    pub h: f64,
    pub l: f64,
    pub v: f64,
}

impl Extremes {
    pub fn of(x: &[f64]) -> Self {
        assert!(!x.is_empty(), "extremes of an empty vector");
        let h = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let l = x.iter().copied().fold(f64::INFINITY, f64::min);
        Self { h, l, v: h - l }
    }
}
