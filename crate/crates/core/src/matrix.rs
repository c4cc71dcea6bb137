//! Relative interaction matrices.
//!
//! A relative interaction matrix is an `n x n` nonnegative matrix with zero
//! diagonal whose rows each sum to one. Entry `c_ij` is the weight individual
//! `i` places on its outgoing neighbor `j`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Default tolerance for row and column sum checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A validated zero-diagonal row-stochastic matrix, stored dense row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionMatrix {
    n: usize,
    weights: Vec<f64>,
    doubly_stochastic: bool,
    gamma: f64,
}

impl InteractionMatrix {
    /// Validates `rows` as a relative interaction matrix.
    ///
    /// Rows are never renormalized: every row must already sum to one within
    /// `tol`. The doubly-stochastic flag uses the same tolerance on columns.
    pub fn new(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(n, flat, tol)
    }

    /// Same as [`InteractionMatrix::new`] for a flat row-major buffer.
    pub fn from_row_major(n: usize, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance(tol));
        }
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: weights.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if !w.is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
                if w < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: w,
                    });
                }
            }
            let diag = weights[i * n + i];
            if diag != 0.0 {
                return Err(Error::NonzeroDiagonal {
                    row: i,
                    value: diag,
                });
            }
        }
        for i in 0..n {
            let deviation = weights[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0;
            if deviation.abs() > tol {
                return Err(Error::RowSumViolation { row: i, deviation });
            }
        }

        let doubly_stochastic = columns_stochastic(n, &weights, tol);
        // Every row has a positive entry once the row sum check passed.
        let gamma = weights
            .iter()
            .copied()
            .filter(|&w| w > 0.0)
            .fold(f64::INFINITY, f64::min);

        Ok(Self {
            n,
            weights,
            doubly_stochastic,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `c_ij`, zero-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.weights
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Whether every column also sums to one (within the construction tolerance).
    pub fn is_doubly_stochastic(&self) -> bool {
        self.doubly_stochastic
    }

    /// Re-evaluates the column-sum condition under a different tolerance.
    pub fn is_doubly_stochastic_within(&self, tol: f64) -> bool {
        columns_stochastic(self.n, &self.weights, tol)
    }

    /// Smallest nonzero entry.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Largest deviation of a column sum from one.
    pub fn max_column_deviation(&self) -> f64 {
        (0..self.n)
            .map(|j| (self.column_sum(j) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// Row vector times matrix: `(v^T C)_j = sum_i v_i c_ij`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] * self.get(i, j)).sum())
            .collect()
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(c, x)| c * x).sum())
            .collect()
    }

    /// Directed graph with an arc `i -> j` for every positive `c_ij`.
    pub fn support_graph(&self) -> DirectedGraph {
        let mut g = DirectedGraph::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) > 0.0 {
                    g.add_arc(i, j);
                }
            }
        }
        g
    }
}

fn columns_stochastic(n: usize, weights: &[f64], tol: f64) -> bool {
    (0..n).all(|j| {
        let s: f64 = (0..n).map(|i| weights[i * n + j]).sum();
        (s - 1.0).abs() <= tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.75, 0.0, 0.25],
            vec![0.25, 0.0, 0.75, 0.0],
            vec![0.0, 0.25, 0.0, 0.75],
            vec![0.75, 0.0, 0.25, 0.0],
        ]
    }

    fn c2() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.5, 0.0],
            vec![0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]
    }

    fn transpose(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = rows.len();
        (0..n)
            .map(|j| (0..n).map(|i| rows[i][j]).collect())
            .collect()
    }

    #[test]
    fn c1_is_doubly_stochastic() {
        let m = InteractionMatrix::new(&c1(), DEFAULT_TOL).unwrap();
        assert!(m.is_doubly_stochastic());
        assert_eq!(m.gamma(), 0.25);
    }

    #[test]
    fn c2_is_row_stochastic_only() {
        let m = InteractionMatrix::new(&c2(), DEFAULT_TOL).unwrap();
        assert!(!m.is_doubly_stochastic());
        assert_eq!(m.gamma(), 1.0 / 3.0);
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(matches!(
            InteractionMatrix::new(&rows, DEFAULT_TOL),
            Err(Error::NonzeroDiagonal { row: 0, .. })
        ));
    }

    #[test]
    fn rejects_negative_and_bad_rows() {
        let rows = vec![
            vec![0.0, 1.5, -0.5],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.0],
        ];
        assert!(matches!(
            InteractionMatrix::new(&rows, DEFAULT_TOL),
            Err(Error::NegativeEntry { row: 0, col: 2, .. })
        ));
        let rows = vec![
            vec![0.0, 0.9, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.0],
        ];
        match InteractionMatrix::new(&rows, DEFAULT_TOL) {
            Err(Error::RowSumViolation { row, deviation }) => {
                assert_eq!(row, 0);
                assert!((deviation + 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_small_or_ragged_input() {
        assert_eq!(
            InteractionMatrix::new(&[vec![0.0]], DEFAULT_TOL),
            Err(Error::TooSmall(1))
        );
        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(
            InteractionMatrix::new(&ragged, DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            InteractionMatrix::new(&c1(), 0.0),
            Err(Error::InvalidTolerance(_))
        ));
    }

    #[test]
    fn thirds_pass_under_default_tolerance() {
        let rows = vec![
            vec![0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
        ];
        let m = InteractionMatrix::new(&rows, DEFAULT_TOL).unwrap();
        assert!(m.is_doubly_stochastic());
    }

    #[test]
    fn c2_support() {
        let m = InteractionMatrix::new(&c2(), DEFAULT_TOL).unwrap();
        let arcs: Vec<_> = m.support_graph().arcs().collect();
        // zero-based form of {(1,2),(2,1),(2,3),(3,2),(3,4),(4,3)}
        assert_eq!(arcs, vec![(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)]);
    }

    #[test]
    fn c1_support_is_two_opposite_four_cycles() {
        let g = InteractionMatrix::new(&c1(), DEFAULT_TOL)
            .unwrap()
            .support_graph();
        assert_eq!(g.arc_count(), 8);
        for i in 0..4 {
            assert!(g.has_arc(i, (i + 1) % 4));
            assert!(g.has_arc(i, (i + 3) % 4));
        }
    }

    #[test]
    fn uniform_weights_give_complete_digraph() {
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.25 }).collect())
            .collect();
        let g = InteractionMatrix::new(&rows, DEFAULT_TOL)
            .unwrap()
            .support_graph();
        assert_eq!(g.arc_count(), n * (n - 1));
    }

    #[test]
    fn predicate_is_transpose_symmetric_on_example_matrices() {
        for rows in [c1(), c2()] {
            let m = InteractionMatrix::new(&rows, DEFAULT_TOL).unwrap();
            // The transpose of C2 is not row-stochastic, so only compare
            // when it validates.
            if let Ok(t) = InteractionMatrix::new(&transpose(&rows), DEFAULT_TOL) {
                assert_eq!(m.is_doubly_stochastic(), t.is_doubly_stochastic());
            } else {
                assert!(!m.is_doubly_stochastic());
            }
        }
    }
}
