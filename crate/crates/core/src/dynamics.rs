//! Vector field of the self-appraisal model and related pointwise quantities.
//!
//! For a fixed relative interaction matrix `C` the state evolves as
//!
//! ```text
//! dx_i/dt = -(1 - x_i) x_i + sum_j c_ji (1 - x_j) x_j
//!         = -(W x)_i,   W = I - X - C^T (I - X),  X = diag(x)
//! ```
//!
//! Every vertex `e_i` is an equilibrium, and the barycenter is one exactly
//! when `C` is doubly stochastic.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Rk4Workspace;
use crate::matrix::InteractionMatrix;

fn check_dim(c: &InteractionMatrix, len: usize) -> Result<()> {
    if c.n() == len {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: c.n(),
            actual: len,
        })
    }
}

/// Writes the vector field at `x` into `out` without allocating.
///
/// Panics if the lengths disagree with `c`.
pub fn rhs_into(c: &InteractionMatrix, x: &[f64], out: &mut [f64]) {
    let n = c.n();
    assert!(x.len() == n && out.len() == n);
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for j in 0..n {
        let p = (1.0 - x[j]) * x[j];
        out[j] -= p;
        for (i, o) in out.iter_mut().enumerate() {
            *o += c.get(j, i) * p;
        }
    }
}

/// `dx/dt` at `x` under the fixed matrix `c`.
pub fn rhs(c: &InteractionMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(c, x.len())?;
    let mut out = vec![0.0; x.len()];
    rhs_into(c, x, &mut out);
    Ok(out)
}

/// The state-dependent matrix `W(x) = I - X - C^T (I - X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.n + k]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| (0..self.n).map(|i| self.get(i, k)).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.n).map(|r| r.iter().sum()).collect()
    }
}

pub fn w_matrix(c: &InteractionMatrix, x: &[f64]) -> Result<WMatrix> {
    check_dim(c, x.len())?;
    let n = c.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let diag = if i == k { 1.0 - x[i] } else { 0.0 };
            data[i * n + k] = diag - c.get(k, i) * (1.0 - x[k]);
        }
    }
    Ok(WMatrix { n, data })
}

/// Opinion dynamics driven by the appraisals:
/// `dz_i/dt = (1 - x_i) (sum_j c_ij z_j - z_i)`.
pub fn opinion_rhs(c: &InteractionMatrix, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_dim(c, x.len())?;
    check_dim(c, z.len())?;
    let cz = c.mul_vec(z);
    Ok((0..c.n()).map(|i| (1.0 - x[i]) * (cz[i] - z[i])).collect())
}

/// Jacobian of [`rhs`]: `d f_i / d x_k = -(1 - 2 x_i) [i = k] + c_ki (1 - 2 x_k)`.
fn jacobian(c: &InteractionMatrix, x: &[f64]) -> DMatrix<f64> {
    let n = c.n();
    DMatrix::from_fn(n, n, |i, k| {
        let own = if i == k { -(1.0 - 2.0 * x[i]) } else { 0.0 };
        own + c.get(k, i) * (1.0 - 2.0 * x[k])
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const VERTEX_GUARD: f64 = 1e-6;
const MAX_HALVINGS: usize = 40;
const FALLBACK_HORIZON: f64 = 20.0;
const FALLBACK_STEP: f64 = 1e-2;
const MAX_FALLBACKS: usize = 25;

/// Finds a non-vertex equilibrium of the fixed-`C` dynamics.
///
/// Damped Newton on the first `n - 1` coordinates with `x_n = 1 - sum`. The
/// step halves until the residual decreases while the iterate stays on the
/// simplex. When no step helps (or the Jacobian is singular) the state is
/// pushed along the flow for a while and Newton resumes.
pub fn equilibrium_fixed(
    c: &InteractionMatrix,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    check_dim(c, x0.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let n = c.n();
    if x0.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotOnSimplex {
            residual: x0.iter().fold(0.0f64, |m, &v| m.max(-v)),
        });
    }
    let residual = crate::state::simplex_residual(x0);
    if residual > 1e-9 {
        return Err(Error::NotOnSimplex { residual });
    }

    let from_chart = |y: &[f64]| -> Vec<f64> {
        let mut x = y.to_vec();
        x.push(1.0 - y.iter().sum::<f64>());
        x
    };
    let mut y: Vec<f64> = x0[..n - 1].to_vec();
    let mut x = from_chart(&y);
    let mut f = vec![0.0; n];
    rhs_into(c, &x, &mut f);
    let mut fallbacks = 0;
    let mut ws = Rk4Workspace::new(n);

    for _ in 0..max_iter {
        let norm = sup_norm(&f);
        if norm <= tol {
            return finish(x);
        }

        let step = newton_direction(c, &x, &f);
        let mut accepted = false;
        if let Some(d) = step {
            let mut s = 1.0;
            for _ in 0..MAX_HALVINGS {
                let y_try: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                let x_try = from_chart(&y_try);
                if x_try.iter().all(|&v| (0.0..=1.0).contains(&v)) {
                    let mut f_try = vec![0.0; n];
                    rhs_into(c, &x_try, &mut f_try);
                    if sup_norm(&f_try) < norm {
                        y = y_try;
                        x = x_try;
                        f = f_try;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
        }

        if !accepted {
            fallbacks += 1;
            if fallbacks > MAX_FALLBACKS {
                break;
            }
            let steps = (FALLBACK_HORIZON / FALLBACK_STEP).round() as usize;
            for _ in 0..steps {
                ws.step(c, &mut x, FALLBACK_STEP);
            }
            y.copy_from_slice(&x[..n - 1]);
            x = from_chart(&y);
            rhs_into(c, &x, &mut f);
        }
    }
    if sup_norm(&f) <= tol {
        return finish(x);
    }
    Err(Error::NoConvergence(max_iter))
}

fn newton_direction(c: &InteractionMatrix, x: &[f64], f: &[f64]) -> Option<Vec<f64>> {
    let n = c.n();
    let jac = jacobian(c, x);
    // Chart Jacobian: dx_n/dy_k = -1.
    let reduced = DMatrix::from_fn(n - 1, n - 1, |i, k| jac[(i, k)] - jac[(i, n - 1)]);
    let rhs = DVector::from_iterator(n - 1, f[..n - 1].iter().map(|v| -v));
    let d = reduced.lu().solve(&rhs)?;
    d.iter()
        .all(|v| v.is_finite())
        .then(|| d.iter().copied().collect())
}

fn finish(x: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(i) = x.iter().position(|&v| v >= 1.0 - VERTEX_GUARD) {
        return Err(Error::ConvergedToVertex(i));
    }
    Ok(x)
}

/// Scalar `v` with `v - v^2 = sum_k beta_k (x_k - x_k^2)`, lying between the
/// smallest and largest `x_k` on the support of `beta` and not exceeding
/// `beta . x`.
///
/// Of the two roots of `v^2 - v + c = 0` the smaller one is returned when it
/// satisfies the constraints, otherwise the larger.
pub fn spread_root(beta: &[f64], x: &[f64]) -> Result<f64> {
    if beta.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.len(),
            actual: x.len(),
        });
    }
    const SLACK: f64 = 1e-9;
    let c: f64 = beta.iter().zip(x).map(|(b, v)| b * (v - v * v)).sum();
    let mean: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
    let (lo, hi) = beta
        .iter()
        .zip(x)
        .filter(|(b, _)| **b != 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        return Err(Error::NoFeasibleRoot { c });
    }

    let mut disc = 1.0 - 4.0 * c;
    if disc < 0.0 {
        if disc < -1e-12 {
            return Err(Error::NoFeasibleRoot { c });
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let upper = hi.min(mean);
    let feasible = |v: f64| v >= lo - SLACK && v <= upper + SLACK;
    let v = [(1.0 - root) / 2.0, (1.0 + root) / 2.0]
        .into_iter()
        .find(|&v| feasible(v))
        .ok_or(Error::NoFeasibleRoot { c })?;
    // Near a double root the square root amplifies rounding; the residual is
    // flat there, so pulling v back into the interval costs nothing.
    Ok(v.clamp(lo, upper.max(lo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DEFAULT_TOL;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> InteractionMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        InteractionMatrix::new(&rows, DEFAULT_TOL).unwrap()
    }

    fn c1() -> InteractionMatrix {
        m(&[
            &[0.0, 0.75, 0.0, 0.25],
            &[0.25, 0.0, 0.75, 0.0],
            &[0.0, 0.25, 0.0, 0.75],
            &[0.75, 0.0, 0.25, 0.0],
        ])
    }

    fn c2() -> InteractionMatrix {
        m(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[0.5, 0.0, 0.5, 0.0],
            &[0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
    }

    /// Coordinate-wise evaluation over in-neighbors read off the support graph.
    fn rhs_oracle(c: &InteractionMatrix, x: &[f64]) -> Vec<f64> {
        let g = c.support_graph();
        (0..c.n())
            .map(|i| {
                let incoming: f64 = g
                    .arcs()
                    .filter(|&(_, to)| to == i)
                    .map(|(j, _)| c.get(j, i) * (1.0 - x[j]) * x[j])
                    .sum();
                -(1.0 - x[i]) * x[i] + incoming
            })
            .collect()
    }

    #[test]
    fn vertices_are_equilibria() {
        for i in 0..4 {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            assert_eq!(rhs(&c2(), &e).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn barycenter_is_equilibrium_for_c1() {
        assert!(sup_norm(&rhs(&c1(), &[0.25; 4]).unwrap()) < 1e-16);
    }

    #[test]
    fn c2_at_barycenter() {
        // Exact rational evaluation gives (-3/32, 1/16, 3/32, -1/16).
        let expected = [-3.0 / 32.0, 1.0 / 16.0, 3.0 / 32.0, -1.0 / 16.0];
        let got = rhs(&c2(), &[0.25; 4]).unwrap();
        let oracle = rhs_oracle(&c2(), &[0.25; 4]);
        for i in 0..4 {
            assert!((got[i] - expected[i]).abs() < 1e-16);
            assert!((oracle[i] - expected[i]).abs() < 1e-16);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            rhs(&c1(), &[0.5, 0.5]),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 2
            })
        ));
        assert!(w_matrix(&c1(), &[1.0]).is_err());
        assert!(opinion_rhs(&c1(), &[0.25; 4], &[0.0; 3]).is_err());
    }

    #[test]
    fn w_matrix_annihilates_vertices_and_has_zero_column_sums() {
        let w = w_matrix(&c1(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w.apply(&[1.0, 0.0, 0.0, 0.0]), vec![0.0; 4]);
        let w = w_matrix(&c1(), &[0.4, 0.3, 0.2, 0.1]).unwrap();
        for s in w.column_sums() {
            assert!(s.abs() < 1e-15);
        }
        // W itself need not have zero row sums even for doubly stochastic C.
        assert!(w.row_sums().iter().any(|s| s.abs() > 1e-3));
    }

    #[test]
    fn opinion_examples() {
        let x = [0.25; 4];
        assert_eq!(opinion_rhs(&c1(), &x, &[0.7; 4]).unwrap(), vec![0.0; 4]);
        let z = [1.0, 0.0, 0.0, 0.0];
        let got = opinion_rhs(&c1(), &x, &z).unwrap();
        // (3/4)(C1 z - z) with C1 z = (0, 1/4, 0, 3/4).
        let expected = [-0.75, 0.1875, 0.0, 0.5625];
        for i in 0..4 {
            assert!((got[i] - expected[i]).abs() < 1e-16);
        }
        let z = [0.3, -1.0, 2.0, 5.0];
        let got = opinion_rhs(&c2(), &[0.0, 1.0, 0.0, 0.0], &z).unwrap();
        assert_eq!(got[1], 0.0);
    }

    #[test]
    fn equilibrium_of_c1_is_uniform() {
        let x = equilibrium_fixed(&c1(), &[0.4, 0.3, 0.2, 0.1], 1e-12, 100).unwrap();
        for v in &x {
            assert!((v - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn equilibrium_of_c2_matches_reported_values() {
        let x = equilibrium_fixed(&c2(), &[0.25; 4], 1e-12, 100).unwrap();
        let reported = [0.0917, 0.211, 0.486, 0.211];
        for i in 0..4 {
            assert!((x[i] - reported[i]).abs() <= 5e-3, "{x:?}");
        }
        assert!(sup_norm(&rhs(&c2(), &x).unwrap()) <= 1e-12);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_requires_interior_start() {
        assert!(matches!(
            equilibrium_fixed(&c2(), &[1.0, 0.0, 0.0, 0.0], 1e-12, 10),
            Err(Error::NotOnSimplex { .. })
        ));
    }

    #[test]
    fn spread_root_examples() {
        let x = [0.1, 0.2, 0.3, 0.4];
        for k in 0..4 {
            let mut beta = [0.0; 4];
            beta[k] = 1.0;
            assert!((spread_root(&beta, &x).unwrap() - x[k]).abs() < 1e-15);
        }
        let big = [0.8, 0.2];
        assert!((spread_root(&[1.0, 0.0], &big).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            spread_root(&[0.5, 0.5, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap(),
            0.0
        );
        assert_eq!(spread_root(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.5);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|a| a / s).collect())
        })
    }

    proptest! {
        #[test]
        fn spread_root_postconditions(
            (beta, x) in (2usize..7).prop_flat_map(|n| (simplex(n), simplex(n)))
        ) {
            let v = spread_root(&beta, &x).unwrap();
            let c: f64 = beta.iter().zip(&x).map(|(b, a)| b * (a - a * a)).sum();
            prop_assert!((v - v * v - c).abs() <= 1e-12);
            let supp: Vec<f64> = beta.iter().zip(&x).filter(|(b, _)| **b != 0.0).map(|(_, a)| *a).collect();
            let lo = supp.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = supp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo && v <= hi);
            let mean: f64 = beta.iter().zip(&x).map(|(b, a)| b * a).sum();
            prop_assert!(v <= mean);
        }

        #[test]
        fn rhs_matches_oracle_and_w_form(x in simplex(4)) {
            for c in [c1(), c2()] {
                let f = rhs(&c, &x).unwrap();
                let o = rhs_oracle(&c, &x);
                let wx = w_matrix(&c, &x).unwrap().apply(&x);
                for i in 0..4 {
                    prop_assert!((f[i] - o[i]).abs() <= 1e-15);
                    prop_assert!((f[i] + wx[i]).abs() <= 4e-14);
                }
                prop_assert!(f.iter().sum::<f64>().abs() <= 1e-13);
            }
        }
    }
}
