//! Least squares with an intercept via column-pivoted Householder QR. Rank
//! deficient designs get the minimum-norm solution through a complete
//! orthogonal decomposition.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Numerical rank of the centered design matrix.
    pub rank: usize,
}

impl LinearModel {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.weights.len()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_row(r.as_slice().unwrap_or(&r.to_vec())))
            .collect()
    }
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto a multiple of e1. Returns it and the new
    /// leading value.
    fn new(x: &[f64]) -> (Self, f64) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (
                Self {
                    v: vec![0.0; x.len()],
                    beta: 0.0,
                },
                0.0,
            );
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        (Self { v, beta: 2.0 / vtv }, alpha)
    }

    /// y <- (I - beta v v^T) y on the trailing part starting at `offset`.
    fn apply(&self, y: &mut [f64], offset: usize) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut y[offset..offset + self.v.len()];
        let dot: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let s = self.beta * dot;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

pub fn fit_ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> LinearModel {
    let (n, m) = x.dim();
    assert_eq!(n, y.len(), "row count mismatch");
    if n == 0 {
        return LinearModel {
            weights: vec![0.0; m],
            intercept: 0.0,
            rank: 0,
        };
    }
    let x_mean = x.mean_axis(Axis(0)).expect("non-empty");
    let y_mean = y.sum() / n as f64;

    // Column-major centered copy; each column is a contiguous Vec.
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|j| x.column(j).iter().map(|v| v - x_mean[j]).collect())
        .collect();
    let mut rhs: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut perm: Vec<usize> = (0..m).collect();
    let steps = n.min(m);
    let mut diag_max = 0.0f64;
    let mut rank = 0;

    for k in 0..steps {
        // Pivot on the largest remaining column norm.
        let (best, best_norm) = (k..m)
            .map(|j| (j, cols[j][k..].iter().map(|v| v * v).sum::<f64>()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        cols.swap(k, best);
        perm.swap(k, best);
        if k == 0 {
            diag_max = best_norm.sqrt();
        }
        let tol = f64::EPSILON * (n.max(m) as f64) * 10.0 * diag_max;
        if best_norm.sqrt() <= tol || diag_max == 0.0 {
            break;
        }
        let (h, alpha) = Reflector::new(&cols[k][k..]);
        cols[k][k] = alpha;
        for v in cols[k][k + 1..].iter_mut() {
            *v = 0.0;
        }
        for col in cols.iter_mut().skip(k + 1) {
            h.apply(col, k);
        }
        h.apply(&mut rhs, k);
        rank = k + 1;
    }

    // R is rank x m upper trapezoidal: r(i, j) = cols[j][i].
    let r = |i: usize, j: usize| cols[j][i];
    let mut z = vec![0.0; m];
    if rank == m {
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| r(i, j) * z[j]).sum();
            z[i] = (rhs[i] - s) / r(i, i);
        }
    } else if rank > 0 {
        // Minimum-norm solution of [R11 R12] z = c: factor the transpose
        // R^T = Q2 T, solve T^T u = c, then z = Q2 u.
        let mut rt: Vec<Vec<f64>> = (0..rank)
            .map(|i| (0..m).map(|j| if j >= i { r(i, j) } else { 0.0 }).collect())
            .collect();
        let mut reflectors = Vec::with_capacity(rank);
        for k in 0..rank {
            let (h, alpha) = Reflector::new(&rt[k][k..]);
            rt[k][k] = alpha;
            for v in rt[k][k + 1..].iter_mut() {
                *v = 0.0;
            }
            for col in rt.iter_mut().skip(k + 1) {
                h.apply(col, k);
            }
            reflectors.push(h);
        }
        // T(i, j) = rt[j][i] for i <= j; solve T^T u = c by forward substitution.
        let mut u = vec![0.0; m];
        for i in 0..rank {
            let s: f64 = (0..i).map(|j| rt[i][j] * u[j]).sum();
            u[i] = (rhs[i] - s) / rt[i][i];
        }
        for (k, h) in reflectors.iter().enumerate().rev() {
            h.apply(&mut u, k);
        }
        z = u;
    }

    let mut weights = vec![0.0; m];
    for (k, &j) in perm.iter().enumerate() {
        weights[j] = z[k];
    }
    let intercept = y_mean - weights.iter().zip(x_mean.iter()).map(|(w, m)| w * m).sum::<f64>();
    LinearModel {
        weights,
        intercept,
        rank,
    }
}

/// Residual vector `y - Xw - b`.
pub fn residuals(model: &LinearModel, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    &y - &model.predict(x)
}

#[doc(hidden)]
pub fn design_with_intercept(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::ones((x.nrows(), x.ncols() + 1));
    out.slice_mut(ndarray::s![.., 1..]).assign(&x);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exact_line() {
        let x = array![[0.0], [1.0], [2.0], [5.0]];
        let y = x.column(0).mapv(|v| 2.0 * v + 3.0);
        let model = fit_ols(x.view(), y.view());
        assert!((model.weights[0] - 2.0).abs() < 1e-12);
        assert!((model.intercept - 3.0).abs() < 1e-12);
        let r2 = super::super::metrics::r2(y.as_slice().unwrap(), model.predict(x.view()).as_slice().unwrap()).unwrap();
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(!model.rank_deficient());
    }

    #[test]
    fn duplicate_column_is_rank_deficient_and_least_norm() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [4.0, 4.0], [3.0, 3.0]];
        let y = array![2.0, 4.1, 7.9, 6.0];
        let model = fit_ols(x.view(), y.view());
        assert_eq!(model.rank, 1);
        // Minimum norm splits the weight evenly.
        assert!((model.weights[0] - model.weights[1]).abs() < 1e-12);
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let x = array![[1.0, 7.0], [2.0, 7.0], [3.0, 7.0], [4.0, 7.0]];
        let y = array![1.0, 3.0, 2.0, 5.0];
        let model = fit_ols(x.view(), y.view());
        assert_eq!(model.weights[1], 0.0);
    }

    #[test]
    fn more_columns_than_rows() {
        let x = array![[1.0, 0.0, 2.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        let y = array![1.0, 2.0, 3.0];
        let model = fit_ols(x.view(), y.view());
        let res = residuals(&model, x.view(), y.view());
        assert!(res.iter().all(|r| r.abs() < 1e-10), "{res:?}");
    }
}
