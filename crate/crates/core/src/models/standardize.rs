use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-column z-scoring fitted on training data. Zero-variance columns map
/// to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(col, m)| {
                if col.iter().all(|&v| v == col[0]) {
                    0.0
                } else {
                    (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn fit_vector(y: ArrayView1<f64>) -> Self {
        Self::fit(y.insert_axis(Axis(1)))
    }

    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    fn scale(&self, j: usize, v: f64) -> f64 {
        if self.std[j] == 0.0 {
            0.0
        } else {
            (v - self.mean[j]) / self.std[j]
        }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.scale(j, *v);
            }
        }
        out
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &v)| self.scale(j, v)).collect()
    }

    pub fn apply_vector(&self, y: ArrayView1<f64>) -> Array1<f64> {
        y.mapv(|v| self.scale(0, v))
    }

    pub fn inverse(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        out
    }

    pub fn inverse_scalar(&self, v: f64) -> f64 {
        v * self.std[0] + self.mean[0]
    }

    pub fn inverse_vector(&self, y: ArrayView1<f64>) -> Array1<f64> {
        y.mapv(|v| self.inverse_scalar(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn standardized_columns_and_round_trip(
            rows in proptest::collection::vec(proptest::collection::vec(-1e4f64..1e4, 3), 2..30),
            constant in -50.0f64..50.0,
        ) {
            let n = rows.len();
            let mut x = Array2::from_shape_fn((n, 4), |(i, j)| if j < 3 { rows[i][j] } else { constant });
            // keep at least one non-degenerate column
            x[[0, 0]] += 1.0;
            let s = Standardizer::fit(x.view());
            let z = s.apply(x.view());
            for j in 0..4 {
                let col = z.column(j);
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                if s.std[j] == 0.0 {
                    prop_assert!(col.iter().all(|&v| v == 0.0));
                } else {
                    prop_assert!(mean.abs() < 1e-9);
                    prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
                }
            }
            let back = s.inverse(z.view());
            for ((i, j), v) in back.indexed_iter() {
                prop_assert!((v - x[[i, j]]).abs() <= 1e-9 * x[[i, j]].abs().max(1.0));
            }
        }
    }

    #[test]
    fn vector_helpers() {
        let y = ndarray::array![2.0, 4.0, 6.0];
        let s = Standardizer::fit_vector(y.view());
        let z = s.apply_vector(y.view());
        assert!((z[1]).abs() < 1e-15);
        assert!((s.inverse_scalar(z[2]) - 6.0).abs() < 1e-12);
    }
}
