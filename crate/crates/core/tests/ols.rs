use gsicast_core::models::ols::{design_with_intercept, residuals};
use gsicast_core::models::{fit_ols, r2};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn fixture(seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=8);
    let n = rng.random_range(m + 5..=80);
    let scale = 10f64.powi(rng.random_range(-2..=3));
    let x = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal) * scale);
    let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal) * 50.0 + 7.0);
    (x, y)
}

/// `[intercept, weights...]` from the SVD pseudoinverse of `[1 | X]`.
fn pinv_coefficients(x: &Array2<f64>, y: &Array1<f64>) -> DVector<f64> {
    let a = design_with_intercept(x.view());
    let a = DMatrix::from_row_slice(a.nrows(), a.ncols(), a.as_slice().unwrap());
    let pinv = a.pseudo_inverse(1e-12).unwrap();
    pinv * DVector::from_column_slice(y.as_slice().unwrap())
}

#[test]
fn matches_pseudoinverse_on_random_fixtures() {
    for seed in 0..50 {
        let (x, y) = fixture(seed);
        let model = fit_ols(x.view(), y.view());
        assert!(!model.rank_deficient(), "seed {seed}");
        let want = pinv_coefficients(&x, &y);
        let got = DVector::from_iterator(
            want.len(),
            std::iter::once(model.intercept).chain(model.weights.iter().copied()),
        );
        let rel = (&got - &want).norm() / want.norm();
        assert!(rel <= 1e-8, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    for seed in 0..50 {
        let (x, y) = fixture(seed);
        let model = fit_ols(x.view(), y.view());
        let r = residuals(&model, x.view(), y.view());
        let a = design_with_intercept(x.view());
        let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for col in a.columns() {
            let dot: f64 = col.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() <= 1e-8 * scale, "seed {seed}: {dot:e} vs scale {scale:e}");
        }
    }
}

#[test]
fn duplicated_column_predictions_match_pseudoinverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 40;
    let base = Array2::from_shape_fn((n, 3), |_| rng.sample::<f64, _>(StandardNormal));
    let mut x = Array2::zeros((n, 4));
    x.slice_mut(ndarray::s![.., ..3]).assign(&base);
    x.column_mut(3).assign(&base.column(1));
    let y = Array1::from_shape_fn(n, |i| 2.0 * base[[i, 1]] - base[[i, 0]] + rng.sample::<f64, _>(StandardNormal) * 0.1);
    let model = fit_ols(x.view(), y.view());
    assert!(model.rank_deficient());
    assert_eq!(model.rank, 3);
    // The split between the twin columns is arbitrary; the fit is not.
    assert!((model.weights[1] - model.weights[3]).abs() < 1e-10);
    let coef = pinv_coefficients(&x, &y);
    let a = design_with_intercept(x.view());
    let a = DMatrix::from_row_slice(n, 5, a.as_slice().unwrap());
    let want = a * coef;
    let got = model.predict(x.view());
    for i in 0..n {
        assert!((got[i] - want[i]).abs() <= 1e-8 * want.amax(), "row {i}");
    }
}

#[test]
fn recovers_an_exact_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Array2::from_shape_fn((30, 4), |_| rng.random_range(-5.0..5.0));
    let w = [1.5, -2.0, 0.25, 3.0];
    let y = Array1::from_shape_fn(30, |i| 4.0 + (0..4).map(|j| w[j] * x[[i, j]]).sum::<f64>());
    let model = fit_ols(x.view(), y.view());
    for (a, b) in model.weights.iter().zip(w) {
        assert!((a - b).abs() < 1e-10);
    }
    let pred = model.predict(x.view());
    assert!((r2(y.as_slice().unwrap(), pred.as_slice().unwrap()).unwrap() - 1.0).abs() < 1e-12);
}
