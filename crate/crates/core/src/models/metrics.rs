use crate::{Error, Result};

/// Coefficient of determination, `1 - SSE/SST` with `SST = Σ(a - ā)²`.
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} actual values vs {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::UndefinedMetric("r2 needs at least two values".into()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if sst == 0.0 || actual.iter().all(|&a| a == actual[0]) {
        return Err(Error::UndefinedMetric("r2 of a constant series".into()));
    }
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok(1.0 - sse / sst)
}

/// `1 - (1 - r2)(N - 1)/(N - p - 1)`, defined for `N > p + 1`.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::UndefinedMetric(format!(
            "adjusted r2 needs N > p + 1 (N={n}, p={p})"
        )));
    }
    Ok(1.0 - (1.0 - r2) * (n as f64 - 1.0) / ((n - p - 1) as f64))
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> f64 {
    let n = actual.len().max(1) as f64;
    actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum::<f64>()
        / n
}
