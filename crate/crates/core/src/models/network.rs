use ndarray::{ArrayView2, ArrayViewMut2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Per-batch normalization statistics gathered in a training-mode forward
/// pass, one `(mean, variance)` vector pair per normalization stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchStats {
    pub stages: Vec<(Vec<f64>, Vec<f64>)>,
}

/// A differentiable regressor whose trainable parameters live in one flat
/// vector.
pub trait Network {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Width of one flattened input row.
    fn input_width(&self) -> usize;

    /// Training-mode forward pass plus backward pass. Writes the gradient of
    /// the mean squared error into `grad` (overwriting) and returns the loss.
    fn forward_backward(&self, x: ArrayView2<f64>, y: &[f64], grad: &mut [f64]) -> (f64, BatchStats);

    /// Inference-mode predictions.
    fn predict(&self, x: ArrayView2<f64>) -> Vec<f64>;

    /// Folds batch statistics into running estimates. No-op by default.
    fn update_running(&mut self, _stats: &BatchStats) {}

    fn n_params(&self) -> usize {
        self.params().len()
    }
}

/// Glorot uniform fill for a `fan_in x fan_out` kernel.
pub(crate) fn glorot_uniform<R: Rng>(dst: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in dst {
        *v = rng.random_range(-limit..limit);
    }
}

/// Fills a `rows x cols` row-major matrix with orthonormal rows (or columns
/// when rows > cols).
pub(crate) fn orthogonal<R: Rng>(dst: &mut [f64], rows: usize, cols: usize, rng: &mut R) {
    assert_eq!(dst.len(), rows * cols);
    let (count, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|a| *a /= n);
            basis.push(v);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            dst[r * cols + c] = if rows <= cols { basis[r][c] } else { basis[c][r] };
        }
    }
}

pub(crate) fn view2(buf: &[f64], off: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), &buf[off..off + rows * cols]).expect("layout")
}

pub(crate) fn view2_mut(buf: &mut [f64], off: usize, rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), &mut buf[off..off + rows * cols]).expect("layout")
}

/// Largest relative error between analytic and central-difference gradients,
/// using `max(|a|, |n|, floor)` as the denominator.
pub fn gradient_check<N: Network + Clone>(net: &N, x: ArrayView2<f64>, y: &[f64], h: f64, floor: f64) -> f64 {
    let mut analytic = vec![0.0; net.n_params()];
    net.forward_backward(x, y, &mut analytic);
    let mut probe = net.clone();
    let mut scratch = vec![0.0; net.n_params()];
    let mut worst = 0.0f64;
    for i in 0..net.n_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let (lp, _) = probe.forward_backward(x, y, &mut scratch);
        probe.params_mut()[i] = orig - h;
        let (lm, _) = probe.forward_backward(x, y, &mut scratch);
        probe.params_mut()[i] = orig;
        let numeric = (lp - lm) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
