//! Feed-forward regressor: `[Dense -> (BatchNorm) -> ReLU] * k -> Dense(1)`.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{glorot_uniform, view2, view2_mut, BatchStats, Network};
use crate::{Error, Result};

pub const BN_EPSILON: f64 = 1e-3;
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub hidden: Vec<usize>,
    pub batch_norm: bool,
}

impl Default for MlpArch {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            batch_norm: true,
        }
    }
}

impl MlpArch {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Layer {
    fan_in: usize,
    width: usize,
    w: usize,
    b: usize,
    /// Offset of gamma; beta follows immediately.
    norm: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    arch: MlpArch,
    input: usize,
    layers: Vec<Layer>,
    head_w: usize,
    head_b: usize,
    params: Vec<f64>,
    /// Non-trainable running `(mean, variance)` per normalized layer.
    running: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Mlp {
    pub fn new<R: Rng>(input: usize, arch: &MlpArch, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(arch.hidden.len());
        let mut off = 0;
        let mut fan_in = input;
        for &width in &arch.hidden {
            let w = off;
            let b = w + fan_in * width;
            off = b + width;
            let norm = arch.batch_norm.then(|| {
                let g = off;
                off += 2 * width;
                g
            });
            layers.push(Layer { fan_in, width, w, b, norm });
            fan_in = width;
        }
        let head_w = off;
        let head_b = head_w + fan_in;
        let mut params = vec![0.0; head_b + 1];
        for l in &layers {
            glorot_uniform(&mut params[l.w..l.b], l.fan_in, l.width, rng);
            if let Some(g) = l.norm {
                params[g..g + l.width].fill(1.0);
            }
        }
        glorot_uniform(&mut params[head_w..head_b], fan_in, 1, rng);
        let running = layers
            .iter()
            .filter(|l| l.norm.is_some())
            .map(|l| (vec![0.0; l.width], vec![1.0; l.width]))
            .collect();
        Self {
            arch: arch.clone(),
            input,
            layers,
            head_w,
            head_b,
            params,
            running,
        }
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn non_trainable_count(&self) -> usize {
        self.running.iter().map(|(m, v)| m.len() + v.len()).sum()
    }

    fn head_in(&self) -> usize {
        self.layers.last().map_or(self.input, |l| l.width)
    }

    fn affine(&self, a: ArrayView2<f64>, l: &Layer) -> Array2<f64> {
        let w = view2(&self.params, l.w, l.fan_in, l.width);
        let b = &self.params[l.b..l.b + l.width];
        let mut z = a.dot(&w);
        for mut row in z.rows_mut() {
            row.iter_mut().zip(b).for_each(|(v, bb)| *v += bb);
        }
        z
    }

    fn head(&self, a: ArrayView2<f64>) -> Vec<f64> {
        let w = &self.params[self.head_w..self.head_b];
        let b = self.params[self.head_b];
        a.rows()
            .into_iter()
            .map(|r| b + r.iter().zip(w).map(|(x, w)| x * w).sum::<f64>())
            .collect()
    }
}

struct Cache {
    input: Array2<f64>,
    zhat: Option<Array2<f64>>,
    inv_std: Vec<f64>,
    out: Array2<f64>,
}

impl Network for Mlp {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_width(&self) -> usize {
        self.input
    }

    fn forward_backward(&self, x: ArrayView2<f64>, y: &[f64], grad: &mut [f64]) -> (f64, BatchStats) {
        grad.fill(0.0);
        let n = x.nrows();
        let nf = n as f64;
        let mut stats = BatchStats::default();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for l in &self.layers {
            let z = self.affine(a.view(), l);
            let (zhat, inv_std, out) = match l.norm {
                Some(g) => {
                    let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                    let var = z.map_axis(Axis(0), |c| {
                        let m = c.mean().unwrap_or(0.0);
                        c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf
                    });
                    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
                    let mut zhat = z;
                    for mut row in zhat.rows_mut() {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = (*v - mean[j]) * inv_std[j];
                        }
                    }
                    let gamma = &self.params[g..g + l.width];
                    let beta = &self.params[g + l.width..g + 2 * l.width];
                    let mut out = zhat.clone();
                    for mut row in out.rows_mut() {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = *v * gamma[j] + beta[j];
                        }
                    }
                    stats.stages.push((mean.to_vec(), var.to_vec()));
                    (Some(zhat), inv_std, out)
                }
                None => (None, Vec::new(), z),
            };
            let next = out.mapv(|v| v.max(0.0));
            caches.push(Cache {
                input: std::mem::replace(&mut a, next),
                zhat,
                inv_std,
                out,
            });
        }
        let pred = self.head(a.view());
        let mut loss = 0.0;
        let dpred: Array1<f64> = pred
            .iter()
            .zip(y)
            .map(|(p, t)| {
                let d = p - t;
                loss += d * d;
                2.0 * d / nf
            })
            .collect();
        loss /= nf;

        // Head gradients.
        let hin = self.head_in();
        {
            let gw = &mut grad[self.head_w..self.head_b];
            for (row, dp) in a.rows().into_iter().zip(&dpred) {
                gw.iter_mut().zip(row).for_each(|(g, v)| *g += dp * v);
            }
            grad[self.head_b] = dpred.sum();
        }
        let hw = &self.params[self.head_w..self.head_b];
        let mut da = Array2::from_shape_fn((n, hin), |(i, j)| dpred[i] * hw[j]);

        for (l, c) in self.layers.iter().zip(caches).rev() {
            // Through ReLU.
            ndarray::Zip::from(&mut da).and(&c.out).for_each(|d, &o| {
                if o <= 0.0 {
                    *d = 0.0;
                }
            });
            let dz = match (l.norm, c.zhat) {
                (Some(g), Some(zhat)) => {
                    let w = l.width;
                    let gamma = &self.params[g..g + w];
                    let mut dgamma = vec![0.0; w];
                    let mut dbeta = vec![0.0; w];
                    for (dr, zr) in da.rows().into_iter().zip(zhat.rows()) {
                        for j in 0..w {
                            dgamma[j] += dr[j] * zr[j];
                            dbeta[j] += dr[j];
                        }
                    }
                    grad[g..g + w].copy_from_slice(&dgamma);
                    grad[g + w..g + 2 * w].copy_from_slice(&dbeta);
                    // dzhat = da * gamma; sum(dzhat) = gamma*dbeta; sum(dzhat*zhat) = gamma*dgamma.
                    let mut dz = da;
                    for (mut dr, zr) in dz.rows_mut().into_iter().zip(zhat.rows()) {
                        for j in 0..w {
                            let dzhat = dr[j] * gamma[j];
                            dr[j] = c.inv_std[j] / nf
                                * (nf * dzhat - gamma[j] * dbeta[j] - zr[j] * gamma[j] * dgamma[j]);
                        }
                    }
                    dz
                }
                _ => da,
            };
            {
                let mut gw = view2_mut(grad, l.w, l.fan_in, l.width);
                general_mat_mul(1.0, &c.input.t(), &dz, 0.0, &mut gw);
            }
            let db = dz.sum_axis(Axis(0));
            grad[l.b..l.b + l.width].copy_from_slice(db.as_slice().expect("contiguous"));
            let w = view2(&self.params, l.w, l.fan_in, l.width);
            da = dz.dot(&w.t());
        }
        (loss, stats)
    }

    fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut a = x.to_owned();
        let mut stage = 0;
        for l in &self.layers {
            let mut z = self.affine(a.view(), l);
            if let Some(g) = l.norm {
                let (mean, var) = &self.running[stage];
                stage += 1;
                let gamma = &self.params[g..g + l.width];
                let beta = &self.params[g + l.width..g + 2 * l.width];
                for mut row in z.rows_mut() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = (*v - mean[j]) / (var[j] + BN_EPSILON).sqrt() * gamma[j] + beta[j];
                    }
                }
            }
            z.mapv_inplace(|v| v.max(0.0));
            a = z;
        }
        self.head(a.view())
    }

    fn update_running(&mut self, stats: &BatchStats) {
        for ((rm, rv), (bm, bv)) in self.running.iter_mut().zip(&stats.stages) {
            for (r, b) in rm.iter_mut().zip(bm) {
                *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
            }
            for (r, b) in rv.iter_mut().zip(bv) {
                *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::network::gradient_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture(seed: u64, norm: bool) -> (Mlp, Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arch = MlpArch {
            hidden: vec![4, 3],
            batch_norm: norm,
        };
        let mut net = Mlp::new(3, &arch, &mut rng);
        // Nudge biases away from zero so ReLU kinks are not sitting on samples.
        for p in net.params_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let x = Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0));
        let y = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        (net, x, y)
    }

    #[test]
    fn parameter_count() {
        let (net, _, _) = fixture(0, true);
        // 3*4+4 + 8 + 4*3+3 + 6 + 3+1
        assert_eq!(net.n_params(), 49);
        assert_eq!(net.non_trainable_count(), 14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            for norm in [false, true] {
                let (net, x, y) = fixture(seed, norm);
                let err = gradient_check(&net, x.view(), &y, 1e-5, 1e-6);
                assert!(err < 1e-4, "seed {seed} norm {norm}: {err}");
            }
        }
    }

    #[test]
    fn running_stats_track_batches() {
        let (mut net, x, y) = fixture(1, true);
        let mut g = vec![0.0; net.n_params()];
        let (_, stats) = net.forward_backward(x.view(), &y, &mut g);
        net.update_running(&stats);
        let (m, _) = &net.running[0];
        assert!((m[0] - 0.01 * stats.stages[0].0[0]).abs() < 1e-15);
    }
}
