//! Stacked LSTM regressor with a linear head on the final hidden state.
//! Gate blocks are ordered input, forget, candidate, output.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{glorot_uniform, orthogonal, view2, view2_mut, BatchStats, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmArch {
    pub hidden: Vec<usize>,
}

impl Default for LstmArch {
    fn default() -> Self {
        Self { hidden: vec![256] }
    }
}

impl LstmArch {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("LSTM needs at least one cell of positive width".into()));
        }
        Ok(())
    }
}

/// Views a flattened `(samples, steps * features)` matrix as
/// `(samples, steps, features)`.
pub fn reshape_sequences(x: ArrayView2<'_, f64>, steps: usize, features: usize) -> Result<ArrayView3<'_, f64>> {
    if steps * features != x.ncols() {
        return Err(Error::Shape(format!(
            "{} columns cannot be viewed as {steps} steps x {features} features",
            x.ncols()
        )));
    }
    let n = x.nrows();
    if x.is_standard_layout() {
        return x
            .into_shape_with_order((n, steps, features))
            .map_err(|e| Error::Shape(e.to_string()));
    }
    Err(Error::Shape("input matrix is not contiguous".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Cell {
    fan_in: usize,
    hidden: usize,
    w: usize,
    u: usize,
    b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    arch: LstmArch,
    steps: usize,
    features: usize,
    cells: Vec<Cell>,
    head_w: usize,
    head_b: usize,
    params: Vec<f64>,
}

struct CellTrace {
    inputs: Vec<Array2<f64>>,
    /// `hs[t]` is the hidden state after step t.
    hs: Vec<Array2<f64>>,
    cs: Vec<Array2<f64>>,
    tanh_cs: Vec<Array2<f64>>,
    gates: Vec<Array2<f64>>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Lstm {
    pub fn new<R: Rng>(steps: usize, features: usize, arch: &LstmArch, rng: &mut R) -> Self {
        let mut cells = Vec::with_capacity(arch.hidden.len());
        let mut off = 0;
        let mut fan_in = features;
        for &hidden in &arch.hidden {
            let w = off;
            let u = w + fan_in * 4 * hidden;
            let b = u + hidden * 4 * hidden;
            off = b + 4 * hidden;
            cells.push(Cell { fan_in, hidden, w, u, b });
            fan_in = hidden;
        }
        let head_w = off;
        let head_b = head_w + fan_in;
        let mut params = vec![0.0; head_b + 1];
        for c in &cells {
            glorot_uniform(&mut params[c.w..c.u], c.fan_in, 4 * c.hidden, rng);
            orthogonal(&mut params[c.u..c.b], c.hidden, 4 * c.hidden, rng);
            params[c.b + c.hidden..c.b + 2 * c.hidden].fill(1.0);
        }
        glorot_uniform(&mut params[head_w..head_b], fan_in, 1, rng);
        Self {
            arch: arch.clone(),
            steps,
            features,
            cells,
            head_w,
            head_b,
            params,
        }
    }

    pub fn arch(&self) -> &LstmArch {
        &self.arch
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    fn run_cell(&self, c: &Cell, inputs: Vec<Array2<f64>>) -> CellTrace {
        let h = c.hidden;
        let n = inputs.first().map_or(0, |a| a.nrows());
        let w = view2(&self.params, c.w, c.fan_in, 4 * h);
        let u = view2(&self.params, c.u, h, 4 * h);
        let bias = &self.params[c.b..c.b + 4 * h];
        let mut trace = CellTrace {
            hs: Vec::with_capacity(inputs.len()),
            cs: Vec::with_capacity(inputs.len()),
            tanh_cs: Vec::with_capacity(inputs.len()),
            gates: Vec::with_capacity(inputs.len()),
            inputs: Vec::new(),
        };
        let mut h_prev = Array2::<f64>::zeros((n, h));
        let mut c_prev = Array2::<f64>::zeros((n, h));
        for x_t in &inputs {
            let mut z = x_t.dot(&w);
            general_mat_mul(1.0, &h_prev, &u, 1.0, &mut z);
            let mut c_t = Array2::zeros((n, h));
            let mut tc = Array2::zeros((n, h));
            let mut h_t = Array2::zeros((n, h));
            for r in 0..n {
                let mut zr = z.row_mut(r);
                for k in 0..4 * h {
                    let v = zr[k] + bias[k];
                    zr[k] = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(v) };
                }
                for j in 0..h {
                    let (i, f, g, o) = (zr[j], zr[h + j], zr[2 * h + j], zr[3 * h + j]);
                    let cv = f * c_prev[[r, j]] + i * g;
                    let t = cv.tanh();
                    c_t[[r, j]] = cv;
                    tc[[r, j]] = t;
                    h_t[[r, j]] = o * t;
                }
            }
            trace.gates.push(z);
            trace.cs.push(c_t.clone());
            trace.tanh_cs.push(tc);
            trace.hs.push(h_t.clone());
            h_prev = h_t;
            c_prev = c_t;
        }
        trace.inputs = inputs;
        trace
    }

    fn step_inputs(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        (0..self.steps)
            .map(|t| x.slice(s![.., t * self.features..(t + 1) * self.features]).to_owned())
            .collect()
    }

    fn forward(&self, x: ArrayView2<f64>) -> (Vec<CellTrace>, Vec<f64>) {
        let mut inputs = self.step_inputs(x);
        let mut traces = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let trace = self.run_cell(c, inputs);
            inputs = trace.hs.clone();
            traces.push(trace);
        }
        let hw = &self.params[self.head_w..self.head_b];
        let hb = self.params[self.head_b];
        let last = &traces.last().expect("at least one cell").hs[self.steps - 1];
        let pred = last
            .rows()
            .into_iter()
            .map(|r| hb + r.iter().zip(hw).map(|(a, w)| a * w).sum::<f64>())
            .collect();
        (traces, pred)
    }

    /// Backpropagates one cell; `dh_above[t]` is the loss gradient flowing
    /// into `hs[t]` from above. Returns the gradient for each step input.
    fn backward_cell(&self, c: &Cell, tr: &CellTrace, dh_above: &[Array2<f64>], grad: &mut [f64]) -> Vec<Array2<f64>> {
        let h = c.hidden;
        let n = dh_above[0].nrows();
        let w = view2(&self.params, c.w, c.fan_in, 4 * h);
        let u = view2(&self.params, c.u, h, 4 * h);
        let mut dh_next = Array2::<f64>::zeros((n, h));
        let mut dc_next = Array2::<f64>::zeros((n, h));
        let mut dxs = vec![Array2::zeros((0, 0)); self.steps];
        let zeros = Array2::<f64>::zeros((n, h));
        let mut dz = Array2::<f64>::zeros((n, 4 * h));
        for t in (0..self.steps).rev() {
            let gates = &tr.gates[t];
            let tc = &tr.tanh_cs[t];
            let c_prev = if t > 0 { &tr.cs[t - 1] } else { &zeros };
            for r in 0..n {
                for j in 0..h {
                    let (i, f, g, o) = (gates[[r, j]], gates[[r, h + j]], gates[[r, 2 * h + j]], gates[[r, 3 * h + j]]);
                    let dh = dh_above[t][[r, j]] + dh_next[[r, j]];
                    let tcv = tc[[r, j]];
                    let d_o = dh * tcv;
                    let dc = dh * o * (1.0 - tcv * tcv) + dc_next[[r, j]];
                    dz[[r, j]] = dc * g * i * (1.0 - i);
                    dz[[r, h + j]] = dc * c_prev[[r, j]] * f * (1.0 - f);
                    dz[[r, 2 * h + j]] = dc * i * (1.0 - g * g);
                    dz[[r, 3 * h + j]] = d_o * o * (1.0 - o);
                    dc_next[[r, j]] = dc * f;
                }
            }
            general_mat_mul(1.0, &tr.inputs[t].t(), &dz, 1.0, &mut view2_mut(grad, c.w, c.fan_in, 4 * h));
            if t > 0 {
                general_mat_mul(1.0, &tr.hs[t - 1].t(), &dz, 1.0, &mut view2_mut(grad, c.u, h, 4 * h));
            }
            for (g, s) in grad[c.b..c.b + 4 * h].iter_mut().zip(dz.sum_axis(Axis(0))) {
                *g += s;
            }
            dxs[t] = dz.dot(&w.t());
            dh_next = dz.dot(&u.t());
        }
        dxs
    }

    /// Forward pass on an explicit `(samples, steps, features)` tensor.
    pub fn predict_sequences(&self, x: ArrayView3<f64>) -> Result<Vec<f64>> {
        let (n, t, p) = x.dim();
        if t != self.steps || p != self.features {
            return Err(Error::Shape(format!(
                "expected (_, {}, {}), got ({n}, {t}, {p})",
                self.steps, self.features
            )));
        }
        let flat: Array3<f64> = x.to_owned();
        let flat = flat
            .into_shape_with_order((n, t * p))
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.predict(flat.view()))
    }
}

impl Network for Lstm {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_width(&self) -> usize {
        self.steps * self.features
    }

    fn forward_backward(&self, x: ArrayView2<f64>, y: &[f64], grad: &mut [f64]) -> (f64, BatchStats) {
        grad.fill(0.0);
        let n = x.nrows();
        let nf = n as f64;
        let (traces, pred) = self.forward(x);
        let mut loss = 0.0;
        let dpred: Vec<f64> = pred
            .iter()
            .zip(y)
            .map(|(p, t)| {
                let d = p - t;
                loss += d * d;
                2.0 * d / nf
            })
            .collect();
        loss /= nf;

        let top = self.cells.last().expect("at least one cell");
        let last = &traces.last().expect("trace").hs[self.steps - 1];
        for (r, dp) in dpred.iter().enumerate() {
            for j in 0..top.hidden {
                grad[self.head_w + j] += dp * last[[r, j]];
            }
        }
        grad[self.head_b] = dpred.iter().sum();

        let hw = self.params[self.head_w..self.head_b].to_vec();
        let mut dh: Vec<Array2<f64>> = (0..self.steps).map(|_| Array2::zeros((n, top.hidden))).collect();
        dh[self.steps - 1] = Array2::from_shape_fn((n, top.hidden), |(r, j)| dpred[r] * hw[j]);
        for (c, tr) in self.cells.iter().zip(&traces).rev() {
            dh = self.backward_cell(c, tr, &dh, grad);
        }
        (loss, BatchStats::default())
    }

    fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.forward(x).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::network::gradient_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_and_inputs_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Lstm::new(3, 2, &LstmArch { hidden: vec![4] }, &mut rng);
        net.params_mut().fill(0.0);
        let out = net.predict(Array2::zeros((5, 6)).view());
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reshape_matches_window_layout() {
        let x = Array2::from_shape_fn((3833, 70), |(r, c)| (r * 70 + c) as f64);
        let t = reshape_sequences(x.view(), 7, 10).unwrap();
        assert_eq!(t.dim(), (3833, 7, 10));
        assert_eq!(t[[5, 3, 2]], x[[5, 32]]);
        assert!(reshape_sequences(x.view(), 7, 9).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // 2 features, hidden 2: 16 + 16 + 8 + 3 = 43 parameters.
            let net = Lstm::new(3, 2, &LstmArch { hidden: vec![2] }, &mut rng);
            assert_eq!(net.n_params(), 43);
            let x = Array2::from_shape_fn((4, 6), |_| rng.random_range(-1.0..1.0));
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let err = gradient_check(&net, x.view(), &y, 1e-5, 1e-6);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn stacked_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Lstm::new(2, 1, &LstmArch { hidden: vec![2, 1] }, &mut rng);
        let x = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(gradient_check(&net, x.view(), &y, 1e-5, 1e-6) < 1e-4);
    }
}
