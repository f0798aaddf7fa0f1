//! Layer primitives with hand-written backward passes.
//!
//! Sequences are 2-D tensors laid out `[time, features]`. Backward functions
//! accumulate parameter gradients into caller-owned tensors so a batch can be
//! reduced in a fixed order.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor};

/// One convolution group: `filters` kernels of a single `width`.
/// `weight` is `[width, in_dim, filters]`, `bias` is `[filters]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub width: usize,
    pub weight: Tensor,
    pub bias: Tensor,
}

impl ConvLayer {
    pub fn zeros(width: usize, in_dim: usize, filters: usize) -> Self {
        Self {
            width,
            weight: Tensor::zeros(vec![width, in_dim, filters]),
            bias: Tensor::zeros(vec![filters]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn filters(&self) -> usize {
        self.weight.shape()[2]
    }
}

/// Valid cross-correlation over time plus bias.
pub fn conv1d_forward(input: &Tensor, conv: &ConvLayer) -> Result<Tensor, NeuralError> {
    let (seq_len, dim) = (input.rows(), input.cols());
    let (width, filters) = (conv.width, conv.filters());
    if dim != conv.in_dim() {
        return Err(NeuralError::ShapeMismatch(format!(
            "conv{width} expects {} input features, got {dim}",
            conv.in_dim()
        )));
    }
    if seq_len < width {
        return Err(NeuralError::ShapeMismatch(format!(
            "sequence of length {seq_len} is shorter than kernel width {width}"
        )));
    }
    let out_len = seq_len - width + 1;
    let x = input.data();
    let w = conv.weight.data();
    let mut out = Tensor::zeros(vec![out_len, filters]);
    for (t, out_row) in out.data_mut().chunks_exact_mut(filters).enumerate() {
        out_row.copy_from_slice(conv.bias.data());
        for k in 0..width {
            let x_row = &x[(t + k) * dim..(t + k + 1) * dim];
            for (d, &xv) in x_row.iter().enumerate() {
                let w_row = &w[(k * dim + d) * filters..(k * dim + d + 1) * filters];
                for (o, &wv) in out_row.iter_mut().zip(w_row) {
                    *o += xv * wv;
                }
            }
        }
    }
    Ok(out)
}

/// Returns the gradient w.r.t. `input`; parameter gradients are accumulated.
pub fn conv1d_backward(
    input: &Tensor,
    conv: &ConvLayer,
    grad_out: &Tensor,
    grad_weight: &mut Tensor,
    grad_bias: &mut Tensor,
) -> Tensor {
    let dim = input.cols();
    let (width, filters) = (conv.width, conv.filters());
    let x = input.data();
    let w = conv.weight.data();
    let mut grad_in = Tensor::zeros_like(input);
    {
        let gx = grad_in.data_mut();
        let gw = grad_weight.data_mut();
        let gb = grad_bias.data_mut();
        for (t, go_row) in grad_out.data().chunks_exact(filters).enumerate() {
            for (b, &g) in gb.iter_mut().zip(go_row) {
                *b += g;
            }
            for k in 0..width {
                let base = (t + k) * dim;
                for d in 0..dim {
                    let off = (k * dim + d) * filters;
                    let xv = x[base + d];
                    let mut acc = 0.0;
                    for f in 0..filters {
                        gw[off + f] += xv * go_row[f];
                        acc += w[off + f] * go_row[f];
                    }
                    gx[base + d] += acc;
                }
            }
        }
    }
    grad_in
}

/// Max over consecutive windows of `pool` rows; the last window may be short.
/// The second value holds, per output element, the input row that won
/// (first occurrence on ties).
pub fn maxpool1d(input: &Tensor, pool: usize) -> (Tensor, Vec<usize>) {
    let (t, f) = (input.rows(), input.cols());
    let pool = pool.max(1);
    let out_len = t.div_ceil(pool);
    let mut out = Tensor::zeros(vec![out_len, f]);
    let mut argmax = vec![0usize; out_len * f];
    for o in 0..out_len {
        let start = o * pool;
        let end = (start + pool).min(t);
        for c in 0..f {
            let mut best = start;
            let mut best_val = input.get(start, c);
            for r in start + 1..end {
                let v = input.get(r, c);
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            out.data_mut()[o * f + c] = best_val;
            argmax[o * f + c] = best;
        }
    }
    (out, argmax)
}

pub fn maxpool1d_backward(grad_out: &Tensor, argmax: &[usize], input_rows: usize) -> Tensor {
    let f = grad_out.cols();
    let mut grad_in = Tensor::zeros(vec![input_rows, f]);
    for (i, &g) in grad_out.data().iter().enumerate() {
        let c = i % f;
        grad_in.data_mut()[argmax[i] * f + c] += g;
    }
    grad_in
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&x| x.max(0.0)).collect();
    Tensor::from_vec(input.shape().to_vec(), data)
}

/// Gates the gradient by the sign of the forward *output*.
pub fn relu_backward(output: &Tensor, grad: &mut Tensor) {
    for (g, &y) in grad.data_mut().iter_mut().zip(output.data()) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Fully connected layer; `weight` is `[in, out]` so each output unit owns a
/// column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![inputs, outputs]),
            bias: Tensor::zeros(vec![outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n_out = self.outputs();
        let mut y = self.bias.data().to_vec();
        for (i, &xv) in x.iter().enumerate() {
            let w_row = &self.weight.data()[i * n_out..(i + 1) * n_out];
            for (o, &w) in y.iter_mut().zip(w_row) {
                *o += xv * w;
            }
        }
        y
    }

    pub fn backward(&self, x: &[f64], grad_y: &[f64], grad: &mut DenseLayer) -> Vec<f64> {
        let n_out = self.outputs();
        for (b, &g) in grad.bias.data_mut().iter_mut().zip(grad_y) {
            *b += g;
        }
        let mut grad_x = vec![0.0; x.len()];
        for (i, &xv) in x.iter().enumerate() {
            let off = i * n_out;
            let w_row = &self.weight.data()[off..off + n_out];
            let gw_row = &mut grad.weight.data_mut()[off..off + n_out];
            let mut acc = 0.0;
            for o in 0..n_out {
                gw_row[o] += xv * grad_y[o];
                acc += w_row[o] * grad_y[o];
            }
            grad_x[i] = acc;
        }
        grad_x
    }
}

/// LSTM weights with gate blocks ordered input, forget, candidate, output.
/// `input_weight` is `[in_dim, 4H]`, `recurrent_weight` is `[H, 4H]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub input_weight: Tensor,
    pub recurrent_weight: Tensor,
    pub bias: Tensor,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Activated gates per step, `[T, 4H]` in i, f, g, o order.
    pub gates: Vec<f64>,
    /// Cell states `[T, H]`.
    pub cells: Vec<f64>,
    /// Hidden states `[T, H]`.
    pub hidden: Tensor,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmLayer {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        Self {
            input_weight: Tensor::zeros(vec![in_dim, 4 * hidden]),
            recurrent_weight: Tensor::zeros(vec![hidden, 4 * hidden]),
            bias: Tensor::zeros(vec![4 * hidden]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.recurrent_weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.input_weight.rows()
    }

    /// Runs the recurrence over every row of `inputs` from zero state.
    pub fn forward(&self, inputs: &Tensor) -> Result<LstmCache, NeuralError> {
        let (steps, dim) = (inputs.rows(), inputs.cols());
        let h = self.hidden_size();
        if steps == 0 {
            return Err(NeuralError::ShapeMismatch("LSTM input sequence is empty".into()));
        }
        if dim != self.in_dim() {
            return Err(NeuralError::ShapeMismatch(format!(
                "LSTM expects {} input features, got {dim}",
                self.in_dim()
            )));
        }
        let g4 = 4 * h;
        let wx = self.input_weight.data();
        let wh = self.recurrent_weight.data();
        let mut gates = vec![0.0; steps * g4];
        let mut cells = vec![0.0; steps * h];
        let mut hidden = Tensor::zeros(vec![steps, h]);
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut z = vec![0.0; g4];
        for t in 0..steps {
            z.copy_from_slice(self.bias.data());
            for (d, &xv) in inputs.row(t).iter().enumerate() {
                for (zj, &w) in z.iter_mut().zip(&wx[d * g4..(d + 1) * g4]) {
                    *zj += xv * w;
                }
            }
            for (k, &hv) in h_prev.iter().enumerate() {
                for (zj, &w) in z.iter_mut().zip(&wh[k * g4..(k + 1) * g4]) {
                    *zj += hv * w;
                }
            }
            let gate = &mut gates[t * g4..(t + 1) * g4];
            for j in 0..h {
                let i_g = sigmoid(z[j]);
                let f_g = sigmoid(z[h + j]);
                let c_g = z[2 * h + j].tanh();
                let o_g = sigmoid(z[3 * h + j]);
                gate[j] = i_g;
                gate[h + j] = f_g;
                gate[2 * h + j] = c_g;
                gate[3 * h + j] = o_g;
                let c = f_g * c_prev[j] + i_g * c_g;
                cells[t * h + j] = c;
                c_prev[j] = c;
                h_prev[j] = o_g * c.tanh();
            }
            hidden.row_mut(t).copy_from_slice(&h_prev);
        }
        Ok(LstmCache { gates, cells, hidden })
    }

    /// Backpropagates `grad_hidden` (`[T, H]`, gradient on every hidden
    /// state) through time. Returns the gradient w.r.t. the inputs.
    pub fn backward(&self, inputs: &Tensor, cache: &LstmCache, grad_hidden: &Tensor, grad: &mut LstmLayer) -> Tensor {
        let (steps, dim) = (inputs.rows(), inputs.cols());
        let h = self.hidden_size();
        let g4 = 4 * h;
        let wx = self.input_weight.data();
        let wh = self.recurrent_weight.data();
        let mut grad_in = Tensor::zeros(vec![steps, dim]);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; g4];
        for t in (0..steps).rev() {
            let gate = &cache.gates[t * g4..(t + 1) * g4];
            let c = &cache.cells[t * h..(t + 1) * h];
            for j in 0..h {
                let (i_g, f_g, c_g, o_g) = (gate[j], gate[h + j], gate[2 * h + j], gate[3 * h + j]);
                let c_prev = if t == 0 { 0.0 } else { cache.cells[(t - 1) * h + j] };
                let tanh_c = c[j].tanh();
                let dh = grad_hidden.get(t, j) + dh_next[j];
                let d_o = dh * tanh_c;
                let dc = dh * o_g * (1.0 - tanh_c * tanh_c) + dc_next[j];
                dz[j] = dc * c_g * i_g * (1.0 - i_g);
                dz[h + j] = dc * c_prev * f_g * (1.0 - f_g);
                dz[2 * h + j] = dc * i_g * (1.0 - c_g * c_g);
                dz[3 * h + j] = d_o * o_g * (1.0 - o_g);
                dc_next[j] = dc * f_g;
            }
            for (b, &g) in grad.bias.data_mut().iter_mut().zip(&dz) {
                *b += g;
            }
            let x_row = inputs.row(t);
            let gwx = grad.input_weight.data_mut();
            let gx_row = &mut grad_in.data_mut()[t * dim..(t + 1) * dim];
            for d in 0..dim {
                let off = d * g4;
                let mut acc = 0.0;
                for j in 0..g4 {
                    gwx[off + j] += x_row[d] * dz[j];
                    acc += wx[off + j] * dz[j];
                }
                gx_row[d] = acc;
            }
            let gwh = grad.recurrent_weight.data_mut();
            for (k, dh) in dh_next.iter_mut().enumerate() {
                let h_prev = if t == 0 { 0.0 } else { cache.hidden.get(t - 1, k) };
                let off = k * g4;
                let mut acc = 0.0;
                for j in 0..g4 {
                    gwh[off + j] += h_prev * dz[j];
                    acc += wh[off + j] * dz[j];
                }
                *dh = acc;
            }
        }
        grad_in
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(logits)[target]` computed through log-sum-exp.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}
