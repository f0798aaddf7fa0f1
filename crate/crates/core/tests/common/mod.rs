//! Test-only reference implementations. They use plain nested loops over
//! `Vec<Vec<f64>>` and read parameters through their documented layouts, so
//! they share no code path with the library's layers.
#![allow(dead_code)]

use afeng::embeddings::build_matrix;
use afeng::neural::{CnnLstmModel, Example, LayerOrder, ModelConfig, Tensor};
use afeng::textprep::{EncodedSentence, Vocabulary};
use afeng::EmotionLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

pub type Matrix = Vec<Vec<f64>>;

pub fn to_matrix(t: &Tensor) -> Matrix {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// out[t][f] = b[f] + sum_k sum_d x[t+k][d] * W[k][d][f]
pub fn oracle_conv(x: &Matrix, weight: &[f64], bias: &[f64], width: usize) -> Matrix {
    let dim = x[0].len();
    let filters = bias.len();
    let mut out = vec![vec![0.0; filters]; x.len() - width + 1];
    for (t, row) in out.iter_mut().enumerate() {
        for (f, cell) in row.iter_mut().enumerate() {
            let mut acc = bias[f];
            for k in 0..width {
                for d in 0..dim {
                    acc += x[t + k][d] * weight[k * dim * filters + d * filters + f];
                }
            }
            *cell = acc;
        }
    }
    out
}

pub fn oracle_maxpool(x: &Matrix, pool: usize) -> Matrix {
    x.chunks(pool)
        .map(|window| {
            (0..x[0].len())
                .map(|f| window.iter().map(|r| r[f]).fold(f64::NEG_INFINITY, f64::max))
                .collect()
        })
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// All hidden states of a zero-initialized LSTM; gate blocks i, f, g, o.
pub fn oracle_lstm(xs: &Matrix, wx: &Matrix, wh: &Matrix, b: &[f64]) -> Matrix {
    let h_size = wh.len();
    let mut h = vec![0.0; h_size];
    let mut c = vec![0.0; h_size];
    let mut out = Vec::new();
    for x in xs {
        let pre = |gate: usize, j: usize, h: &[f64]| -> f64 {
            let col = gate * h_size + j;
            let mut z = b[col];
            for (d, xv) in x.iter().enumerate() {
                z += xv * wx[d][col];
            }
            for (k, hv) in h.iter().enumerate() {
                z += hv * wh[k][col];
            }
            z
        };
        let mut h_new = vec![0.0; h_size];
        for j in 0..h_size {
            let i_g = sig(pre(0, j, &h));
            let f_g = sig(pre(1, j, &h));
            let g_g = pre(2, j, &h).tanh();
            let o_g = sig(pre(3, j, &h));
            c[j] = f_g * c[j] + i_g * g_g;
            h_new[j] = o_g * c[j].tanh();
        }
        h = h_new;
        out.push(h.clone());
    }
    out
}

fn relu_m(m: Matrix) -> Matrix {
    m.into_iter().map(|r| r.into_iter().map(|v| v.max(0.0)).collect()).collect()
}

fn dense(x: &[f64], w: &Tensor, b: &Tensor) -> Vec<f64> {
    let w = to_matrix(w);
    (0..b.len()).map(|o| b.data()[o] + x.iter().enumerate().map(|(i, xv)| xv * w[i][o]).sum::<f64>()).collect()
}

/// Straight-line inference of the whole classifier (dropout off).
pub fn oracle_forward(model: &CnnLstmModel, indices: &[usize]) -> Vec<f64> {
    let cfg = &model.config;
    let p = &model.params;
    let lstm_wx = to_matrix(&p.lstm.input_weight);
    let lstm_wh = to_matrix(&p.lstm.recurrent_weight);
    let lstm_b = p.lstm.bias.data().to_vec();

    let mut summed: Option<Matrix> = None;
    for table in [&model.static_embedding, &p.tunable_embedding] {
        let emb: Matrix = indices.iter().map(|&i| table.row(i).to_vec()).collect();
        let conv_in = match cfg.layer_order {
            LayerOrder::CnnLstm => emb,
            LayerOrder::LstmCnn => oracle_lstm(&emb, &lstm_wx, &lstm_wh, &lstm_b),
        };
        let mut seq: Matrix = Vec::new();
        for conv in &p.conv {
            let z = oracle_conv(&conv_in, conv.weight.data(), conv.bias.data(), conv.width);
            seq.extend(oracle_maxpool(&relu_m(z), cfg.pool_size));
        }
        summed = Some(match summed {
            None => seq,
            Some(s) => s.iter().zip(&seq).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
        });
    }
    let summed = summed.unwrap();
    let features = match cfg.layer_order {
        LayerOrder::CnnLstm => oracle_lstm(&summed, &lstm_wx, &lstm_wh, &lstm_b).pop().unwrap(),
        LayerOrder::LstmCnn => (0..summed[0].len())
            .map(|f| summed.iter().map(|r| r[f]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    };
    let hidden: Vec<f64> = dense(&features, &p.dense.weight, &p.dense.bias).into_iter().map(|v| v.max(0.0)).collect();
    let logits = dense(&hidden, &p.output.weight, &p.output.bias);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// The small configuration used for gradient checks.
pub fn tiny_config(order: LayerOrder) -> ModelConfig {
    ModelConfig {
        vocab_size: 12,
        embedding_dim: 6,
        max_len: 7,
        kernel_widths: vec![2, 3],
        filter_count: 3,
        pool_size: 4,
        hidden_size: 5,
        dense_size: 4,
        dropout_rate: 0.5,
        max_norm: 3.0,
        layer_order: order,
    }
}

/// Random model where every parameter (biases included) is drawn from
/// `[-scale, scale]`, so no ReLU or max sits exactly on a tie.
pub fn random_model(config: ModelConfig, seed: u64, scale: f64) -> CnnLstmModel {
    let tokens: Vec<String> = (0..config.vocab_size - 2).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::build(&[tokens], 1);
    let emb = build_matrix(&vocab, &HashMap::new(), config.embedding_dim, seed);
    let mut model = CnnLstmModel::new(config, &emb, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (_, t) in model.params.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
    }
    let dim = model.config.embedding_dim;
    for v in model.static_embedding.data_mut().iter_mut().skip(dim) {
        *v = rng.random_range(-scale..scale);
    }
    // pad rows stay zero
    model.params.tunable_embedding.data_mut()[..dim].fill(0.0);
    model
}

pub fn random_examples(rng: &mut ChaCha8Rng, config: &ModelConfig, n: usize, allow_pad: bool) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let lo = if allow_pad { 0 } else { 1 };
            let indices: Vec<usize> = (0..config.max_len).map(|_| rng.random_range(lo..config.vocab_size)).collect();
            let label = EmotionLabel::from_index(rng.random_range(0..8)).unwrap();
            (
                EncodedSentence {
                    true_length: indices.iter().filter(|&&i| i != 0).count(),
                    indices,
                },
                label,
            )
        })
        .collect()
}

/// Central finite differences of the mean loss for every trainable element,
/// compared with the analytic gradient. Returns `(tensor, max relative error)`
/// per tensor, with relative error `|a-n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(model: &CnnLstmModel, batch: &[&Example], h: f64) -> Vec<(String, f64)> {
    let (_, analytic) = model.loss_and_gradients::<ChaCha8Rng>(batch, None).unwrap();
    let analytic: Vec<(String, Vec<f64>)> =
        analytic.tensors().into_iter().map(|(n, t)| (n, t.data().to_vec())).collect();
    let mut probe = model.clone();
    let mut report = Vec::new();
    for (ti, (name, grad)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for (i, &a) in grad.iter().enumerate() {
            if name == "embedding.tunable" && i < model.config.embedding_dim {
                // pad row is frozen by construction
                continue;
            }
            let original = probe.params.tensors()[ti].1.data()[i];
            probe.params.tensors_mut()[ti].1.data_mut()[i] = original + h;
            let plus = probe.loss(batch).unwrap();
            probe.params.tensors_mut()[ti].1.data_mut()[i] = original - h;
            let minus = probe.loss(batch).unwrap();
            probe.params.tensors_mut()[ti].1.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        report.push((name.clone(), worst));
    }
    report
}

/// `P(|T| <= t)` for Student's t with `nu` degrees of freedom, by the finite
/// trigonometric series (separate forms for odd and even `nu`).
pub fn student_t_central(t: f64, nu: usize) -> f64 {
    let theta = (t.abs() / (nu as f64).sqrt()).atan();
    let (s, c) = (theta.sin(), theta.cos());
    let c2 = c * c;
    if nu.is_multiple_of(2) {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..nu / 2 {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c2;
            sum += term;
        }
        s * sum
    } else {
        let mut series = 0.0;
        if nu > 1 {
            let (mut term, mut sum) = (c, c);
            for k in 1..(nu - 1) / 2 {
                term *= (2 * k) as f64 / (2 * k + 1) as f64 * c2;
                sum += term;
            }
            series = s * sum;
        }
        2.0 / std::f64::consts::PI * (theta + series)
    }
}

/// Pearson r by the textbook sums and its two-tailed p-value.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    let nu = x.len() - 2;
    let t = r * (nu as f64 / (1.0 - r * r)).sqrt();
    (r, 1.0 - student_t_central(t, nu))
}
