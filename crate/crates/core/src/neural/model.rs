//! The multichannel CNN-LSTM emotion classifier.
//!
//! Each of the two embedding channels (one frozen, one fine-tuned) runs
//! through the shared convolution groups, ReLU and max pooling; the pooled
//! maps of all kernel widths are concatenated along time and the two channels
//! are summed. An LSTM reads that sequence and its final hidden state feeds a
//! ReLU dense layer, dropout and the softmax output over the eight emotions.
//!
//! With [`LayerOrder::LstmCnn`] the LSTM runs first over each channel's
//! embeddings, the convolutions run over its hidden states, and the summed
//! pooled maps are reduced by a max over time before the dense layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    conv1d_backward, conv1d_forward, cross_entropy, maxpool1d, maxpool1d_backward, relu, relu_backward, softmax,
    ConvLayer, DenseLayer, LstmCache, LstmLayer,
};
use super::{NeuralError, Tensor};
use crate::embeddings::EmbeddingMatrix;
use crate::emotion::{EmotionLabel, NUM_EMOTIONS};
use crate::textprep::{EncodedSentence, PAD_INDEX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerOrder {
    CnnLstm,
    LstmCnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub max_len: usize,
    pub kernel_widths: Vec<usize>,
    pub filter_count: usize,
    pub pool_size: usize,
    pub hidden_size: usize,
    pub dense_size: usize,
    pub dropout_rate: f64,
    /// Column-norm bound applied to the dense and output weights.
    pub max_norm: f64,
    pub layer_order: LayerOrder,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 2,
            embedding_dim: 200,
            max_len: 40,
            kernel_widths: vec![2, 3, 5, 6, 8],
            filter_count: 64,
            pool_size: 4,
            hidden_size: 128,
            dense_size: 128,
            dropout_rate: 0.5,
            max_norm: 3.0,
            layer_order: LayerOrder::CnnLstm,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |msg: String| Err(NeuralError::ShapeMismatch(msg));
        if self.vocab_size < 2 {
            return bad("vocabulary must hold at least the pad and OOV rows".into());
        }
        if self.kernel_widths.is_empty() || self.kernel_widths.contains(&0) {
            return bad(format!("invalid kernel widths {:?}", self.kernel_widths));
        }
        let widest = self.kernel_widths.iter().copied().max().unwrap_or(0);
        if self.max_len < widest {
            return bad(format!("max_len {} is shorter than kernel width {widest}", self.max_len));
        }
        if [self.embedding_dim, self.filter_count, self.pool_size, self.hidden_size, self.dense_size].contains(&0) {
            return bad("layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if self.max_norm.is_nan() || self.max_norm <= 0.0 {
            return bad(format!("max_norm {} must be positive", self.max_norm));
        }
        Ok(())
    }

    fn conv_input_dim(&self) -> usize {
        match self.layer_order {
            LayerOrder::CnnLstm => self.embedding_dim,
            LayerOrder::LstmCnn => self.hidden_size,
        }
    }

    fn lstm_input_dim(&self) -> usize {
        match self.layer_order {
            LayerOrder::CnnLstm => self.filter_count,
            LayerOrder::LstmCnn => self.embedding_dim,
        }
    }

    fn dense_input_dim(&self) -> usize {
        match self.layer_order {
            LayerOrder::CnnLstm => self.hidden_size,
            LayerOrder::LstmCnn => self.filter_count,
        }
    }

    /// Expected tensor shapes by parameter name, in [`Parameters::tensors`]
    /// order, followed by the static embedding.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let params = Parameters::zeros(self);
        let mut shapes: Vec<(String, Vec<usize>)> =
            params.tensors().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
        shapes.push((STATIC_EMBEDDING.to_string(), vec![self.vocab_size, self.embedding_dim]));
        shapes
    }
}

pub const STATIC_EMBEDDING: &str = "embedding.static";

/// Every trainable tensor of the model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub tunable_embedding: Tensor,
    pub conv: Vec<ConvLayer>,
    pub lstm: LstmLayer,
    pub dense: DenseLayer,
    pub output: DenseLayer,
}

impl Parameters {
    pub fn zeros(config: &ModelConfig) -> Self {
        let conv_in = config.conv_input_dim();
        Self {
            tunable_embedding: Tensor::zeros(vec![config.vocab_size, config.embedding_dim]),
            conv: config
                .kernel_widths
                .iter()
                .map(|&w| ConvLayer::zeros(w, conv_in, config.filter_count))
                .collect(),
            lstm: LstmLayer::zeros(config.lstm_input_dim(), config.hidden_size),
            dense: DenseLayer::zeros(config.dense_input_dim(), config.dense_size),
            output: DenseLayer::zeros(config.dense_size, NUM_EMOTIONS),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, t) in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    /// Named tensors in a fixed order shared by the optimizer and checkpoints.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![("embedding.tunable".to_string(), &self.tunable_embedding)];
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv{i}.w{}.weight", c.width), &c.weight));
            out.push((format!("conv{i}.w{}.bias", c.width), &c.bias));
        }
        out.push(("lstm.input_weight".into(), &self.lstm.input_weight));
        out.push(("lstm.recurrent_weight".into(), &self.lstm.recurrent_weight));
        out.push(("lstm.bias".into(), &self.lstm.bias));
        out.push(("dense.weight".into(), &self.dense.weight));
        out.push(("dense.bias".into(), &self.dense.bias));
        out.push(("output.weight".into(), &self.output.weight));
        out.push(("output.bias".into(), &self.output.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = vec![("embedding.tunable".to_string(), &mut self.tunable_embedding)];
        for (i, c) in self.conv.iter_mut().enumerate() {
            let width = c.width;
            out.push((format!("conv{i}.w{width}.weight"), &mut c.weight));
            out.push((format!("conv{i}.w{width}.bias"), &mut c.bias));
        }
        out.push(("lstm.input_weight".into(), &mut self.lstm.input_weight));
        out.push(("lstm.recurrent_weight".into(), &mut self.lstm.recurrent_weight));
        out.push(("lstm.bias".into(), &mut self.lstm.bias));
        out.push(("dense.weight".into(), &mut self.dense.weight));
        out.push(("dense.bias".into(), &mut self.dense.bias));
        out.push(("output.weight".into(), &mut self.output.weight));
        out.push(("output.bias".into(), &mut self.output.bias));
        out
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.all_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnLstmModel {
    pub config: ModelConfig,
    /// Frozen channel; never touched by training.
    pub static_embedding: Tensor,
    pub params: Parameters,
}

/// An encoded sentence with its gold label.
pub type Example = (EncodedSentence, EmotionLabel);

fn glorot(rng: &mut ChaCha8Rng, t: &mut Tensor, fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    t.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-limit..=limit));
}

struct ChannelCache {
    embedded: Tensor,
    /// LSTM activations over the embeddings (LSTM-CNN order only).
    lstm: Option<LstmCache>,
    conv_input: Tensor,
    /// Post-ReLU convolution maps per kernel width.
    activations: Vec<Tensor>,
    pool_argmax: Vec<Vec<usize>>,
    pooled_lens: Vec<usize>,
}

struct ForwardCache {
    indices: Vec<usize>,
    channels: Vec<ChannelCache>,
    summed: Tensor,
    top_lstm: Option<LstmCache>,
    time_argmax: Option<Vec<usize>>,
    features: Vec<f64>,
    dense_out: Vec<f64>,
    dropout_scale: Option<Vec<f64>>,
    dropped: Vec<f64>,
    logits: Vec<f64>,
}

impl CnnLstmModel {
    /// Fresh model whose two channels both start from `embedding`; the other
    /// weights are Glorot-uniform from `seed`, LSTM forget biases start at 1.
    pub fn new(config: ModelConfig, embedding: &EmbeddingMatrix, seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        if embedding.rows != config.vocab_size || embedding.dim != config.embedding_dim {
            return Err(NeuralError::ShapeMismatch(format!(
                "embedding is {}x{}, config expects {}x{}",
                embedding.rows, embedding.dim, config.vocab_size, config.embedding_dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Parameters::zeros(&config);
        params.tunable_embedding = embedding.to_tensor();
        params.tunable_embedding.row_mut(PAD_INDEX).fill(0.0);
        let conv_in = config.conv_input_dim();
        for conv in &mut params.conv {
            glorot(&mut rng, &mut conv.weight, conv.width * conv_in, config.filter_count);
        }
        let h = config.hidden_size;
        glorot(&mut rng, &mut params.lstm.input_weight, config.lstm_input_dim(), h);
        glorot(&mut rng, &mut params.lstm.recurrent_weight, h, h);
        params.lstm.bias.data_mut()[h..2 * h].fill(1.0);
        glorot(&mut rng, &mut params.dense.weight, config.dense_input_dim(), config.dense_size);
        glorot(&mut rng, &mut params.output.weight, config.dense_size, NUM_EMOTIONS);

        Ok(Self {
            static_embedding: params.tunable_embedding.clone(),
            config,
            params,
        })
    }

    /// Assembles a model from stored tensors, checking every shape.
    pub fn from_parts(config: ModelConfig, static_embedding: Tensor, params: Parameters) -> Result<Self, NeuralError> {
        let model = Self {
            config,
            static_embedding,
            params,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        self.config.validate()?;
        let mut actual: Vec<(String, Vec<usize>)> = self
            .params
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        actual.push((STATIC_EMBEDDING.into(), self.static_embedding.shape().to_vec()));
        let expected = self.config.tensor_shapes();
        if actual != expected {
            return Err(NeuralError::ShapeMismatch(format!(
                "model tensors {actual:?} do not match configuration {expected:?}"
            )));
        }
        let widths: Vec<usize> = self.params.conv.iter().map(|c| c.width).collect();
        if widths != self.config.kernel_widths {
            return Err(NeuralError::ShapeMismatch("kernel widths disagree with configuration".into()));
        }
        Ok(())
    }

    /// Probability vector over the eight emotions. Dropout is active only
    /// when `train_mode` is set; `rng` is not touched otherwise.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        sentence: &EncodedSentence,
        train_mode: bool,
        rng: &mut R,
    ) -> Result<[f64; NUM_EMOTIONS], NeuralError> {
        let cache = if train_mode {
            self.forward_cached(&sentence.indices, Some(rng))?
        } else {
            self.forward_cached::<R>(&sentence.indices, None)?
        };
        Ok(to_distribution(&softmax(&cache.logits)))
    }

    /// Inference-mode forward pass.
    pub fn predict_proba(&self, indices: &[usize]) -> Result<[f64; NUM_EMOTIONS], NeuralError> {
        let cache = self.forward_cached::<ChaCha8Rng>(indices, None)?;
        Ok(to_distribution(&softmax(&cache.logits)))
    }

    pub fn logits(&self, indices: &[usize]) -> Result<Vec<f64>, NeuralError> {
        Ok(self.forward_cached::<ChaCha8Rng>(indices, None)?.logits)
    }

    pub fn predict(&self, indices: &[usize]) -> Result<EmotionLabel, NeuralError> {
        let probs = self.predict_proba(indices)?;
        Ok(EmotionLabel::from_index(argmax(&probs)).expect("eight outputs"))
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss(&self, batch: &[&Example]) -> Result<f64, NeuralError> {
        let mut total = 0.0;
        for (sentence, label) in batch {
            total += cross_entropy(&self.logits(&sentence.indices)?, label.index());
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Mean cross-entropy over `batch` and its gradient for every trainable
    /// tensor. Examples are reduced in batch order. The static channel gets
    /// no gradient and the pad row of the tunable channel is held at zero.
    /// Passing `dropout` enables training-mode dropout drawn from it.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        batch: &[&Example],
        mut dropout: Option<&mut R>,
    ) -> Result<(f64, Parameters), NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let mut grads = self.params.zeros_like();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for (sentence, label) in batch {
            let cache = self.forward_cached(&sentence.indices, dropout.as_deref_mut())?;
            total += cross_entropy(&cache.logits, label.index());
            self.backward_one(&cache, label.index(), scale, &mut grads);
        }
        grads.tunable_embedding.row_mut(PAD_INDEX).fill(0.0);
        Ok((total * scale, grads))
    }

    fn embed(&self, table: &Tensor, indices: &[usize]) -> Tensor {
        let dim = self.config.embedding_dim;
        let mut out = Tensor::zeros(vec![indices.len(), dim]);
        for (t, &i) in indices.iter().enumerate() {
            out.row_mut(t).copy_from_slice(table.row(i));
        }
        out
    }

    fn forward_cached<R: Rng + ?Sized>(
        &self,
        indices: &[usize],
        dropout: Option<&mut R>,
    ) -> Result<ForwardCache, NeuralError> {
        let cfg = &self.config;
        if let Some(&bad) = indices.iter().find(|&&i| i >= cfg.vocab_size) {
            return Err(NeuralError::ShapeMismatch(format!(
                "token index {bad} outside vocabulary of {}",
                cfg.vocab_size
            )));
        }
        let mut channels = Vec::with_capacity(2);
        let mut summed: Option<Tensor> = None;
        for table in [&self.static_embedding, &self.params.tunable_embedding] {
            let embedded = self.embed(table, indices);
            let (lstm, conv_input) = match cfg.layer_order {
                LayerOrder::CnnLstm => (None, embedded.clone()),
                LayerOrder::LstmCnn => {
                    let cache = self.params.lstm.forward(&embedded)?;
                    let hidden = cache.hidden.clone();
                    (Some(cache), hidden)
                }
            };
            let mut activations = Vec::new();
            let mut pool_argmax = Vec::new();
            let mut pooled_lens = Vec::new();
            let mut pooled_all: Vec<f64> = Vec::new();
            for conv in &self.params.conv {
                let a = relu(&conv1d_forward(&conv_input, conv)?);
                let (pooled, arg) = maxpool1d(&a, cfg.pool_size);
                pooled_lens.push(pooled.rows());
                pooled_all.extend_from_slice(pooled.data());
                activations.push(a);
                pool_argmax.push(arg);
            }
            let steps = pooled_lens.iter().sum();
            let pooled = Tensor::from_vec(vec![steps, cfg.filter_count], pooled_all);
            match &mut summed {
                None => summed = Some(pooled),
                Some(s) => s.add_assign(&pooled),
            }
            channels.push(ChannelCache {
                embedded,
                lstm,
                conv_input,
                activations,
                pool_argmax,
                pooled_lens,
            });
        }
        let summed = summed.expect("two channels");

        let (top_lstm, time_argmax, features) = match cfg.layer_order {
            LayerOrder::CnnLstm => {
                let cache = self.params.lstm.forward(&summed)?;
                let last = cache.hidden.row(cache.hidden.rows() - 1).to_vec();
                (Some(cache), None, last)
            }
            LayerOrder::LstmCnn => {
                let f = summed.cols();
                let mut best = vec![0usize; f];
                let mut feat = summed.row(0).to_vec();
                for t in 1..summed.rows() {
                    for (c, &v) in summed.row(t).iter().enumerate() {
                        if v > feat[c] {
                            feat[c] = v;
                            best[c] = t;
                        }
                    }
                }
                (None, Some(best), feat)
            }
        };

        let dense_out: Vec<f64> = self.params.dense.forward(&features).into_iter().map(|x| x.max(0.0)).collect();
        let (dropout_scale, dropped) = match dropout {
            Some(rng) if cfg.dropout_rate > 0.0 => {
                let keep = 1.0 - cfg.dropout_rate;
                let scale: Vec<f64> = dense_out
                    .iter()
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                let dropped = dense_out.iter().zip(&scale).map(|(x, s)| x * s).collect();
                (Some(scale), dropped)
            }
            _ => (None, dense_out.clone()),
        };
        let logits = self.params.output.forward(&dropped);
        Ok(ForwardCache {
            indices: indices.to_vec(),
            channels,
            summed,
            top_lstm,
            time_argmax,
            features,
            dense_out,
            dropout_scale,
            dropped,
            logits,
        })
    }

    fn backward_one(&self, cache: &ForwardCache, target: usize, scale: f64, grads: &mut Parameters) {
        let cfg = &self.config;
        let p = &self.params;

        let mut d_logits = softmax(&cache.logits);
        d_logits[target] -= 1.0;
        d_logits.iter_mut().for_each(|g| *g *= scale);

        let mut d_dense = p.output.backward(&cache.dropped, &d_logits, &mut grads.output);
        if let Some(mask) = &cache.dropout_scale {
            d_dense.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
        }
        d_dense
            .iter_mut()
            .zip(&cache.dense_out)
            .for_each(|(g, &y)| if y <= 0.0 { *g = 0.0 });
        let d_features = p.dense.backward(&cache.features, &d_dense, &mut grads.dense);

        let d_summed = match cfg.layer_order {
            LayerOrder::CnnLstm => {
                let top = cache.top_lstm.as_ref().expect("CNN-LSTM caches its LSTM");
                let mut d_hidden = Tensor::zeros_like(&top.hidden);
                let last = d_hidden.rows() - 1;
                d_hidden.row_mut(last).copy_from_slice(&d_features);
                p.lstm.backward(&cache.summed, top, &d_hidden, &mut grads.lstm)
            }
            LayerOrder::LstmCnn => {
                let arg = cache.time_argmax.as_ref().expect("LSTM-CNN caches its time argmax");
                let mut d = Tensor::zeros_like(&cache.summed);
                let f = d.cols();
                for (c, (&t, &g)) in arg.iter().zip(&d_features).enumerate() {
                    d.data_mut()[t * f + c] += g;
                }
                d
            }
        };

        let f = cfg.filter_count;
        for (ch_index, ch) in cache.channels.iter().enumerate() {
            let mut d_conv_input = Tensor::zeros_like(&ch.conv_input);
            let mut offset = 0;
            for (i, conv) in p.conv.iter().enumerate() {
                let len = ch.pooled_lens[i];
                let d_pooled =
                    Tensor::from_vec(vec![len, f], d_summed.data()[offset * f..(offset + len) * f].to_vec());
                offset += len;
                let act = &ch.activations[i];
                let mut d_act = maxpool1d_backward(&d_pooled, &ch.pool_argmax[i], act.rows());
                relu_backward(act, &mut d_act);
                let g = &mut grads.conv[i];
                let dx = conv1d_backward(&ch.conv_input, conv, &d_act, &mut g.weight, &mut g.bias);
                d_conv_input.add_assign(&dx);
            }
            let d_embedded = match (&ch.lstm, cfg.layer_order) {
                (Some(lstm_cache), LayerOrder::LstmCnn) => {
                    p.lstm.backward(&ch.embedded, lstm_cache, &d_conv_input, &mut grads.lstm)
                }
                _ => d_conv_input,
            };
            // channel 0 is the static table
            if ch_index == 1 {
                for (t, &idx) in cache.indices.iter().enumerate() {
                    if idx == PAD_INDEX {
                        continue;
                    }
                    let src = d_embedded.row(t);
                    for (g, &d) in grads.tunable_embedding.row_mut(idx).iter_mut().zip(src) {
                        *g += d;
                    }
                }
            }
        }
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn to_distribution(probs: &[f64]) -> [f64; NUM_EMOTIONS] {
    let mut out = [0.0; NUM_EMOTIONS];
    out.copy_from_slice(probs);
    out
}
