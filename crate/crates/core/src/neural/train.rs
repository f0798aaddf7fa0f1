use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adadelta::{clip_l2, AdadeltaState, DEFAULT_EPSILON, DEFAULT_RHO};
use super::model::{CnnLstmModel, Example};
use super::NeuralError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub rho: f64,
    pub epsilon: f64,
    /// Stop after this many epochs without a validation-accuracy gain.
    /// `None` trains for every epoch.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            batch_size: 128,
            seed: 42,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's batches (dropout on).
    pub loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub stopped_early: bool,
}

impl History {
    /// `epoch,loss,val_accuracy`; an empty accuracy field means no
    /// validation data.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val_accuracy\n");
        for r in &self.epochs {
            let acc = r.val_accuracy.map(|a| format!("{a}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r.epoch, r.loss, acc);
        }
        out
    }
}

pub fn accuracy(model: &CnnLstmModel, examples: &[Example]) -> Result<f64, NeuralError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (sentence, label) in examples {
        if model.predict(&sentence.indices)? == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Mini-batch Adadelta training. Examples are reshuffled every epoch from a
/// generator seeded with `config.seed`, which also drives dropout; the last
/// partial batch is kept. After each step the dense and output weight
/// columns are clipped to `model.config.max_norm`.
pub fn train(
    model: &mut CnnLstmModel,
    train_set: &[Example],
    validation: &[Example],
    config: &TrainConfig,
) -> Result<History, NeuralError> {
    model.validate()?;
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok(history);
    }
    if train_set.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let batch_size = config.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = AdadeltaState::new(&model.params, config.rho, config.epsilon);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best_acc = f64::NEG_INFINITY;
    let mut since_best = 0usize;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, grads) = model.loss_and_gradients(&batch, Some(&mut rng))?;
            optimizer.step(&mut model.params, &grads)?;
            let max_norm = model.config.max_norm;
            clip_l2(&mut model.params.dense.weight, max_norm);
            clip_l2(&mut model.params.output.weight, max_norm);
            loss_sum += loss * batch.len() as f64;
        }
        if !model.params.all_finite() {
            return Err(NeuralError::NonFinite(format!("parameters diverged in epoch {epoch}")));
        }
        let val_accuracy = if validation.is_empty() {
            None
        } else {
            Some(accuracy(model, validation)?)
        };
        let loss = loss_sum / train_set.len() as f64;
        log::debug!("epoch {epoch}: loss {loss:.6} val_accuracy {val_accuracy:?}");
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            val_accuracy,
        });

        if let (Some(patience), Some(acc)) = (config.patience, val_accuracy) {
            if acc > best_acc {
                best_acc = acc;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(history)
}
