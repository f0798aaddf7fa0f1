//! Adadelta optimizer and the max-norm weight constraint.
//!
//! ```text
//! E[g²]  ← ρ·E[g²] + (1−ρ)·g²
//! Δ      ← −√(E[Δ²] + ε) / √(E[g²] + ε) · g
//! E[Δ²]  ← ρ·E[Δ²] + (1−ρ)·Δ²
//! θ      ← θ + Δ
//! ```

use serde::{Deserialize, Serialize};

use super::model::Parameters;
use super::{NeuralError, Tensor};

pub const DEFAULT_RHO: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Applies one Adadelta update element-wise. All slices must have equal length.
pub fn adadelta_update(param: &mut [f64], grad: &[f64], sq_grad: &mut [f64], sq_update: &mut [f64], rho: f64, epsilon: f64) {
    for i in 0..param.len() {
        let g = grad[i];
        sq_grad[i] = rho * sq_grad[i] + (1.0 - rho) * g * g;
        let delta = -((sq_update[i] + epsilon).sqrt() / (sq_grad[i] + epsilon).sqrt()) * g;
        sq_update[i] = rho * sq_update[i] + (1.0 - rho) * delta * delta;
        param[i] += delta;
    }
}

/// Decaying averages of squared gradients and squared updates, one pair of
/// accumulators per parameter tensor in [`Parameters::tensors`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaState {
    pub rho: f64,
    pub epsilon: f64,
    pub sq_grad: Vec<Tensor>,
    pub sq_update: Vec<Tensor>,
}

impl AdadeltaState {
    pub fn new(params: &Parameters, rho: f64, epsilon: f64) -> Self {
        let zeros: Vec<Tensor> = params.tensors().into_iter().map(|(_, t)| Tensor::zeros_like(t)).collect();
        Self {
            rho,
            epsilon,
            sq_grad: zeros.clone(),
            sq_update: zeros,
        }
    }

    pub fn step(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<(), NeuralError> {
        let grad_tensors = grads.tensors();
        let mut param_tensors = params.tensors_mut();
        if grad_tensors.len() != param_tensors.len() || self.sq_grad.len() != param_tensors.len() {
            return Err(NeuralError::ShapeMismatch("optimizer state does not match parameters".into()));
        }
        for (i, ((name, param), (_, grad))) in param_tensors.iter_mut().zip(&grad_tensors).enumerate() {
            if param.shape() != grad.shape() || param.shape() != self.sq_grad[i].shape() {
                return Err(NeuralError::ShapeMismatch(format!("gradient shape mismatch for {name}")));
            }
            adadelta_update(
                param.data_mut(),
                grad.data(),
                self.sq_grad[i].data_mut(),
                self.sq_update[i].data_mut(),
                self.rho,
                self.epsilon,
            );
        }
        Ok(())
    }
}

/// Rescales every column (output unit) of a `[in, out]` weight matrix whose
/// l2 norm exceeds `max_norm` down to exactly `max_norm`.
pub fn clip_l2(weight: &mut Tensor, max_norm: f64) {
    let (rows, cols) = (weight.rows(), weight.cols());
    let data = weight.data_mut();
    for c in 0..cols {
        let norm = (0..rows).map(|r| data[r * cols + c].powi(2)).sum::<f64>().sqrt();
        if norm > max_norm {
            let factor = max_norm / norm;
            for r in 0..rows {
                data[r * cols + c] *= factor;
            }
        }
    }
}
