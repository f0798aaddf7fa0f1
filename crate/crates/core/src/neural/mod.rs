//! Dense tensor core and the CNN-LSTM classifier with hand-written
//! backpropagation, Adadelta and training loop. Everything runs in `f64`.

pub mod adadelta;
pub mod checkpoint;
pub mod layers;
pub mod model;
mod tensor;
pub mod train;

pub use adadelta::{adadelta_update, clip_l2, AdadeltaState};
pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, CheckpointError, CheckpointMeta};
pub use layers::{conv1d_forward, maxpool1d, softmax, ConvLayer, DenseLayer, LstmLayer};
pub use model::{CnnLstmModel, Example, LayerOrder, ModelConfig, Parameters};
pub use tensor::Tensor;
pub use train::{accuracy, train, EpochRecord, History, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("non-finite values: {0}")]
    NonFinite(String),
}
