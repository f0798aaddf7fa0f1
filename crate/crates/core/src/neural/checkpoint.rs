//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "AFENG1"                      magic
//! u32 version                   currently 1
//! u32 n, n bytes                metadata JSON (emotion order, hyperparameters,
//!                               vocabulary hash, seed)
//! u32 tensor count
//! per tensor:
//!   u32 n, n bytes              name
//!   u32 rank, rank × u64        shape
//!   product(shape) × f64        row-major values
//! ```
//!
//! Loading parses and checks the whole file before building a model, so a
//! damaged file never yields a partial model.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CnnLstmModel, ModelConfig, Parameters, STATIC_EMBEDDING};
use super::train::TrainConfig;
use super::Tensor;
use crate::emotion::EmotionLabel;
use crate::textprep::PreprocessConfig;

pub const MAGIC: &[u8; 6] = b"AFENG1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint header does not match: {0}")]
    ShapeHeaderMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub emotion_order: Vec<String>,
    pub model: ModelConfig,
    pub training: Option<TrainConfig>,
    #[serde(default)]
    pub preprocess: Option<PreprocessConfig>,
    pub vocab_hash: String,
    pub seed: u64,
}

impl CheckpointMeta {
    pub fn new(model: &CnnLstmModel, training: Option<TrainConfig>, vocab_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            emotion_order: EmotionLabel::ALL.iter().map(|e| e.name().to_string()).collect(),
            model: model.config.clone(),
            training,
            preprocess: None,
            vocab_hash: vocab_hash.into(),
            seed,
        }
    }
}

pub fn encode_checkpoint(model: &CnnLstmModel, meta: &CheckpointMeta) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let meta_json = serde_json::to_vec(meta).expect("metadata serializes");
    out.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta_json);

    let mut tensors = model.params.tensors();
    tensors.push((STATIC_EMBEDDING.to_string(), &model.static_embedding));
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
        for &d in tensor.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes through a temporary sibling file and renames it into place.
pub fn save_checkpoint(model: &CnnLstmModel, meta: &CheckpointMeta, path: &Path) -> Result<(), CheckpointError> {
    let bytes = encode_checkpoint(model, meta);
    let tmp = path.with_extension("ckpt.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CnnLstmModel, CheckpointMeta), CheckpointError> {
    decode_checkpoint(&std::fs::read(path)?)
}

/// Loads a checkpoint and requires its architecture to equal `expected`.
pub fn load_checkpoint_expecting(
    path: &Path,
    expected: &ModelConfig,
) -> Result<(CnnLstmModel, CheckpointMeta), CheckpointError> {
    let (model, meta) = load_checkpoint(path)?;
    if &model.config != expected {
        return Err(CheckpointError::ShapeHeaderMismatch(format!(
            "stored architecture {:?} differs from expected {:?}",
            model.config, expected
        )));
    }
    Ok((model, meta))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::ShapeHeaderMismatch(format!(
                "file truncated while reading {what}"
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(CnnLstmModel, CheckpointMeta), CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut cur = Cursor {
        bytes,
        pos: MAGIC.len(),
    };
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let meta_len = cur.u32("metadata length")? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(cur.take(meta_len, "metadata")?)
        .map_err(|e| CheckpointError::ShapeHeaderMismatch(format!("metadata: {e}")))?;
    let order: Vec<String> = EmotionLabel::ALL.iter().map(|e| e.name().to_string()).collect();
    if meta.emotion_order != order {
        return Err(CheckpointError::ShapeHeaderMismatch(format!(
            "emotion order {:?} differs from {:?}",
            meta.emotion_order, order
        )));
    }
    meta.model
        .validate()
        .map_err(|e| CheckpointError::ShapeHeaderMismatch(e.to_string()))?;

    let expected = meta.model.tensor_shapes();
    let count = cur.u32("tensor count")? as usize;
    if count != expected.len() {
        return Err(CheckpointError::ShapeHeaderMismatch(format!(
            "{count} tensors stored, {} expected",
            expected.len()
        )));
    }
    let mut tensors = Vec::with_capacity(count);
    for (want_name, want_shape) in &expected {
        let name_len = cur.u32("tensor name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "tensor name")?)
            .map_err(|_| CheckpointError::ShapeHeaderMismatch("tensor name is not UTF-8".into()))?;
        let rank = cur.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(cur.u64("tensor shape")? as usize);
        }
        if name != want_name || &shape != want_shape {
            return Err(CheckpointError::ShapeHeaderMismatch(format!(
                "tensor {name} {shape:?} where {want_name} {want_shape:?} was expected"
            )));
        }
        let n: usize = shape.iter().product();
        let raw = cur.take(n * 8, name)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor::from_vec(shape, data));
    }
    if cur.pos != bytes.len() {
        return Err(CheckpointError::ShapeHeaderMismatch("trailing bytes after last tensor".into()));
    }

    let static_embedding = tensors.pop().expect("static embedding is last");
    let mut params = Parameters::zeros(&meta.model);
    for ((_, slot), tensor) in params.tensors_mut().into_iter().zip(tensors) {
        *slot = tensor;
    }
    let model = CnnLstmModel::from_parts(meta.model.clone(), static_embedding, params)
        .map_err(|e| CheckpointError::ShapeHeaderMismatch(e.to_string()))?;
    Ok((model, meta))
}
