//! Text-in, emotion-out classifier: preprocessing, vocabulary and the
//! CNN-LSTM model bundled together, plus the on-disk model directory layout
//! (`model.ckpt`, `vocab.tsv`, `history.csv`).

use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{CorpusSplit, LabeledSentence};
use crate::embeddings::build_matrix;
use crate::emotion::{EmotionLabel, NUM_EMOTIONS};
use crate::neural::checkpoint::{decode_checkpoint, encode_checkpoint};
use crate::neural::{train, CheckpointError, CheckpointMeta, CnnLstmModel, Example, History, ModelConfig, NeuralError, TrainConfig};
use crate::textprep::{encode, EncodedSentence, PreprocessConfig, VocabError, Vocabulary};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const HISTORY_FILE: &str = "history.csv";

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary hash {found} does not match checkpoint ({expected})")]
    VocabularyMismatch { expected: String, found: String },
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub preprocess: PreprocessConfig,
    /// `vocab_size` and `max_len` are filled in from the data and
    /// `preprocess`.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub min_count: usize,
}

impl FitOptions {
    /// Small architecture for the built-in keyword corpus and its synthetic
    /// vectors (`SYNTHETIC_VECTOR_DIM`).
    pub fn synthetic(seed: u64) -> Self {
        Self {
            preprocess: PreprocessConfig {
                max_len: 16,
                ..Default::default()
            },
            model: ModelConfig {
                embedding_dim: SYNTHETIC_VECTOR_DIM,
                filter_count: 16,
                hidden_size: 32,
                dense_size: 32,
                ..Default::default()
            },
            train: TrainConfig {
                epochs: 200,
                batch_size: 32,
                seed,
                ..Default::default()
            },
            min_count: 1,
        }
    }
}

pub const SYNTHETIC_VECTOR_DIM: usize = 32;

/// Synthetic pretrained vectors keyed the way `preprocess` keys tokens.
pub fn synthetic_vector_map(preprocess: &PreprocessConfig, seed: u64) -> HashMap<String, Vec<f64>> {
    let mut map = HashMap::new();
    for (token, v) in crate::embeddings::synthetic_vectors(SYNTHETIC_VECTOR_DIM, seed) {
        map.entry(preprocess.vector_key(&token)).or_insert(v);
    }
    map
}

/// The vocabulary `fit` builds: training split only, `min_count` cutoff.
pub fn training_vocabulary(split: &CorpusSplit, preprocess: &PreprocessConfig, min_count: usize) -> Vocabulary {
    let tokens: Vec<Vec<String>> = split.train.iter().map(|r| preprocess.tokens(&r.text)).collect();
    Vocabulary::build(&tokens, min_count)
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionClassifier {
    pub preprocess: PreprocessConfig,
    pub vocab: Vocabulary,
    pub model: CnnLstmModel,
    pub training: Option<TrainConfig>,
}

impl EmotionClassifier {
    /// Builds the vocabulary from the training split only, initializes both
    /// embedding channels (pretrained `vectors` where available) and trains.
    pub fn fit(
        split: &CorpusSplit,
        vectors: Option<&HashMap<String, Vec<f64>>>,
        options: &FitOptions,
    ) -> Result<(Self, History), ClassifierError> {
        let preprocess = options.preprocess;
        let vocab = training_vocabulary(split, &preprocess, options.min_count);

        let mut config = options.model.clone();
        config.vocab_size = vocab.len();
        config.max_len = preprocess.max_len;
        let empty = HashMap::new();
        let embedding = build_matrix(&vocab, vectors.unwrap_or(&empty), config.embedding_dim, options.train.seed);
        let model = CnnLstmModel::new(config, &embedding, options.train.seed)?;

        let mut classifier = Self {
            preprocess,
            vocab,
            model,
            training: Some(options.train.clone()),
        };
        let train_set = classifier.examples(&split.train);
        let validation = classifier.examples(&split.validation);
        let history = train(&mut classifier.model, &train_set, &validation, &options.train)?;
        Ok((classifier, history))
    }

    pub fn encode(&self, text: &str) -> EncodedSentence {
        encode(&self.preprocess.tokens(text), &self.vocab, self.model.config.max_len)
    }

    pub fn examples(&self, rows: &[LabeledSentence]) -> Vec<Example> {
        rows.iter().map(|r| (self.encode(&r.text), r.label)).collect()
    }

    pub fn distribution(&self, text: &str) -> Result<[f64; NUM_EMOTIONS], ClassifierError> {
        Ok(self.model.predict_proba(&self.encode(text).indices)?)
    }

    pub fn predict(&self, text: &str) -> Result<EmotionLabel, ClassifierError> {
        Ok(self.model.predict(&self.encode(text).indices)?)
    }

    pub fn predict_all(&self, rows: &[LabeledSentence]) -> Result<Vec<EmotionLabel>, ClassifierError> {
        rows.iter().map(|r| self.predict(&r.text)).collect()
    }

    pub fn checkpoint_meta(&self) -> CheckpointMeta {
        let seed = self.training.as_ref().map_or(0, |t| t.seed);
        let mut meta = CheckpointMeta::new(&self.model, self.training.clone(), self.vocab.hash(), seed);
        meta.preprocess = Some(self.preprocess);
        meta
    }

    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        encode_checkpoint(&self.model, &self.checkpoint_meta())
    }

    /// Writes `model.ckpt` and `vocab.tsv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), ClassifierError> {
        std::fs::create_dir_all(dir)?;
        crate::neural::save_checkpoint(&self.model, &self.checkpoint_meta(), &dir.join(CHECKPOINT_FILE))?;
        std::fs::write(dir.join(VOCAB_FILE), self.vocab.to_tsv())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ClassifierError> {
        let bytes = std::fs::read(dir.join(CHECKPOINT_FILE))?;
        let vocab_text = std::fs::read(dir.join(VOCAB_FILE))?;
        Self::from_bytes(&bytes, &vocab_text)
    }

    pub fn from_bytes(checkpoint: &[u8], vocab_tsv: &[u8]) -> Result<Self, ClassifierError> {
        let (model, meta) = decode_checkpoint(checkpoint)?;
        let vocab = Vocabulary::read_tsv(vocab_tsv)?;
        let found = vocab.hash();
        if found != meta.vocab_hash {
            return Err(ClassifierError::VocabularyMismatch {
                expected: meta.vocab_hash,
                found,
            });
        }
        if vocab.len() != model.config.vocab_size {
            return Err(NeuralError::ShapeMismatch("vocabulary size differs from embedding rows".into()).into());
        }
        let preprocess = meta.preprocess.unwrap_or(PreprocessConfig {
            max_len: model.config.max_len,
            ..Default::default()
        });
        Ok(Self {
            preprocess,
            vocab,
            model,
            training: meta.training,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split, synthetic_corpus};
    use crate::neural::LayerOrder;

    fn small_options(epochs: usize) -> FitOptions {
        FitOptions {
            preprocess: PreprocessConfig {
                max_len: 10,
                ..Default::default()
            },
            model: ModelConfig {
                embedding_dim: 8,
                kernel_widths: vec![2, 3],
                filter_count: 4,
                hidden_size: 6,
                dense_size: 6,
                layer_order: LayerOrder::CnnLstm,
                ..Default::default()
            },
            train: TrainConfig {
                epochs,
                batch_size: 16,
                seed: 3,
                ..Default::default()
            },
            min_count: 1,
        }
    }

    #[test]
    fn vocabulary_comes_from_training_split_only() {
        let rows = synthetic_corpus(6, 1);
        let mut s = split(&rows, 1, 0.25, 0.0).unwrap();
        s.test.push(LabeledSentence::new("zanzibar quokka", EmotionLabel::Joy, "t"));
        let (c, _) = EmotionClassifier::fit(&s, None, &small_options(0)).unwrap();
        assert!(c.vocab.index("zanzibar").is_none());
        assert_eq!(c.encode("zanzibar").indices[0], crate::textprep::OOV_INDEX);
    }

    #[test]
    fn save_and_load_round_trip() {
        let rows = synthetic_corpus(4, 2);
        let s = split(&rows, 2, 0.25, 0.0).unwrap();
        let (c, _) = EmotionClassifier::fit(&s, None, &small_options(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let loaded = EmotionClassifier::load(dir.path()).unwrap();
        assert_eq!(loaded, c);
        assert_eq!(loaded.distribution("so happy").unwrap(), c.distribution("so happy").unwrap());
    }

    #[test]
    fn mismatched_vocabulary_is_rejected() {
        let rows = synthetic_corpus(4, 2);
        let s = split(&rows, 2, 0.25, 0.0).unwrap();
        let (c, _) = EmotionClassifier::fit(&s, None, &small_options(0)).unwrap();
        let err = EmotionClassifier::from_bytes(&c.checkpoint_bytes(), b"other\t2\n").unwrap_err();
        assert!(matches!(err, ClassifierError::VocabularyMismatch { .. }));
    }
}
