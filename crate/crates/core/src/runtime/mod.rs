//! The interaction pipeline (text, classifier, appraisal, behaviors, BML,
//! memory) behind the CLI and the HTTP service.

pub mod cli;
pub mod http;

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::affect::{appraise, blend_with_recent, derive_behaviors, AffectError, EmotionDistribution, Valence};
use crate::bml::{compose_with_id, serialize};
use crate::classifier::{ClassifierError, EmotionClassifier, CHECKPOINT_FILE};
use crate::emotion::{EmotionLabel, NUM_EMOTIONS};
use crate::memory::{self, InteractionRecord, LongTermStore, MemoryError, SessionBuffer, DEFAULT_CAPACITY};
use crate::neural::{ModelConfig, TrainConfig};

pub const MAX_TEXT_CHARS: usize = 1000;
pub const HOME_ENV: &str = "AFENG_HOME";
pub const DEFAULT_SEED: u64 = 42;

/// Directory layout under the data home.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomeLayout {
    pub root: PathBuf,
}

impl HomeLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `AFENG_HOME` if set, else `./afeng-home`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(HOME_ENV).map_or_else(|| PathBuf::from("afeng-home"), PathBuf::from))
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.root.join("model")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn memory_log(&self) -> PathBuf {
        self.root.join("memory").join("interactions.log")
    }

    pub fn ui_dir(&self) -> PathBuf {
        self.root.join("ui")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("text is empty")]
    EmptyText,
    #[error("text has {chars} characters; the limit is {max}")]
    TooLong { chars: usize, max: usize },
    #[error("no trained model is loaded")]
    ModelNotLoaded,
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Affect(#[from] AffectError),
}

impl RuntimeError {
    pub fn status(&self) -> u16 {
        match self {
            RuntimeError::EmptyText | RuntimeError::TooLong { .. } => 400,
            RuntimeError::ModelNotLoaded => 503,
            _ => 500,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::EmptyText => "EmptyText",
            RuntimeError::TooLong { .. } => "TooLong",
            RuntimeError::ModelNotLoaded => "ModelNotLoaded",
            RuntimeError::Memory(_) => "MemoryFailure",
            RuntimeError::Classifier(_) => "ClassifierFailure",
            RuntimeError::Affect(_) => "AffectFailure",
        }
    }
}

/// Eight probabilities serialized as a name-keyed object in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedDistribution(pub [f64; NUM_EMOTIONS]);

impl Serialize for NamedDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(NUM_EMOTIONS))?;
        for (e, p) in EmotionLabel::ALL.iter().zip(&self.0) {
            map.serialize_entry(e.name(), p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for NamedDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = std::collections::HashMap::<String, f64>::deserialize(deserializer)?;
        let mut probs = [0.0; NUM_EMOTIONS];
        for (e, p) in EmotionLabel::ALL.iter().zip(probs.iter_mut()) {
            *p = *map.get(e.name()).ok_or_else(|| D::Error::missing_field(e.name()))?;
        }
        Ok(Self(probs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorsView {
    pub goal: String,
    #[serde(rename = "self")]
    pub self_behavior: String,
    pub other: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractResponse {
    pub text: String,
    pub distribution: NamedDistribution,
    pub dominant: EmotionLabel,
    pub intensity: f64,
    pub valence: Valence,
    pub agent_emotion: String,
    pub event_goal: String,
    pub behaviors: BehaviorsView,
    pub bml: String,
    pub record_id: u64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryItem {
    pub id: u64,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub dominant: EmotionLabel,
    pub intensity: f64,
    pub valence: Valence,
    pub self_behavior: String,
    pub other_behavior: String,
    pub bml_id: String,
}

impl From<&InteractionRecord> for HistoryItem {
    fn from(r: &InteractionRecord) -> Self {
        Self {
            id: r.id,
            timestamp: r.timestamp,
            text: r.text.clone(),
            dominant: r.appraisal.dominant,
            intensity: r.appraisal.intensity,
            valence: r.appraisal.valence,
            self_behavior: r.behaviors.self_behavior.clone(),
            other_behavior: r.behaviors.other_behavior.clone(),
            bml_id: r.bml_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub checkpoint_hash: String,
    pub hyperparameters: ModelConfig,
    pub training: Option<TrainConfig>,
    pub emotion_order: Vec<EmotionLabel>,
    pub vocabulary_size: usize,
}

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct MemoryState {
    store: LongTermStore,
    buffer: SessionBuffer,
}

/// Immutable model plus a single-writer memory. Shareable across threads.
pub struct Engine {
    classifier: Option<EmotionClassifier>,
    memory: Mutex<MemoryState>,
    clock: Clock,
    blend: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub capacity: usize,
    /// Weight of the recent-history blend; 0 disables it.
    pub blend: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            blend: 0.0,
        }
    }
}

impl Engine {
    /// Opens the memory log at `log_path`; `classifier` may be absent, in
    /// which case interactions fail with `ModelNotLoaded`.
    pub fn new(
        classifier: Option<EmotionClassifier>,
        log_path: &Path,
        checkpoint_dir: &Path,
        options: EngineOptions,
    ) -> Result<Self, RuntimeError> {
        let (store, replay) = LongTermStore::open(log_path, checkpoint_dir)?;
        Ok(Self {
            classifier,
            memory: Mutex::new(MemoryState {
                store,
                buffer: SessionBuffer::from_log(options.capacity, &replay.records),
            }),
            clock: system_clock(),
            blend: options.blend,
        })
    }

    /// Loads the model from the home layout when a checkpoint exists.
    pub fn open_home(home: &HomeLayout, options: EngineOptions) -> Result<Self, RuntimeError> {
        let model_dir = home.model_dir();
        let classifier = if model_dir.join(CHECKPOINT_FILE).exists() {
            Some(EmotionClassifier::load(&model_dir)?)
        } else {
            None
        };
        Self::new(classifier, &home.memory_log(), &model_dir, options)
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn classifier(&self) -> Option<&EmotionClassifier> {
        self.classifier.as_ref()
    }

    pub fn handle_interact(&self, text: &str) -> Result<InteractResponse, RuntimeError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(RuntimeError::EmptyText);
        }
        let chars = text.chars().count();
        if chars > MAX_TEXT_CHARS {
            return Err(RuntimeError::TooLong {
                chars,
                max: MAX_TEXT_CHARS,
            });
        }
        let classifier = self.classifier.as_ref().ok_or(RuntimeError::ModelNotLoaded)?;
        let raw = EmotionDistribution::new(classifier.distribution(text)?)?;

        let mut memory = self.memory.lock().unwrap_or_else(|p| p.into_inner());
        let recent: Vec<EmotionDistribution> = memory.buffer.recent(usize::MAX).iter().map(|r| r.distribution).collect();
        let distribution = blend_with_recent(&raw, &recent, self.blend)?;
        let appraisal = appraise(&distribution);
        let behaviors = derive_behaviors(appraisal.dominant);
        let id = memory.store.next_id();
        let bml_id = format!("bml-{id}");
        let bml = serialize(&compose_with_id(&appraisal, &behaviors, &bml_id));
        let record = InteractionRecord {
            id,
            timestamp: (self.clock)(),
            text: text.to_string(),
            distribution,
            appraisal: appraisal.clone(),
            behaviors: behaviors.clone(),
            bml_id,
        };
        let timestamp = record.timestamp;
        let MemoryState { store, buffer } = &mut *memory;
        memory::record(store, buffer, record)?;

        Ok(InteractResponse {
            text: text.to_string(),
            distribution: NamedDistribution(*distribution.probs()),
            dominant: appraisal.dominant,
            intensity: appraisal.intensity,
            valence: appraisal.valence,
            agent_emotion: appraisal.agent_emotion,
            event_goal: appraisal.event_goal,
            behaviors: BehaviorsView {
                goal: behaviors.goal_behavior,
                self_behavior: behaviors.self_behavior,
                other: behaviors.other_behavior,
            },
            bml,
            record_id: id,
            timestamp,
        })
    }

    pub fn handle_history(&self, n: usize) -> Vec<HistoryItem> {
        let memory = self.memory.lock().unwrap_or_else(|p| p.into_inner());
        memory::recent(&memory.buffer, n).into_iter().map(HistoryItem::from).collect()
    }

    /// Hash of the checkpoint encoding of the model as currently held.
    pub fn model_info(&self) -> Result<ModelInfo, RuntimeError> {
        let c = self.classifier.as_ref().ok_or(RuntimeError::ModelNotLoaded)?;
        Ok(ModelInfo {
            checkpoint_hash: sha256_hex(&c.checkpoint_bytes()),
            hyperparameters: c.model.config.clone(),
            training: c.training.clone(),
            emotion_order: EmotionLabel::ALL.to_vec(),
            vocabulary_size: c.vocab.len(),
        })
    }
}
