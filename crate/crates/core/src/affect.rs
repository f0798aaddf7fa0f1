//! Appraisal of a classifier distribution into one dominant emotion, the
//! agent's event-based emotion and its goal, self and other behaviors.
//!
//! The lookup tables ship as `resources/affect_tables.json`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionLabel, NUM_EMOTIONS};

pub const AFFECT_TABLES_JSON: &str = include_str!("../resources/affect_tables.json");
pub const AFFECT_TABLES_VERSION: u32 = 1;
/// Sum tolerance for a valid distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AffectError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid affect tables: {0}")]
    InvalidTables(String),
}

/// Listed in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Valence {
    Positive,
    Neutral,
    Negative,
}

impl Valence {
    pub fn name(self) -> &'static str {
        match self {
            Valence::Positive => "Positive",
            Valence::Neutral => "Neutral",
            Valence::Negative => "Negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectRow {
    pub emotion: EmotionLabel,
    pub valence: Valence,
    pub event: String,
    pub agent_emotion: String,
    pub goal: String,
    pub self_behavior: String,
    pub other_behavior: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectTables {
    pub version: u32,
    pub rows: Vec<AffectRow>,
}

impl AffectTables {
    /// Parses and checks that every emotion has exactly one row.
    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        let mut tables: AffectTables =
            serde_json::from_str(text).map_err(|e| AffectError::InvalidTables(e.to_string()))?;
        if tables.version != AFFECT_TABLES_VERSION {
            return Err(AffectError::InvalidTables(format!("unsupported version {}", tables.version)));
        }
        for e in EmotionLabel::ALL {
            let n = tables.rows.iter().filter(|r| r.emotion == e).count();
            if n != 1 {
                return Err(AffectError::InvalidTables(format!("{n} rows for {e}")));
            }
        }
        if tables.rows.len() != NUM_EMOTIONS {
            return Err(AffectError::InvalidTables(format!("{} rows", tables.rows.len())));
        }
        tables.rows.sort_by_key(|r| r.emotion);
        Ok(tables)
    }

    pub fn row(&self, emotion: EmotionLabel) -> &AffectRow {
        &self.rows[emotion.index()]
    }
}

/// The built-in tables.
pub fn tables() -> &'static AffectTables {
    static TABLES: OnceLock<AffectTables> = OnceLock::new();
    TABLES.get_or_init(|| AffectTables::from_json(AFFECT_TABLES_JSON).expect("bundled affect tables are valid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionDistribution {
    probs: [f64; NUM_EMOTIONS],
}

impl EmotionDistribution {
    pub fn new(probs: [f64; NUM_EMOTIONS]) -> Result<Self, AffectError> {
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(AffectError::InvalidDistribution(format!(
                "probability {p} for {} outside [0, 1]",
                EmotionLabel::ALL[i]
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(AffectError::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform() -> Self {
        Self {
            probs: [1.0 / NUM_EMOTIONS as f64; NUM_EMOTIONS],
        }
    }

    /// `peak` on `emotion`, the rest spread evenly over the other seven.
    pub fn peaked(emotion: EmotionLabel, peak: f64) -> Result<Self, AffectError> {
        let rest = (1.0 - peak) / (NUM_EMOTIONS - 1) as f64;
        let mut probs = [rest; NUM_EMOTIONS];
        probs[emotion.index()] = peak;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64; NUM_EMOTIONS] {
        &self.probs
    }

    pub fn get(&self, emotion: EmotionLabel) -> f64 {
        self.probs[emotion.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppraisalResult {
    pub dominant: EmotionLabel,
    pub intensity: f64,
    pub valence: Valence,
    pub agent_emotion: String,
    pub event_goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorSet {
    pub goal_behavior: String,
    pub self_behavior: String,
    pub other_behavior: String,
}

pub fn valence(emotion: EmotionLabel) -> Valence {
    tables().row(emotion).valence
}

/// Dominant emotion: highest probability; ties go to the better valence
/// (Positive, Neutral, Negative), then to canonical order. Intensity is the
/// winning probability.
pub fn appraise(dist: &EmotionDistribution) -> AppraisalResult {
    let max = dist.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dominant = EmotionLabel::ALL
        .into_iter()
        .filter(|e| dist.get(*e) == max)
        .min_by_key(|e| (valence(*e), *e))
        .expect("a distribution has a maximum");
    let row = tables().row(dominant);
    AppraisalResult {
        dominant,
        intensity: max,
        valence: row.valence,
        agent_emotion: row.agent_emotion.clone(),
        event_goal: row.event.clone(),
    }
}

pub fn map_agent_emotion(human: EmotionLabel) -> (&'static str, Valence) {
    let row = tables().row(human);
    (row.agent_emotion.as_str(), row.valence)
}

pub fn derive_behaviors(dominant: EmotionLabel) -> BehaviorSet {
    let row = tables().row(dominant);
    BehaviorSet {
        goal_behavior: row.goal.clone(),
        self_behavior: row.self_behavior.clone(),
        other_behavior: row.other_behavior.clone(),
    }
}

/// `(1 - lambda) * dist + lambda * mean(recent)`. Returns `dist` unchanged
/// when `lambda` is 0 or `recent` is empty.
pub fn blend_with_recent(
    dist: &EmotionDistribution,
    recent: &[EmotionDistribution],
    lambda: f64,
) -> Result<EmotionDistribution, AffectError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(AffectError::InvalidDistribution(format!("blend weight {lambda} outside [0, 1]")));
    }
    if lambda == 0.0 || recent.is_empty() {
        return Ok(*dist);
    }
    let mut probs = [0.0; NUM_EMOTIONS];
    for (i, p) in probs.iter_mut().enumerate() {
        let mean = recent.iter().map(|d| d.probs[i]).sum::<f64>() / recent.len() as f64;
        *p = (1.0 - lambda) * dist.probs[i] + lambda * mean;
    }
    EmotionDistribution::new(probs)
}
