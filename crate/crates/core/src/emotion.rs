//! The eight basic emotions used as the label space everywhere in the engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of Plutchik's eight basic emotions.
///
/// The discriminant is the canonical class code. It fixes the axis order of
/// confusion matrices, the output layer of the classifier and checkpoint
/// metadata, so the order below must never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmotionLabel {
    Anticipation = 0,
    Joy = 1,
    Trust = 2,
    Fear = 3,
    Surprise = 4,
    Sadness = 5,
    Disgust = 6,
    Anger = 7,
}

pub const NUM_EMOTIONS: usize = 8;

impl EmotionLabel {
    pub const ALL: [EmotionLabel; NUM_EMOTIONS] = [
        EmotionLabel::Anticipation,
        EmotionLabel::Joy,
        EmotionLabel::Trust,
        EmotionLabel::Fear,
        EmotionLabel::Surprise,
        EmotionLabel::Sadness,
        EmotionLabel::Disgust,
        EmotionLabel::Anger,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anticipation => "Anticipation",
            EmotionLabel::Joy => "Joy",
            EmotionLabel::Trust => "Trust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Surprise => "Surprise",
            EmotionLabel::Sadness => "Sadness",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Anger => "Anger",
        }
    }

    /// Parses a label name, ignoring ASCII case and surrounding whitespace.
    pub fn parse(value: &str) -> Option<Self> {
        let value = value.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|label| label.name().eq_ignore_ascii_case(value))
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion label {0:?}")]
pub struct UnknownEmotion(pub String);

impl FromStr for EmotionLabel {
    type Err = UnknownEmotion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s).ok_or_else(|| UnknownEmotion(s.to_string()))
    }
}
