//! Emotion-oriented behavior engine.

pub mod affect;
pub mod baselines;
pub mod bml;
pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod memory;
pub mod emotion;
pub mod neural;
pub mod runtime;
pub mod textprep;

pub use emotion::{EmotionLabel, NUM_EMOTIONS};
