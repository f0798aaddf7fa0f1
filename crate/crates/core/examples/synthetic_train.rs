//! Trains the classifier on the built-in keyword corpus and prints accuracy.
//!
//! cargo run --release --example synthetic_train -- [epochs] [seed]

use std::time::Instant;

use afeng::classifier::{synthetic_vector_map, EmotionClassifier, FitOptions};
use afeng::corpus::{split, synthetic_corpus, LabeledSentence};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.get(1).copied().unwrap_or(42);
    let mut options = FitOptions::synthetic(seed);
    if let Some(&epochs) = args.first() {
        options.train.epochs = epochs as usize;
    }

    let data = split(&synthetic_corpus(20, seed), seed, 0.25, 0.0).expect("valid fractions");
    let vectors = synthetic_vector_map(&options.preprocess, seed);
    let start = Instant::now();
    let (classifier, history) = EmotionClassifier::fit(&data, Some(&vectors), &options).expect("training succeeds");
    let elapsed = start.elapsed();
    for record in history.epochs.iter().step_by((history.epochs.len() / 10).max(1)) {
        println!("epoch {:4} loss {:.5}", record.epoch, record.loss);
    }
    let accuracy = |rows: &[LabeledSentence]| {
        let predicted = classifier.predict_all(rows).expect("prediction");
        predicted.iter().zip(rows).filter(|(p, r)| **p == r.label).count() as f64 / rows.len() as f64
    };
    println!("train accuracy {:.4}", accuracy(&data.train));
    println!("test accuracy  {:.4}", accuracy(&data.test));
    println!("elapsed {elapsed:.2?}");
}
