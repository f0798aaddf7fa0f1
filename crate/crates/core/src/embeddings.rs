//! GloVe-format word vector parsing and vocabulary-aligned embedding matrices.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::neural::Tensor;
use crate::textprep::{Vocabulary, PAD_INDEX};

pub const DEFAULT_EMBEDDING_DIM: usize = 200;
/// Half-width of the uniform range used for rows without a pretrained vector.
pub const INIT_RANGE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: non-finite or unparsable value {value:?}")]
    NonFinite { line: usize, value: String },
}

#[derive(Debug, Clone, Default)]
pub struct ParsedVectors {
    pub vectors: HashMap<String, Vec<f64>>,
    pub parsed: usize,
    /// Lines skipped as duplicates or because the token was outside the filter.
    pub skipped: usize,
}

/// Opens a vectors file, decompressing transparently when it ends in `.gz`.
pub fn open_vectors(path: &Path) -> std::io::Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Streams `token v1 ... vd` lines. When `keep` is given, only tokens in that
/// vocabulary are retained; the rest are only counted. Duplicate tokens keep
/// their first vector.
pub fn parse_vectors<R: BufRead>(
    reader: R,
    expected_dim: usize,
    keep: Option<&Vocabulary>,
) -> Result<ParsedVectors, EmbeddingError> {
    parse_vectors_keyed(reader, expected_dim, keep, |t| t.to_string())
}

/// Like [`parse_vectors`], but every file token is first mapped through
/// `key` (for example the stemmer used to build the vocabulary).
pub fn parse_vectors_keyed<R: BufRead>(
    reader: R,
    expected_dim: usize,
    keep: Option<&Vocabulary>,
    key: impl Fn(&str) -> String,
) -> Result<ParsedVectors, EmbeddingError> {
    let mut out = ParsedVectors::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let Some(token) = parts.next() else {
            continue;
        };
        let mut values = Vec::with_capacity(expected_dim);
        for part in parts {
            let v: f64 = part.trim().parse().map_err(|_| EmbeddingError::NonFinite {
                line: line_no,
                value: part.to_string(),
            })?;
            if !v.is_finite() {
                return Err(EmbeddingError::NonFinite {
                    line: line_no,
                    value: part.to_string(),
                });
            }
            values.push(v);
        }
        if values.len() != expected_dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected: expected_dim,
                found: values.len(),
            });
        }
        let token = key(token);
        let wanted = keep.is_none_or(|v| v.index(&token).is_some());
        if wanted && !out.vectors.contains_key(&token) {
            out.vectors.insert(token, values);
            out.parsed += 1;
        } else {
            out.skipped += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dim: usize,
    /// Row-major, `rows * dim` values.
    pub values: Vec<f64>,
    pub trainable: bool,
}

impl EmbeddingMatrix {
    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(vec![self.rows, self.dim], self.values.clone())
    }
}

/// Builds the embedding matrix for `vocab`. Pretrained vectors are copied,
/// the pad row is zero and every other row (OOV included) is drawn uniformly
/// from `[-INIT_RANGE, INIT_RANGE]` in index order.
pub fn build_matrix(vocab: &Vocabulary, vectors: &HashMap<String, Vec<f64>>, dim: usize, seed: u64) -> EmbeddingMatrix {
    let rows = vocab.len();
    let mut values = vec![0.0; rows * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for index in 0..rows {
        if index == PAD_INDEX {
            continue;
        }
        let row = &mut values[index * dim..(index + 1) * dim];
        match vocab.token(index).and_then(|t| vectors.get(t)).filter(|v| v.len() == dim) {
            Some(vector) => row.copy_from_slice(vector),
            None => row.iter_mut().for_each(|x| *x = rng.random_range(-INIT_RANGE..=INIT_RANGE)),
        }
    }
    EmbeddingMatrix {
        rows,
        dim,
        values,
        trainable: true,
    }
}

/// Pretrained-style vectors for the synthetic keyword corpus: keywords of one
/// emotion sit around a shared random centroid, filler words are scattered
/// uniformly. Lines are in GloVe text order (token first).
pub fn synthetic_vectors(dim: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let (keywords, fillers) = crate::corpus::synthetic_lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for group in keywords {
        let centroid: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect();
        for word in group {
            let v = centroid.iter().map(|c| c + rng.random_range(-0.1..=0.1)).collect();
            out.push((word.to_string(), v));
        }
    }
    for word in fillers {
        let v = (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect();
        out.push((word, v));
    }
    out
}

pub fn write_vectors<W: std::io::Write>(mut w: W, vectors: &[(String, Vec<f64>)]) -> std::io::Result<()> {
    for (token, values) in vectors {
        write!(w, "{token}")?;
        for v in values {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        let sentence: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        Vocabulary::build(&[sentence], 1)
    }

    #[test]
    fn parses_one_line() {
        let parsed = parse_vectors("cat 0.5 -0.25\n".as_bytes(), 2, None).unwrap();
        assert_eq!(parsed.vectors["cat"], vec![0.5, -0.25]);
        assert_eq!(parsed.parsed, 1);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let line: Vec<String> = std::iter::once("w".to_string())
            .chain((0..199).map(|i| format!("{}", i as f64 * 0.01)))
            .collect();
        let err = parse_vectors(line.join(" ").as_bytes(), 200, None).unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionMismatch { line: 1, expected: 200, found: 199 }));
    }

    #[test]
    fn non_finite_is_rejected() {
        let err = parse_vectors("ok 1 2\nbad 1 NaN\n".as_bytes(), 2, None).unwrap_err();
        assert!(matches!(err, EmbeddingError::NonFinite { line: 2, .. }));
        assert!(parse_vectors("bad inf 1\n".as_bytes(), 2, None).is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let parsed = parse_vectors("a 1 1\nb 2 2\na 3 3\n".as_bytes(), 2, None).unwrap();
        assert_eq!(parsed.vectors.len(), 2);
        assert_eq!(parsed.vectors["a"], vec![1.0, 1.0]);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn filter_counts_misses() {
        let v = vocab(&["a"]);
        let parsed = parse_vectors("a 1 1\nb 2 2\nc 3 3\n".as_bytes(), 2, Some(&v)).unwrap();
        assert_eq!(parsed.vectors.len(), 1);
        assert_eq!(parsed.skipped, 2);
    }

    #[test]
    fn gzip_files_are_decompressed() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), flate2::Compression::default());
        enc.write_all(b"joy 0.1 0.2\n").unwrap();
        enc.finish().unwrap();
        let parsed = parse_vectors(open_vectors(&path).unwrap(), 2, None).unwrap();
        assert_eq!(parsed.vectors["joy"], vec![0.1, 0.2]);
    }

    #[test]
    fn keyed_parsing_maps_tokens() {
        let parsed = parse_vectors_keyed("happy 1 1\nhappiness 2 2\n".as_bytes(), 2, None, crate::textprep::stem).unwrap();
        assert_eq!(parsed.vectors["happi"], vec![1.0, 1.0]);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn synthetic_vectors_round_trip_through_parser() {
        let vectors = synthetic_vectors(5, 3);
        let mut buf = Vec::new();
        write_vectors(&mut buf, &vectors).unwrap();
        let parsed = parse_vectors(buf.as_slice(), 5, None).unwrap();
        assert_eq!(parsed.vectors.len(), vectors.len());
        for (token, v) in &vectors {
            assert_eq!(&parsed.vectors[token], v);
        }
    }

    #[test]
    fn matrix_copies_pretrained_rows() {
        let v = vocab(&["x", "y", "z"]);
        let vectors: HashMap<String, Vec<f64>> = [("x", [1.0, 2.0]), ("y", [3.0, 4.0]), ("z", [5.0, 6.0])]
            .into_iter()
            .map(|(t, a)| (t.to_string(), a.to_vec()))
            .collect();
        let m = build_matrix(&v, &vectors, 2, 0);
        assert_eq!((m.rows, m.dim), (5, 2));
        assert_eq!(m.row(PAD_INDEX), &[0.0, 0.0]);
        for token in ["x", "y", "z"] {
            assert_eq!(m.row(v.index(token).unwrap()), vectors[token].as_slice());
        }
    }

    #[test]
    fn missing_rows_are_small_and_seeded() {
        let v = vocab(&["x", "y"]);
        let vectors = HashMap::from([("x".to_string(), vec![0.9; 4])]);
        let m = build_matrix(&v, &vectors, 4, 0);
        let y = v.index("y").unwrap();
        assert!(m.row(y).iter().all(|x| x.abs() <= INIT_RANGE));
        assert!(m.row(y).iter().any(|&x| x != 0.0));
        assert!(m.row(1).iter().all(|x| x.abs() <= INIT_RANGE));
        assert_eq!(m, build_matrix(&v, &vectors, 4, 0));
        assert_ne!(m, build_matrix(&v, &vectors, 4, 1));
    }
}
