//! Tokenization, normalization and fixed-length index encoding.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PAD_INDEX: usize = 0;
pub const OOV_INDEX: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";
pub const DEFAULT_MAX_LEN: usize = 40;

/// Shipped English stop-word list, one token per line.
pub const STOPWORDS: &str = include_str!("../resources/stopwords.txt");

const EMOTICONS: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":'(", ":/", ":-/", ":O", ":o", ":|",
    "<3", "</3", "xD", "XD", "^_^", "-_-", ":*",
];

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Splits tweet-like text into lowercase word tokens.
///
/// URLs and `@mentions` are dropped, `#` is stripped from hashtags, known
/// emoticons pass through untouched and every other punctuation character
/// acts as a separator. Apostrophes survive only between two word characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if EMOTICONS.contains(&chunk) {
            tokens.push(chunk.to_string());
            continue;
        }
        let lower = chunk.to_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
            continue;
        }
        if lower.starts_with('@') {
            continue;
        }
        split_words(lower.trim_start_matches('#'), &mut tokens);
    }
    tokens
}

fn split_words(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let keep_apostrophe = (c == '\'' || c == '\u{2019}')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() {
            current.push(c);
        } else if keep_apostrophe {
            current.push('\'');
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
}

pub fn stem(token: &str) -> String {
    stemmer().stem(token).into_owned()
}

/// Stop-word removal followed by stemming; order is preserved.
pub fn normalize(tokens: &[String], remove_stopwords: bool, stem_tokens: bool) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !(remove_stopwords && is_stopword(t)))
        .map(|t| if stem_tokens { stem(t) } else { t.clone() })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub remove_stopwords: bool,
    pub stem: bool,
    pub max_len: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            remove_stopwords: true,
            stem: true,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl PreprocessConfig {
    pub fn tokens(&self, text: &str) -> Vec<String> {
        normalize(&tokenize(text), self.remove_stopwords, self.stem)
    }

    /// Maps a word-vector file token onto the vocabulary's token space.
    pub fn vector_key(&self, token: &str) -> String {
        let lower = token.to_lowercase();
        if self.stem {
            stem(&lower)
        } else {
            lower
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

impl Vocabulary {
    fn with_reserved() -> Self {
        Self {
            token_to_index: HashMap::new(),
            index_to_token: vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()],
        }
    }

    /// Tokens with frequency `>= min_count`, indexed by descending frequency
    /// and then lexicographically. Indices start at 2.
    pub fn build<S: AsRef<str>>(sentences: &[Vec<S>], min_count: usize) -> Self {
        let min_count = min_count.max(1);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for token in sentences.iter().flatten() {
            *counts.entry(token.as_ref()).or_default() += 1;
        }
        let mut entries: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, n)| n >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut vocab = Self::with_reserved();
        for (token, _) in entries {
            vocab.push(token.to_string());
        }
        vocab
    }

    fn push(&mut self, token: String) {
        self.token_to_index.insert(token.clone(), self.index_to_token.len());
        self.index_to_token.push(token);
    }

    /// Total number of indices, reserved ones included.
    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.len() <= 2
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    /// Non-reserved tokens in index order.
    pub fn tokens(&self) -> impl Iterator<Item = (&str, usize)> {
        self.index_to_token.iter().enumerate().skip(2).map(|(i, t)| (t.as_str(), i))
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (token, index) in self.tokens() {
            writeln!(w, "{token}\t{index}")?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("vocabulary tokens are UTF-8")
    }

    /// Reads `token<TAB>index` lines. Indices must be contiguous from 2.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, VocabError> {
        let mut vocab = Self::with_reserved();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| VocabError::Malformed {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (token, index) = line.rsplit_once('\t').ok_or_else(|| malformed("missing tab"))?;
            let index: usize = index.trim().parse().map_err(|_| malformed("bad index"))?;
            if index != vocab.len() {
                return Err(malformed("indices must be contiguous from 2"));
            }
            if vocab.token_to_index.contains_key(token) {
                return Err(malformed("duplicate token"));
            }
            vocab.push(token.to_string());
        }
        Ok(vocab)
    }

    /// SHA-256 of the TSV serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSentence {
    pub indices: Vec<usize>,
    pub true_length: usize,
}

/// Maps tokens to indices, keeps the first `max_len` and right-pads.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> EncodedSentence {
    let max_len = max_len.max(1);
    let mut indices: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index(t.as_ref()).unwrap_or(OOV_INDEX))
        .collect();
    let true_length = indices.len();
    indices.resize(max_len, PAD_INDEX);
    EncodedSentence { indices, true_length }
}
