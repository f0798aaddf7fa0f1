//! Loading, consolidating, balancing and splitting emotion-labelled corpora.
//!
//! The on-disk format is UTF-8 TSV with a header row naming the columns
//! `text`, `label` and (optionally) `source`. A CSV variant with standard
//! quoting is also accepted.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionLabel, NUM_EMOTIONS};

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.02;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: unknown emotion label {value:?}")]
    UnknownLabel { row: u64, value: String },
    #[error("row {row}: empty text")]
    EmptyText { row: u64 },
    #[error("row {row}: malformed row ({reason})")]
    MalformedRow { row: u64, reason: String },
    #[error("no instances of emotion {0}")]
    MissingClass(EmotionLabel),
    #[error("invalid split fractions: test={test}, validation={validation}")]
    InvalidFraction { test: f64, validation: f64 },
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Csv,
}

impl CorpusFormat {
    /// Picks the format from a file extension; anything but `.csv` is TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: EmotionLabel,
    pub source_id: String,
}

impl LabeledSentence {
    pub fn new(text: impl Into<String>, label: EmotionLabel, source_id: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label,
            source_id: source_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<LabeledSentence>,
    pub validation: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
    pub seed: u64,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<LabeledSentence>, CorpusError> {
    let file = std::fs::File::open(path)?;
    let default_source = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let rows = read_corpus(file, format, &default_source)?;
    log::info!("loaded {} rows from {}", rows.len(), path.display());
    Ok(rows)
}

/// Reads a corpus from any reader. Row numbers in errors are 1-based file
/// line numbers (the header is line 1).
pub fn read_corpus<R: Read>(
    reader: R,
    format: CorpusFormat,
    default_source: &str,
) -> Result<Vec<LabeledSentence>, CorpusError> {
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(true).flexible(true);
    match format {
        CorpusFormat::Tsv => {
            builder.delimiter(b'\t').quoting(false);
        }
        CorpusFormat::Csv => {
            builder.delimiter(b',');
        }
    }
    let mut rdr = builder.from_reader(reader);

    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(e, 1)),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let column = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let text_col = column("text").ok_or_else(|| CorpusError::MalformedRow {
        row: 1,
        reason: "header has no `text` column".into(),
    })?;
    let label_col = column("label").ok_or_else(|| CorpusError::MalformedRow {
        row: 1,
        reason: "header has no `label` column".into(),
    })?;
    let source_col = column("source");

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let fallback_row = i as u64 + 2;
        let record = record.map_err(|e| csv_error(e, fallback_row))?;
        let row = record.position().map(|p| p.line()).unwrap_or(fallback_row);
        let (Some(text), Some(label)) = (record.get(text_col), record.get(label_col)) else {
            return Err(CorpusError::MalformedRow {
                row,
                reason: format!("expected at least {} columns, found {}", text_col.max(label_col) + 1, record.len()),
            });
        };
        let text = text.trim();
        if text.is_empty() {
            return Err(CorpusError::EmptyText { row });
        }
        let label = EmotionLabel::parse(label).ok_or_else(|| CorpusError::UnknownLabel {
            row,
            value: label.to_string(),
        })?;
        let source = source_col
            .and_then(|c| record.get(c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .unwrap_or(default_source);
        out.push(LabeledSentence::new(text, label, source));
    }
    Ok(out)
}

fn csv_error(err: csv::Error, row: u64) -> CorpusError {
    let row = err.position().map(|p| p.line()).unwrap_or(row);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => CorpusError::Io(io),
        other => CorpusError::MalformedRow {
            row,
            reason: format!("{other:?}"),
        },
    }
}

/// Writes rows in the TSV corpus format. Tabs and newlines inside text are
/// replaced by spaces so every row stays on one line.
pub fn write_corpus<W: Write>(mut writer: W, rows: &[LabeledSentence]) -> std::io::Result<()> {
    writeln!(writer, "text\tlabel\tsource")?;
    for row in rows {
        let text: String = row
            .text
            .chars()
            .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
            .collect();
        writeln!(writer, "{}\t{}\t{}", text, row.label.name(), row.source_id)?;
    }
    Ok(())
}

pub fn save_corpus(path: &Path, rows: &[LabeledSentence]) -> std::io::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_corpus(file, rows)
}

/// Concatenates several corpora into one, in source order.
pub fn consolidate(sources: &[Vec<LabeledSentence>]) -> Vec<LabeledSentence> {
    sources.iter().flatten().cloned().collect()
}

pub fn class_histogram(rows: &[LabeledSentence]) -> [usize; NUM_EMOTIONS] {
    let mut counts = [0; NUM_EMOTIONS];
    for row in rows {
        counts[row.label.index()] += 1;
    }
    counts
}

/// Consolidates the sources and downsamples every emotion to the same count:
/// `min(per_class, smallest class)`. Each class is shuffled with a seeded
/// generator before truncation. Output is grouped by emotion in canonical
/// order.
pub fn consolidate_and_balance(
    sources: &[Vec<LabeledSentence>],
    per_class: Option<usize>,
    seed: u64,
) -> Result<Vec<LabeledSentence>, CorpusError> {
    let mut groups = group_by_label(consolidate(sources));
    for (label, group) in EmotionLabel::ALL.iter().zip(&groups) {
        if group.is_empty() {
            return Err(CorpusError::MissingClass(*label));
        }
    }
    let smallest = groups.iter().map(Vec::len).min().unwrap_or(0);
    let target = per_class.map_or(smallest, |n| n.min(smallest));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target * NUM_EMOTIONS);
    for group in &mut groups {
        group.shuffle(&mut rng);
        out.extend(group.drain(..target));
    }
    Ok(out)
}

fn group_by_label(rows: Vec<LabeledSentence>) -> Vec<Vec<LabeledSentence>> {
    let mut groups: Vec<Vec<LabeledSentence>> = vec![Vec::new(); NUM_EMOTIONS];
    for row in rows {
        groups[row.label.index()].push(row);
    }
    groups
}

/// Distributes `round(fraction * total)` items over classes: floors first,
/// then the remaining units go to the largest fractional parts (ties resolved
/// in canonical class order).
fn apportion(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&n| fraction * n as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut remaining = target.saturating_sub(alloc.iter().sum());
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if alloc[c] < class_sizes[c] {
            alloc[c] += 1;
            remaining -= 1;
        }
    }
    alloc
}

/// Stratified train/validation/test split.
///
/// The test set takes `round(test_fraction * N)` rows; the validation set
/// takes `round(validation_fraction * pool)` of the remaining training pool.
/// Both are apportioned over emotions so class proportions hold within one
/// instance. Rows keep their original corpus order inside each split.
pub fn split(
    corpus: &[LabeledSentence],
    seed: u64,
    test_fraction: f64,
    validation_fraction: f64,
) -> Result<CorpusSplit, CorpusError> {
    let valid = |f: f64| (0.0..1.0).contains(&f);
    if !valid(test_fraction) || !valid(validation_fraction) || test_fraction + validation_fraction >= 1.0 {
        return Err(CorpusError::InvalidFraction {
            test: test_fraction,
            validation: validation_fraction,
        });
    }
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_EMOTIONS];
    for (i, row) in corpus.iter().enumerate() {
        by_class[row.label.index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
    }

    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let test_alloc = apportion(&sizes, test_fraction);
    let pool_sizes: Vec<usize> = sizes.iter().zip(&test_alloc).map(|(n, t)| n - t).collect();
    let val_alloc = apportion(&pool_sizes, validation_fraction);

    // 0 = train, 1 = validation, 2 = test
    let mut assignment = vec![0u8; corpus.len()];
    for (c, indices) in by_class.iter().enumerate() {
        for &i in &indices[..test_alloc[c]] {
            assignment[i] = 2;
        }
        for &i in &indices[test_alloc[c]..test_alloc[c] + val_alloc[c]] {
            assignment[i] = 1;
        }
    }

    let mut out = CorpusSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (row, slot) in corpus.iter().zip(assignment) {
        match slot {
            0 => out.train.push(row.clone()),
            1 => out.validation.push(row.clone()),
            _ => out.test.push(row.clone()),
        }
    }
    Ok(out)
}

const SYNTHETIC_KEYWORDS: [[&str; 6]; NUM_EMOTIONS] = [
    ["eager", "awaiting", "hopeful", "countdown", "expecting", "upcoming"],
    ["happy", "delighted", "joyful", "elated", "cheerful", "glad"],
    ["trust", "rely", "faithful", "loyal", "dependable", "believe"],
    ["scared", "afraid", "terrified", "frightened", "nervous", "panic"],
    ["surprised", "shocked", "astonished", "unexpected", "wow", "stunned"],
    ["sad", "miserable", "heartbroken", "gloomy", "crying", "lonely"],
    ["disgusted", "gross", "revolting", "nasty", "sickening", "vile"],
    ["angry", "furious", "outraged", "mad", "rage", "livid"],
];

const SYNTHETIC_TOPICS: [&str; 8] = [
    "the game",
    "my job",
    "the news",
    "this weekend",
    "the trip",
    "school",
    "the party",
    "my family",
];

const SYNTHETIC_TEMPLATES: [&str; 5] = [
    "i feel {k} about {t}",
    "{t} makes me {k}",
    "so {k} today after {t}",
    "{k} and {k2} when i think of {t}",
    "honestly {t} left everyone {k}",
];

/// Deterministic keyword corpus: `per_class` sentences for each emotion.
/// Templates and topics cycle identically for every emotion (the topic cycle
/// starts at an offset drawn from `seed`), so only the keywords, which belong
/// to a single emotion, carry the label. Keywords cycle so every one is used.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic_offset = rng.random_range(0..SYNTHETIC_TOPICS.len());
    let mut out = Vec::with_capacity(per_class * NUM_EMOTIONS);
    for label in EmotionLabel::ALL {
        let keywords = &SYNTHETIC_KEYWORDS[label.index()];
        for i in 0..per_class {
            let template = SYNTHETIC_TEMPLATES[i % SYNTHETIC_TEMPLATES.len()];
            let topic = SYNTHETIC_TOPICS[(i + topic_offset) % SYNTHETIC_TOPICS.len()];
            let k = keywords[i % keywords.len()];
            let k2 = keywords[(i + 1 + i / keywords.len()) % keywords.len()];
            let text = template.replace("{k2}", k2).replace("{k}", k).replace("{t}", topic);
            out.push(LabeledSentence::new(text, label, "synthetic"));
        }
    }
    out
}

/// Words used by [`synthetic_corpus`]: the keywords of each emotion (in
/// canonical order) and the shared filler vocabulary.
pub fn synthetic_lexicon() -> (Vec<Vec<&'static str>>, Vec<String>) {
    let keywords = SYNTHETIC_KEYWORDS.iter().map(|k| k.to_vec()).collect();
    let mut fillers: Vec<String> = SYNTHETIC_TEMPLATES
        .iter()
        .chain(SYNTHETIC_TOPICS.iter())
        .flat_map(|s| s.split_whitespace())
        .filter(|w| !w.starts_with('{'))
        .map(str::to_string)
        .collect();
    fillers.sort();
    fillers.dedup();
    (keywords, fillers)
}

/// Per-source, per-emotion counts for ingest reports.
pub fn source_summary(rows: &[LabeledSentence]) -> BTreeMap<String, [usize; NUM_EMOTIONS]> {
    let mut out: BTreeMap<String, [usize; NUM_EMOTIONS]> = BTreeMap::new();
    for row in rows {
        out.entry(row.source_id.clone()).or_insert([0; NUM_EMOTIONS])[row.label.index()] += 1;
    }
    out
}
