//! The `afeng` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::{http, Engine, EngineOptions, HomeLayout, RuntimeError, DEFAULT_SEED, HOME_ENV};
use crate::affect::{appraise, derive_behaviors, EmotionDistribution};
use crate::baselines::{comparison_csv, comparison_text, default_grid, run_comparison, ComparisonConfig};
use crate::bml::{compose, serialize};
use crate::classifier::{
    synthetic_vector_map, training_vocabulary, EmotionClassifier, FitOptions, CHECKPOINT_FILE, HISTORY_FILE,
};
use crate::corpus::{
    class_histogram, consolidate, consolidate_and_balance, load_corpus, save_corpus, split, synthetic_corpus,
    CorpusFormat, CorpusSplit, LabeledSentence, DEFAULT_VALIDATION_FRACTION,
};
use crate::embeddings::{open_vectors, parse_vectors_keyed};
use crate::emotion::EmotionLabel;
use crate::eval::{confusion, report};
use crate::neural::LayerOrder;

pub const TRAIN_FILE: &str = "train.tsv";
pub const VALIDATION_FILE: &str = "validation.tsv";
pub const TEST_FILE: &str = "test.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "afeng", version, about = "Emotion-oriented behavior engine")]
pub struct Cli {
    /// Data directory (holds data/, model/, reports/, memory/, ui/).
    #[arg(long, global = true, env = HOME_ENV)]
    pub home: Option<PathBuf>,
    /// Seed for every random choice; recorded in each artifact.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate, consolidate, balance and split labelled corpora.
    Ingest(IngestArgs),
    /// Train the CNN-LSTM and write the checkpoint and training history.
    Train(TrainArgs),
    /// Classification report and confusion matrix.
    Evaluate(EvaluateArgs),
    /// Baseline classifier grid against the trained model.
    Compare(CompareArgs),
    /// Run one sentence through the full pipeline and print the response.
    Predict(PredictArgs),
    /// Read sentences from standard input until EOF or `quit`.
    Interact(ServiceArgs),
    /// HTTP service and console assets.
    Serve(ServeArgs),
    /// Write the BML document for one sentence.
    ExportBml(ExportBmlArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus files (TSV, or CSV by extension) with `text` and `label` columns.
    pub inputs: Vec<PathBuf>,
    /// Use the built-in keyword corpus with this many sentences per emotion.
    #[arg(long, value_name = "PER_CLASS", conflicts_with = "inputs")]
    pub synthetic: Option<usize>,
    /// Downsample every emotion to at most this many sentences.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Keep the class counts as found instead of balancing.
    #[arg(long, conflicts_with = "per_class")]
    pub no_balance: bool,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_VALIDATION_FRACTION)]
    pub validation_fraction: f64,
    /// Output directory [default: HOME/data].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerOrderArg {
    CnnLstm,
    LstmCnn,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with train.tsv and validation.tsv [default: HOME/data].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Pretrained vectors in GloVe text format (optionally .gz).
    #[arg(long, conflicts_with = "synthetic")]
    pub vectors: Option<PathBuf>,
    /// Small architecture with synthetic vectors, sized for the built-in corpus.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub filters: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dense: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, value_enum)]
    pub layer_order: Option<LayerOrderArg>,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub keep_stopwords: bool,
    #[arg(long)]
    pub no_stem: bool,
    /// Model directory [default: HOME/model].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model directory [default: HOME/model].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labelled sentences to classify [default: HOME/data/test.tsv].
    #[arg(long, conflicts_with = "labels")]
    pub data: Option<PathBuf>,
    /// Precomputed predictions: `label` and `predicted` columns.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Report directory [default: HOME/reports].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Include this model's row; HOME/model is used when it exists.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServiceArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Weight of the recent-interaction blend, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub blend: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub text: String,
    #[command(flatten)]
    pub service: ServiceArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = DEFAULT_ADDR)]
    pub addr: String,
    /// Console asset directory [default: HOME/ui when present].
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[command(flatten)]
    pub service: ServiceArgs,
}

#[derive(Debug, Args)]
pub struct ExportBmlArgs {
    pub text: String,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

fn data_err(context: impl std::fmt::Display) -> impl FnOnce(Box<dyn std::error::Error>) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

impl From<RuntimeError> for CliError {
    fn from(e: RuntimeError) -> Self {
        match e {
            RuntimeError::EmptyText | RuntimeError::TooLong { .. } => CliError::Usage(e.to_string()),
            RuntimeError::ModelNotLoaded => CliError::Data("no trained model found; run `afeng train` first".into()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// First line of every text artifact.
pub fn seed_header(seed: u64) -> String {
    format!("# seed={seed}\n")
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let home = cli.home.map_or_else(HomeLayout::from_env, HomeLayout::new);
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => ingest(&home, seed, a),
        Command::Train(a) => train_cmd(&home, seed, a),
        Command::Evaluate(a) => evaluate(&home, seed, a),
        Command::Compare(a) => compare(&home, seed, a),
        Command::Predict(a) => predict(&home, a),
        Command::Interact(a) => interact(&home, a),
        Command::Serve(a) => serve(&home, a),
        Command::ExportBml(a) => export_bml(&home, a),
    }
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    sources: Vec<String>,
    test_fraction: f64,
    validation_fraction: f64,
    train: usize,
    validation: usize,
    test: usize,
    class_counts: BTreeMap<String, usize>,
}

fn ingest(home: &HomeLayout, seed: u64, a: IngestArgs) -> Result<(), CliError> {
    let (rows, sources) = match a.synthetic {
        Some(per_class) => {
            if per_class == 0 {
                return Err(CliError::Usage("--synthetic needs at least one sentence per emotion".into()));
            }
            (synthetic_corpus(per_class, seed), vec!["synthetic".to_string()])
        }
        None => {
            if a.inputs.is_empty() {
                return Err(CliError::Usage("give corpus files or --synthetic N".into()));
            }
            let mut loaded = Vec::new();
            for path in &a.inputs {
                let rows = load_corpus(path, CorpusFormat::from_path(path))
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                loaded.push(rows);
            }
            let rows = if a.no_balance {
                consolidate(&loaded)
            } else {
                consolidate_and_balance(&loaded, a.per_class, seed).map_err(|e| CliError::Data(e.to_string()))?
            };
            (rows, a.inputs.iter().map(|p| p.display().to_string()).collect())
        }
    };
    let parts = split(&rows, seed, a.test_fraction, a.validation_fraction).map_err(|e| match e {
        crate::corpus::CorpusError::InvalidFraction { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let out = a.out.unwrap_or_else(|| home.data_dir());
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    for (name, rows) in [(TRAIN_FILE, &parts.train), (VALIDATION_FILE, &parts.validation), (TEST_FILE, &parts.test)] {
        let path = out.join(name);
        save_corpus(&path, rows).map_err(io_err(&path))?;
    }
    let counts = class_histogram(&rows);
    let manifest = Manifest {
        seed,
        sources,
        test_fraction: a.test_fraction,
        validation_fraction: a.validation_fraction,
        train: parts.train.len(),
        validation: parts.validation.len(),
        test: parts.test.len(),
        class_counts: EmotionLabel::ALL.iter().map(|e| (e.name().to_string(), counts[e.index()])).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_artifact(&out.join(MANIFEST_FILE), &(json + "\n"))?;
    println!(
        "{} sentences: {} train, {} validation, {} test -> {}",
        rows.len(),
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        out.display()
    );
    Ok(())
}

fn load_split_file(dir: &Path, name: &str, required: bool) -> Result<Vec<LabeledSentence>, CliError> {
    let path = dir.join(name);
    if !path.exists() && !required {
        return Ok(Vec::new());
    }
    if !path.exists() {
        return Err(CliError::Data(format!("{} not found; run `afeng ingest` first", path.display())));
    }
    load_corpus(&path, CorpusFormat::from_path(&path)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_split(dir: &Path, seed: u64, need_test: bool) -> Result<CorpusSplit, CliError> {
    Ok(CorpusSplit {
        train: load_split_file(dir, TRAIN_FILE, true)?,
        validation: load_split_file(dir, VALIDATION_FILE, false)?,
        test: load_split_file(dir, TEST_FILE, need_test)?,
        seed,
    })
}

fn fit_options(seed: u64, a: &TrainArgs) -> FitOptions {
    let mut o = if a.synthetic {
        FitOptions::synthetic(seed)
    } else {
        let mut o = FitOptions::default();
        o.train.seed = seed;
        o
    };
    if let Some(v) = a.epochs {
        o.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        o.train.batch_size = v;
    }
    if let Some(v) = a.embedding_dim {
        o.model.embedding_dim = v;
    }
    if let Some(v) = a.filters {
        o.model.filter_count = v;
    }
    if let Some(v) = a.hidden {
        o.model.hidden_size = v;
    }
    if let Some(v) = a.dense {
        o.model.dense_size = v;
    }
    if let Some(v) = a.max_len {
        o.preprocess.max_len = v;
    }
    if let Some(v) = a.layer_order {
        o.model.layer_order = match v {
            LayerOrderArg::CnnLstm => LayerOrder::CnnLstm,
            LayerOrderArg::LstmCnn => LayerOrder::LstmCnn,
        };
    }
    if a.patience.is_some() {
        o.train.patience = a.patience;
    }
    if let Some(v) = a.min_count {
        o.min_count = v;
    }
    o.preprocess.remove_stopwords &= !a.keep_stopwords;
    o.preprocess.stem &= !a.no_stem;
    o
}

fn train_cmd(home: &HomeLayout, seed: u64, a: TrainArgs) -> Result<(), CliError> {
    let options = fit_options(seed, &a);
    if options.train.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be positive".into()));
    }
    if options.preprocess.max_len == 0 || options.model.embedding_dim == 0 {
        return Err(CliError::Usage("--max-len and --embedding-dim must be positive".into()));
    }
    let data_dir = a.data.clone().unwrap_or_else(|| home.data_dir());
    let parts = load_split(&data_dir, seed, false)?;

    let vectors = if a.synthetic {
        Some(synthetic_vector_map(&options.preprocess, seed))
    } else if let Some(path) = &a.vectors {
        let vocab = training_vocabulary(&parts, &options.preprocess, options.min_count);
        let reader = open_vectors(path).map_err(io_err(path))?;
        let parsed = parse_vectors_keyed(reader, options.model.embedding_dim, Some(&vocab), |t| {
            options.preprocess.vector_key(t)
        })
        .map_err(|e| data_err(path.display())(Box::new(e)))?;
        log::info!(
            "{} pretrained vectors match the vocabulary ({} lines skipped)",
            parsed.parsed,
            parsed.skipped
        );
        Some(parsed.vectors)
    } else {
        None
    };

    let (classifier, history) =
        EmotionClassifier::fit(&parts, vectors.as_ref(), &options).map_err(|e| CliError::Data(e.to_string()))?;
    let out = a.out.unwrap_or_else(|| home.model_dir());
    classifier.save(&out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    write_artifact(&out.join(HISTORY_FILE), &(seed_header(seed) + &history.to_csv()))?;

    let examples = classifier.examples(&parts.train);
    let train_acc = crate::neural::accuracy(&classifier.model, &examples).map_err(|e| CliError::Data(e.to_string()))?;
    println!(
        "trained {} epochs{}; training accuracy {:.4}; checkpoint {}",
        history.epochs.len(),
        if history.stopped_early { " (stopped early)" } else { "" },
        train_acc,
        out.join(CHECKPOINT_FILE).display()
    );
    Ok(())
}

fn load_model(home: &HomeLayout, dir: Option<&Path>) -> Result<EmotionClassifier, CliError> {
    let dir = dir.map_or_else(|| home.model_dir(), Path::to_path_buf);
    if !dir.join(CHECKPOINT_FILE).exists() {
        return Err(CliError::Data(format!(
            "no checkpoint in {}; run `afeng train` first",
            dir.display()
        )));
    }
    EmotionClassifier::load(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

/// Reads `label` (or `true`) and `predicted` columns.
pub fn read_label_pairs(path: &Path) -> Result<(Vec<EmotionLabel>, Vec<EmotionLabel>), CliError> {
    let delimiter = match CorpusFormat::from_path(path) {
        CorpusFormat::Csv => b',',
        CorpusFormat::Tsv => b'\t',
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)));
    let (Some(t), Some(p)) = (col(&["label", "true"]), col(&["predicted"])) else {
        return Err(CliError::Data(format!("{}: need `label` and `predicted` columns", path.display())));
    };
    let (mut truth, mut predicted) = (Vec::new(), Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let row = i + 2;
        let label = |c: usize| -> Result<EmotionLabel, CliError> {
            let v = record.get(c).unwrap_or("");
            EmotionLabel::parse(v).ok_or_else(|| {
                CliError::Data(format!("{}: row {row}: unknown emotion label {v:?}", path.display()))
            })
        };
        truth.push(label(t)?);
        predicted.push(label(p)?);
    }
    Ok((truth, predicted))
}

fn evaluate(home: &HomeLayout, seed: u64, a: EvaluateArgs) -> Result<(), CliError> {
    let (truth, predicted) = match &a.labels {
        Some(path) => read_label_pairs(path)?,
        None => {
            let classifier = load_model(home, a.model.as_deref())?;
            let path = a.data.clone().unwrap_or_else(|| home.data_dir().join(TEST_FILE));
            let rows = load_corpus(&path, CorpusFormat::from_path(&path))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let predicted = classifier.predict_all(&rows).map_err(|e| CliError::Data(e.to_string()))?;
            (rows.iter().map(|r| r.label).collect(), predicted)
        }
    };
    let cm = confusion(&truth, &predicted).map_err(|e| CliError::Data(e.to_string()))?;
    let rep = report(&cm);
    let out = a.out.unwrap_or_else(|| home.reports_dir());
    let header = seed_header(seed);
    write_artifact(&out.join("report.txt"), &(header.clone() + &rep.to_text()))?;
    write_artifact(&out.join("report.csv"), &(header.clone() + &rep.to_csv()))?;
    write_artifact(&out.join("confusion.csv"), &(header + &cm.to_csv()))?;
    print!("{}", rep.to_text());
    Ok(())
}

fn compare(home: &HomeLayout, seed: u64, a: CompareArgs) -> Result<(), CliError> {
    let data_dir = a.data.clone().unwrap_or_else(|| home.data_dir());
    let parts = load_split(&data_dir, seed, true)?;
    let model = match &a.model {
        Some(dir) => Some(load_model(home, Some(dir))?),
        None if home.model_dir().join(CHECKPOINT_FILE).exists() => Some(load_model(home, None)?),
        None => None,
    };
    let config = ComparisonConfig::default().with_seed(seed);
    let rows =
        run_comparison(&parts, &default_grid(), &config, model.as_ref()).map_err(|e| CliError::Data(e.to_string()))?;
    let out = a.out.unwrap_or_else(|| home.reports_dir());
    let header = seed_header(seed);
    write_artifact(&out.join("comparison.csv"), &(header.clone() + &comparison_csv(&rows)))?;
    let text = comparison_text(&rows);
    write_artifact(&out.join("comparison.txt"), &(header + &text))?;
    print!("{text}");
    Ok(())
}

fn engine(home: &HomeLayout, args: &ServiceArgs, require_model: bool) -> Result<Engine, CliError> {
    if !(0.0..=1.0).contains(&args.blend) {
        return Err(CliError::Usage(format!("--blend {} is outside [0, 1]", args.blend)));
    }
    let options = EngineOptions {
        blend: args.blend,
        ..Default::default()
    };
    let model_dir = args.model.clone().unwrap_or_else(|| home.model_dir());
    let classifier = if model_dir.join(CHECKPOINT_FILE).exists() {
        Some(load_model(home, Some(&model_dir))?)
    } else if require_model {
        return Err(RuntimeError::ModelNotLoaded.into());
    } else {
        log::warn!("no checkpoint in {}; interactions will fail until one is trained", model_dir.display());
        None
    };
    Ok(Engine::new(classifier, &home.memory_log(), &model_dir, options)?)
}

fn predict(home: &HomeLayout, a: PredictArgs) -> Result<(), CliError> {
    let engine = engine(home, &a.service, true)?;
    let response = engine.handle_interact(&a.text)?;
    println!("{}", serde_json::to_string_pretty(&response).expect("response serializes"));
    Ok(())
}

fn interact(home: &HomeLayout, a: ServiceArgs) -> Result<(), CliError> {
    let engine = engine(home, &a, true)?;
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let prompt = |out: &mut std::io::Stdout| {
        let _ = write!(out, "> ");
        let _ = out.flush();
    };
    prompt(&mut stdout);
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Data(format!("standard input: {e}")))?;
        let text = line.trim();
        if text.eq_ignore_ascii_case("quit") || text.eq_ignore_ascii_case("exit") {
            break;
        }
        if !text.is_empty() {
            match engine.handle_interact(text) {
                Ok(r) => {
                    let _ = writeln!(
                        stdout,
                        "{} ({:.3}, {}) agent: {}; self: {}; other: {}",
                        r.dominant,
                        r.intensity,
                        r.valence.name(),
                        r.agent_emotion,
                        r.behaviors.self_behavior,
                        r.behaviors.other
                    );
                }
                Err(e @ (RuntimeError::EmptyText | RuntimeError::TooLong { .. })) => {
                    let _ = writeln!(stdout, "{e}");
                }
                Err(e) => return Err(e.into()),
            }
        }
        prompt(&mut stdout);
    }
    Ok(())
}

fn serve(home: &HomeLayout, a: ServeArgs) -> Result<(), CliError> {
    let engine = Arc::new(engine(home, &a.service, false)?);
    let ui_dir = a.ui_dir.clone().or_else(|| Some(home.ui_dir()).filter(|d| d.is_dir()));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("cannot start the async runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot listen on {}: {e}", a.addr)))?;
        println!("listening on http://{}", listener.local_addr().map_err(|e| CliError::Data(e.to_string()))?);
        http::serve(listener, engine, ui_dir)
            .await
            .map_err(|e| CliError::Data(format!("server error: {e}")))
    })
}

fn export_bml(home: &HomeLayout, a: ExportBmlArgs) -> Result<(), CliError> {
    let text = a.text.trim();
    if text.is_empty() {
        return Err(RuntimeError::EmptyText.into());
    }
    let classifier = load_model(home, a.model.as_deref())?;
    let probs = classifier.distribution(text).map_err(|e| CliError::Data(e.to_string()))?;
    let dist = EmotionDistribution::new(probs).map_err(|e| CliError::Data(e.to_string()))?;
    let appraisal = appraise(&dist);
    let xml = serialize(&compose(&appraisal, &derive_behaviors(appraisal.dominant)));
    match &a.out {
        Some(path) => write_artifact(path, &xml),
        None => {
            print!("{xml}");
            Ok(())
        }
    }
}
