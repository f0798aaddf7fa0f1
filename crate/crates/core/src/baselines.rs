//! Classical baselines for comparison with the CNN-LSTM: sparse bag-of-words,
//! TF-IDF and hashing features fed to one-vs-rest SGD linear models or a
//! one-hidden-layer MLP.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::classifier::EmotionClassifier;
use crate::corpus::{CorpusSplit, LabeledSentence};
use crate::emotion::{EmotionLabel, NUM_EMOTIONS};
use crate::eval::{confusion, report, EvalError};
use crate::neural::layers::{sigmoid, softmax};
use crate::textprep::PreprocessConfig;

pub const HASHING_DIM: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("vectorizer used before fit")]
    NotFitted,
    #[error("no training examples for class {0}")]
    MissingClass(usize),
    #[error("feature dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("CNN-LSTM prediction failed: {0}")]
    Neural(String),
}

/// Sparse vector with strictly ascending indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Sums duplicate indices and drops entries that end up zero.
    ///
    /// # Panics
    /// If an index is `>= dim`.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            assert!(i < dim, "feature index {i} out of range for dimension {dim}");
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        Self { indices, values, dim }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_pairs(values.len(), values.iter().copied().enumerate())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit l2 norm; the zero vector stays zero.
    pub fn l2_normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VectorizerMode {
    Bow,
    Tfidf,
    Hashing,
}

impl VectorizerMode {
    pub fn display_name(self) -> &'static str {
        match self {
            VectorizerMode::Bow => "Bag-of-words",
            VectorizerMode::Tfidf => "Tf-idf",
            VectorizerMode::Hashing => "Hashing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    mode: VectorizerMode,
    vocab: HashMap<String, usize>,
    idf: Vec<f64>,
    fitted: bool,
}

impl Vectorizer {
    pub fn new(mode: VectorizerMode) -> Self {
        Self {
            mode,
            vocab: HashMap::new(),
            idf: Vec::new(),
            fitted: mode == VectorizerMode::Hashing,
        }
    }

    pub fn mode(&self) -> VectorizerMode {
        self.mode
    }

    /// Learns the vocabulary (lexicographic ids) and, for TF-IDF, smoothed
    /// inverse document frequencies. A no-op for hashing.
    pub fn fit(&mut self, docs: &[Vec<String>]) -> &mut Self {
        if self.mode == VectorizerMode::Hashing {
            return self;
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        self.vocab = df.keys().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        self.idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        self.fitted = true;
        self
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            VectorizerMode::Hashing => HASHING_DIM,
            _ => self.vocab.len(),
        }
    }

    pub fn feature_index(&self, token: &str) -> Option<usize> {
        self.vocab.get(token).copied()
    }

    pub fn transform(&self, tokens: &[String]) -> Result<SparseVector, BaselineError> {
        if !self.fitted {
            return Err(BaselineError::NotFitted);
        }
        Ok(match self.mode {
            VectorizerMode::Bow => {
                SparseVector::from_pairs(self.dim(), tokens.iter().filter_map(|t| self.feature_index(t)).map(|i| (i, 1.0)))
            }
            VectorizerMode::Tfidf => SparseVector::from_pairs(
                self.dim(),
                tokens
                    .iter()
                    .filter_map(|t| self.feature_index(t))
                    .map(|i| (i, self.idf[i])),
            )
            .l2_normalized(),
            VectorizerMode::Hashing => {
                SparseVector::from_pairs(HASHING_DIM, tokens.iter().map(|t| hash_feature(t))).l2_normalized()
            }
        })
    }
}

/// Signed feature hash from the first eight bytes of the token's SHA-256.
pub fn hash_feature(token: &str) -> (usize, f64) {
    let digest = Sha256::digest(token.as_bytes());
    let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % HASHING_DIM as u64) as usize, sign)
}

fn check_classes(labels: impl Iterator<Item = usize>, classes: usize) -> Result<(), BaselineError> {
    let mut seen = vec![false; classes];
    for y in labels {
        if y < classes {
            seen[y] = true;
        }
    }
    match seen.iter().position(|s| !s) {
        Some(c) => Err(BaselineError::MissingClass(c)),
        None => Ok(()),
    }
}

fn check_dims(data: &[(SparseVector, usize)]) -> Result<usize, BaselineError> {
    let dim = data.first().map_or(0, |(x, _)| x.dim());
    for (x, _) in data {
        if x.dim() != dim {
            return Err(BaselineError::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
    }
    Ok(dim)
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// One weight row per class (canonical emotion order for emotion data).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub dim: usize,
    /// Row-major `classes × dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.classes()).map(|c| x.dot(self.row(c)) + self.bias[c]).collect()
    }

    /// Highest score; ties go to the lowest class index.
    pub fn predict(&self, x: &SparseVector) -> usize {
        argmax(&self.scores(x))
    }
}

/// One-vs-rest SGD over shuffled examples with L2 weight decay (bias
/// unregularized). Each class row is kept as `scale * v` so a step only
/// touches the example's non-zero features.
pub fn train_linear(
    data: &[(SparseVector, usize)],
    classes: usize,
    kind: LinearKind,
    config: &LinearConfig,
) -> Result<LinearModel, BaselineError> {
    check_classes(data.iter().map(|(_, y)| *y), classes)?;
    let dim = check_dims(data)?;
    let mut v = vec![0.0; classes * dim];
    let mut scale = vec![1.0; classes];
    let mut bias = vec![0.0; classes];
    let decay = 1.0 - config.learning_rate * config.l2;
    assert!(decay > 0.0, "learning_rate * l2 must be below 1");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &n in &order {
            let (x, y) = &data[n];
            for c in 0..classes {
                let row = &mut v[c * dim..(c + 1) * dim];
                let target = if *y == c { 1.0 } else { -1.0 };
                let margin = scale[c] * x.dot(row) + bias[c];
                let g = match kind {
                    LinearKind::Logistic => -target * sigmoid(-target * margin),
                    LinearKind::Hinge if target * margin < 1.0 => -target,
                    LinearKind::Hinge => 0.0,
                };
                scale[c] *= decay;
                if g != 0.0 {
                    let step = config.learning_rate * g;
                    for (i, xi) in x.iter() {
                        row[i] -= step * xi / scale[c];
                    }
                    bias[c] -= step;
                }
                if scale[c] < 1e-9 {
                    row.iter_mut().for_each(|w| *w *= scale[c]);
                    scale[c] = 1.0;
                }
            }
        }
    }
    for c in 0..classes {
        v[c * dim..(c + 1) * dim].iter_mut().for_each(|w| *w *= scale[c]);
    }
    Ok(LinearModel {
        kind,
        dim,
        weights: v,
        bias,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            learning_rate: 0.05,
            epochs: 100,
            seed: 42,
        }
    }
}

/// One hidden ReLU layer and a softmax output. Input-layer rows are created
/// lazily from a per-feature random stream, so wide hashed inputs cost memory
/// only for features actually seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub dim: usize,
    pub hidden: usize,
    pub classes: usize,
    seed: u64,
    init_bound: f64,
    w1: BTreeMap<usize, Vec<f64>>,
    pub b1: Vec<f64>,
    /// Row-major `hidden × classes`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: BTreeMap<usize, Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct MlpTrace {
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let out_bound = (6.0 / (hidden + classes) as f64).sqrt();
        let w2 = (0..hidden * classes).map(|_| rng.random_range(-out_bound..=out_bound)).collect();
        Self {
            dim,
            hidden,
            classes,
            seed,
            init_bound: (6.0 / (dim + hidden) as f64).sqrt(),
            w1: BTreeMap::new(),
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; classes],
        }
    }

    fn initial_row(&self, feature: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(feature as u64);
        (0..self.hidden)
            .map(|_| rng.random_range(-self.init_bound..=self.init_bound))
            .collect()
    }

    pub fn w1_row(&self, feature: usize) -> std::borrow::Cow<'_, [f64]> {
        match self.w1.get(&feature) {
            Some(row) => row.as_slice().into(),
            None => self.initial_row(feature).into(),
        }
    }

    pub fn w1_row_mut(&mut self, feature: usize) -> &mut Vec<f64> {
        if !self.w1.contains_key(&feature) {
            let row = self.initial_row(feature);
            self.w1.insert(feature, row);
        }
        self.w1.get_mut(&feature).expect("row just inserted")
    }

    fn trace(&self, x: &SparseVector) -> MlpTrace {
        let mut hidden = self.b1.clone();
        for (i, xi) in x.iter() {
            for (h, w) in hidden.iter_mut().zip(self.w1_row(i).iter()) {
                *h += xi * w;
            }
        }
        hidden.iter_mut().for_each(|h| *h = h.max(0.0));
        let mut logits = self.b2.clone();
        for (j, h) in hidden.iter().enumerate() {
            for (c, z) in logits.iter_mut().enumerate() {
                *z += h * self.w2[j * self.classes + c];
            }
        }
        MlpTrace {
            hidden,
            probs: softmax(&logits),
        }
    }

    pub fn predict_proba(&self, x: &SparseVector) -> Vec<f64> {
        self.trace(x).probs
    }

    pub fn predict(&self, x: &SparseVector) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// Mean cross-entropy.
    pub fn loss(&self, data: &[(SparseVector, usize)]) -> f64 {
        let total: f64 = data.iter().map(|(x, y)| -self.trace(x).probs[*y].max(f64::MIN_POSITIVE).ln()).sum();
        total / data.len() as f64
    }

    /// Gradients of [`Mlp::loss`].
    pub fn gradients(&self, data: &[(SparseVector, usize)]) -> MlpGradients {
        let mut g = MlpGradients {
            w1: BTreeMap::new(),
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden * self.classes],
            b2: vec![0.0; self.classes],
        };
        let scale = 1.0 / data.len() as f64;
        for (x, y) in data {
            let (grad_hidden, dz) = self.backward(x, *y);
            for (c, d) in dz.iter().enumerate() {
                g.b2[c] += scale * d;
            }
            let trace = self.trace(x);
            for (j, h) in trace.hidden.iter().enumerate() {
                for (c, d) in dz.iter().enumerate() {
                    g.w2[j * self.classes + c] += scale * h * d;
                }
            }
            for (j, d) in grad_hidden.iter().enumerate() {
                g.b1[j] += scale * d;
            }
            for (i, xi) in x.iter() {
                let row = g.w1.entry(i).or_insert_with(|| vec![0.0; self.hidden]);
                for (r, d) in row.iter_mut().zip(&grad_hidden) {
                    *r += scale * xi * d;
                }
            }
        }
        g
    }

    /// Returns (gradient at the hidden pre-activations, gradient at the logits).
    fn backward(&self, x: &SparseVector, y: usize) -> (Vec<f64>, Vec<f64>) {
        let trace = self.trace(x);
        let mut dz = trace.probs;
        dz[y] -= 1.0;
        let grad_hidden = (0..self.hidden)
            .map(|j| {
                if trace.hidden[j] > 0.0 {
                    (0..self.classes).map(|c| self.w2[j * self.classes + c] * dz[c]).sum()
                } else {
                    0.0
                }
            })
            .collect();
        (grad_hidden, dz)
    }

    fn sgd_step(&mut self, x: &SparseVector, y: usize, lr: f64) {
        let trace = self.trace(x);
        let (grad_hidden, dz) = self.backward(x, y);
        for (j, h) in trace.hidden.iter().enumerate() {
            if *h != 0.0 {
                for (c, d) in dz.iter().enumerate() {
                    self.w2[j * self.classes + c] -= lr * h * d;
                }
            }
        }
        for (b, d) in self.b2.iter_mut().zip(&dz) {
            *b -= lr * d;
        }
        for (b, d) in self.b1.iter_mut().zip(&grad_hidden) {
            *b -= lr * d;
        }
        for (i, xi) in x.iter() {
            let row = self.w1_row_mut(i);
            for (w, d) in row.iter_mut().zip(&grad_hidden) {
                *w -= lr * xi * d;
            }
        }
    }
}

/// Per-example SGD on cross-entropy over shuffled examples.
pub fn train_mlp(data: &[(SparseVector, usize)], classes: usize, config: &MlpConfig) -> Result<Mlp, BaselineError> {
    check_classes(data.iter().map(|(_, y)| *y), classes)?;
    let dim = check_dims(data)?;
    let mut model = Mlp::new(dim, config.hidden, classes, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &n in &order {
            let (x, y) = &data[n];
            model.sgd_step(x, *y, config.learning_rate);
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    SgdLogistic,
    SgdLinear,
    LinearSvc,
    Mlp,
}

impl BaselineKind {
    pub fn classifier_name(self) -> &'static str {
        match self {
            BaselineKind::SgdLogistic | BaselineKind::SgdLinear => "SGD Classifier",
            BaselineKind::LinearSvc => "Linear SVC",
            BaselineKind::Mlp => "MLP Classifier",
        }
    }

    pub fn model_name(self) -> &'static str {
        match self {
            BaselineKind::SgdLogistic => "Logistic Regression",
            BaselineKind::SgdLinear => "Linear Model",
            BaselineKind::LinearSvc => "SVM Model",
            BaselineKind::Mlp => "Multilayer Perceptron",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    pub classifier: BaselineKind,
    pub vectorizer: VectorizerMode,
}

/// The six classical rows, in table order.
pub fn default_grid() -> Vec<GridCell> {
    use BaselineKind::*;
    use VectorizerMode::*;
    [
        (SgdLogistic, Bow),
        (SgdLogistic, Tfidf),
        (SgdLogistic, Hashing),
        (Mlp, Bow),
        (SgdLinear, Bow),
        (LinearSvc, Bow),
    ]
    .into_iter()
    .map(|(classifier, vectorizer)| GridCell { classifier, vectorizer })
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub preprocess: PreprocessConfig,
    pub sgd: LinearConfig,
    pub svc: LinearConfig,
    pub mlp: MlpConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            sgd: LinearConfig::default(),
            svc: LinearConfig {
                epochs: 100,
                l2: 1e-3,
                ..LinearConfig::default()
            },
            mlp: MlpConfig::default(),
        }
    }
}

impl ComparisonConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sgd.seed = seed;
        self.svc.seed = seed;
        self.mlp.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub classifier: String,
    pub model: String,
    pub vectorizer: String,
    pub macro_precision: f64,
}

fn macro_precision(truth: &[EmotionLabel], predicted: &[EmotionLabel]) -> Result<f64, BaselineError> {
    Ok(report(&confusion(truth, predicted)?).macro_avg.precision)
}

fn run_cell(
    cell: GridCell,
    train: &[(Vec<String>, EmotionLabel)],
    test: &[(Vec<String>, EmotionLabel)],
    config: &ComparisonConfig,
) -> Result<ComparisonRow, BaselineError> {
    let mut vectorizer = Vectorizer::new(cell.vectorizer);
    let docs: Vec<Vec<String>> = train.iter().map(|(t, _)| t.clone()).collect();
    vectorizer.fit(&docs);
    let featurize = |rows: &[(Vec<String>, EmotionLabel)]| -> Result<Vec<(SparseVector, usize)>, BaselineError> {
        rows.iter().map(|(t, y)| Ok((vectorizer.transform(t)?, y.index()))).collect()
    };
    let train_x = featurize(train)?;
    let test_x = featurize(test)?;
    let predictor: Box<dyn Fn(&SparseVector) -> usize> = match cell.classifier {
        BaselineKind::SgdLogistic => {
            let m = train_linear(&train_x, NUM_EMOTIONS, LinearKind::Logistic, &config.sgd)?;
            Box::new(move |x| m.predict(x))
        }
        BaselineKind::SgdLinear => {
            let m = train_linear(&train_x, NUM_EMOTIONS, LinearKind::Hinge, &config.sgd)?;
            Box::new(move |x| m.predict(x))
        }
        BaselineKind::LinearSvc => {
            let m = train_linear(&train_x, NUM_EMOTIONS, LinearKind::Hinge, &config.svc)?;
            Box::new(move |x| m.predict(x))
        }
        BaselineKind::Mlp => {
            let m = train_mlp(&train_x, NUM_EMOTIONS, &config.mlp)?;
            Box::new(move |x| m.predict(x))
        }
    };
    let truth: Vec<EmotionLabel> = test.iter().map(|(_, y)| *y).collect();
    let predicted: Vec<EmotionLabel> = test_x
        .iter()
        .map(|(x, _)| EmotionLabel::from_index(predictor(x)).expect("class index in range"))
        .collect();
    Ok(ComparisonRow {
        classifier: cell.classifier.classifier_name().into(),
        model: cell.classifier.model_name().into(),
        vectorizer: cell.vectorizer.display_name().into(),
        macro_precision: macro_precision(&truth, &predicted)?,
    })
}

/// Trains every grid cell on `split.train` and scores macro precision on
/// `split.test`. Cells run on separate threads; row order follows `grid`.
/// When `cnn_lstm` is given its row is appended last.
pub fn run_comparison(
    split: &CorpusSplit,
    grid: &[GridCell],
    config: &ComparisonConfig,
    cnn_lstm: Option<&EmotionClassifier>,
) -> Result<Vec<ComparisonRow>, BaselineError> {
    let tokenize = |rows: &[LabeledSentence]| -> Vec<(Vec<String>, EmotionLabel)> {
        rows.iter().map(|r| (config.preprocess.tokens(&r.text), r.label)).collect()
    };
    let train = tokenize(&split.train);
    let test = tokenize(&split.test);
    let mut rows: Vec<ComparisonRow> = std::thread::scope(|s| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&cell| {
                let (train, test) = (&train, &test);
                s.spawn(move || run_cell(cell, train, test, config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("grid cell thread panicked"))
            .collect::<Result<_, _>>()
    })?;
    if let Some(model) = cnn_lstm {
        let truth: Vec<EmotionLabel> = split.test.iter().map(|r| r.label).collect();
        let predicted = model
            .predict_all(&split.test)
            .map_err(|e| BaselineError::Neural(e.to_string()))?;
        rows.push(ComparisonRow {
            classifier: "CNN-LSTM".into(),
            model: "Layered Model".into(),
            vectorizer: "Pretrained vectors".into(),
            macro_precision: macro_precision(&truth, &predicted)?,
        });
    }
    Ok(rows)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Classifier", "Model", "Vectorizer", "Average Precision"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([&r.classifier, &r.model, &r.vectorizer, &format!("{}", r.macro_precision)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let headers = ["Classifier", "Model", "Vectorizer", "Average Precision"];
    let width = |f: fn(&ComparisonRow) -> &str, h: &str| rows.iter().map(|r| f(r).len()).chain([h.len()]).max().unwrap_or(0);
    let w0 = width(|r| &r.classifier, headers[0]);
    let w1 = width(|r| &r.model, headers[1]);
    let w2 = width(|r| &r.vectorizer, headers[2]);
    let mut out = format!("{:<w0$}  {:<w1$}  {:<w2$}  {}\n", headers[0], headers[1], headers[2], headers[3]);
    for r in rows {
        writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:<w2$}  {:.2}",
            r.classifier, r.model, r.vectorizer, r.macro_precision
        )
        .unwrap();
    }
    out
}
