//! Python bindings: corpus helpers, the classifier, appraisal, BML,
//! evaluation metrics and the interaction engine.

use std::path::PathBuf;

use afeng::affect::{self, EmotionDistribution};
use afeng::classifier::{synthetic_vector_map, EmotionClassifier, FitOptions};
use afeng::corpus::{split, synthetic_corpus};
use afeng::runtime::{sha256_hex, Engine, EngineOptions, HomeLayout, RuntimeError};
use afeng::{bml, eval, textprep, EmotionLabel, NUM_EMOTIONS};
use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn label(name: &str) -> PyResult<EmotionLabel> {
    EmotionLabel::parse(name).ok_or_else(|| PyKeyError::new_err(format!("unknown emotion {name:?}")))
}

fn labels(names: Vec<String>) -> PyResult<Vec<EmotionLabel>> {
    names.iter().map(|n| label(n)).collect()
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (_, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(value_err)?)
}

fn distribution(probs: Vec<f64>) -> PyResult<EmotionDistribution> {
    let arr: [f64; NUM_EMOTIONS] = probs
        .try_into()
        .map_err(|v: Vec<f64>| PyValueError::new_err(format!("expected 8 probabilities, got {}", v.len())))?;
    EmotionDistribution::new(arr).map_err(value_err)
}

/// Emotion names in canonical order.
#[pyfunction]
fn emotions() -> Vec<&'static str> {
    EmotionLabel::ALL.iter().map(|e| e.name()).collect()
}

/// The built-in keyword corpus as `(text, label)` pairs.
#[pyfunction]
#[pyo3(signature = (per_class=20, seed=42))]
fn synthetic_sentences(per_class: usize, seed: u64) -> Vec<(String, String)> {
    synthetic_corpus(per_class, seed)
        .into_iter()
        .map(|r| (r.text, r.label.name().to_string()))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (text, remove_stopwords=true, stem=true))]
fn tokens(text: &str, remove_stopwords: bool, stem: bool) -> Vec<String> {
    textprep::PreprocessConfig {
        remove_stopwords,
        stem,
        ..Default::default()
    }
    .tokens(text)
}

/// Appraisal of an 8-probability distribution (canonical order).
#[pyfunction]
fn appraise(py: Python<'_>, probs: Vec<f64>) -> PyResult<Py<PyAny>> {
    serialize_to_py(py, &affect::appraise(&distribution(probs)?))
}

#[pyfunction]
fn behaviors(py: Python<'_>, emotion: &str) -> PyResult<Py<PyAny>> {
    serialize_to_py(py, &affect::derive_behaviors(label(emotion)?))
}

/// `(agent emotion, valence)` for a human emotion.
#[pyfunction]
fn agent_emotion(emotion: &str) -> PyResult<(String, String)> {
    let (name, valence) = affect::map_agent_emotion(label(emotion)?);
    Ok((name.to_string(), valence.name().to_string()))
}

/// Canonical BML for a distribution.
#[pyfunction]
fn bml_for(probs: Vec<f64>) -> PyResult<String> {
    let a = affect::appraise(&distribution(probs)?);
    let b = affect::derive_behaviors(a.dominant);
    Ok(bml::serialize(&bml::compose(&a, &b)))
}

/// Validation errors for a BML document; empty when valid.
#[pyfunction]
fn validate_bml(xml: &str) -> Vec<String> {
    match bml::validate(xml) {
        Ok(_) => Vec::new(),
        Err(errors) => errors.iter().map(ToString::to_string).collect(),
    }
}

#[pyfunction]
fn confusion_matrix(truth: Vec<String>, predicted: Vec<String>) -> PyResult<Vec<Vec<u64>>> {
    let cm = eval::confusion(&labels(truth)?, &labels(predicted)?).map_err(value_err)?;
    Ok(cm.counts.iter().map(|r| r.to_vec()).collect())
}

/// Per-class and macro-averaged precision, recall, F1 and support.
#[pyfunction]
fn classification_report(py: Python<'_>, truth: Vec<String>, predicted: Vec<String>) -> PyResult<Py<PyAny>> {
    let cm = eval::confusion(&labels(truth)?, &labels(predicted)?).map_err(value_err)?;
    let rep = eval::report(&cm);
    let out = PyDict::new(py);
    let metrics = |m: &eval::ClassMetrics| -> PyResult<Bound<'_, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("precision", m.precision)?;
        d.set_item("recall", m.recall)?;
        d.set_item("f1", m.f1)?;
        d.set_item("support", m.support)?;
        Ok(d)
    };
    for (e, m) in EmotionLabel::ALL.iter().zip(&rep.per_class) {
        out.set_item(e.name(), metrics(m)?)?;
    }
    out.set_item("macro", metrics(&rep.macro_avg)?)?;
    out.set_item("text", rep.to_text())?;
    Ok(out.into_any().unbind())
}

#[pyfunction]
fn f1_score(precision: f64, recall: f64) -> f64 {
    eval::f1_score(precision, recall)
}

/// `(r, two-tailed p)`.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let c = eval::pearson(&x, &y).map_err(value_err)?;
    Ok((c.r, c.p))
}

#[pyclass(name = "Classifier", frozen)]
struct PyClassifier {
    inner: EmotionClassifier,
}

#[pymethods]
impl PyClassifier {
    /// Loads `model.ckpt` and `vocab.tsv` from a model directory.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        EmotionClassifier::load(&dir)
            .map(|inner| Self { inner })
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Trains on the built-in keyword corpus with synthetic vectors.
    /// Returns the classifier and the held-out `(text, label)` pairs.
    #[staticmethod]
    #[pyo3(signature = (per_class=20, seed=42, epochs=None, test_fraction=0.25))]
    fn train_synthetic(
        py: Python<'_>,
        per_class: usize,
        seed: u64,
        epochs: Option<usize>,
        test_fraction: f64,
    ) -> PyResult<(Self, Vec<(String, String)>)> {
        let parts = split(&synthetic_corpus(per_class, seed), seed, test_fraction, 0.0).map_err(value_err)?;
        let mut options = FitOptions::synthetic(seed);
        if let Some(n) = epochs {
            options.train.epochs = n;
        }
        let vectors = synthetic_vector_map(&options.preprocess, seed);
        let (inner, _) = py
            .detach(|| EmotionClassifier::fit(&parts, Some(&vectors), &options))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let held_out = parts.test.into_iter().map(|r| (r.text, r.label.name().to_string())).collect();
        Ok((Self { inner }, held_out))
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Probabilities keyed by emotion name.
    fn distribution(&self, text: &str) -> PyResult<Vec<(String, f64)>> {
        let probs = self.inner.distribution(text).map_err(value_err)?;
        Ok(EmotionLabel::ALL.iter().zip(probs).map(|(e, p)| (e.name().to_string(), p)).collect())
    }

    fn predict(&self, text: &str) -> PyResult<String> {
        Ok(self.inner.predict(text).map_err(value_err)?.name().to_string())
    }

    fn checkpoint_hash(&self) -> String {
        sha256_hex(&self.inner.checkpoint_bytes())
    }

    #[getter]
    fn vocabulary_size(&self) -> usize {
        self.inner.vocab.len()
    }
}

fn runtime_err(e: RuntimeError) -> PyErr {
    match e.status() {
        400 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// The interaction pipeline over a data home (model/ and memory/).
#[pyclass(name = "Engine", frozen)]
struct PyEngine {
    inner: Engine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (home, blend=0.0))]
    fn new(home: PathBuf, blend: f64) -> PyResult<Self> {
        let options = EngineOptions {
            blend,
            ..Default::default()
        };
        Engine::open_home(&HomeLayout::new(home), options)
            .map(|inner| Self { inner })
            .map_err(runtime_err)
    }

    fn interact(&self, py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
        let response = py.detach(|| self.inner.handle_interact(text)).map_err(runtime_err)?;
        serialize_to_py(py, &response)
    }

    #[pyo3(signature = (n=10))]
    fn history(&self, py: Python<'_>, n: usize) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &self.inner.handle_history(n))
    }

    fn model_info(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &self.inner.model_info().map_err(runtime_err)?)
    }
}

#[pymodule]
#[pyo3(name = "afeng")]
fn afeng_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(emotions, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(tokens, m)?)?;
    m.add_function(wrap_pyfunction!(appraise, m)?)?;
    m.add_function(wrap_pyfunction!(behaviors, m)?)?;
    m.add_function(wrap_pyfunction!(agent_emotion, m)?)?;
    m.add_function(wrap_pyfunction!(bml_for, m)?)?;
    m.add_function(wrap_pyfunction!(validate_bml, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(classification_report, m)?)?;
    m.add_function(wrap_pyfunction!(f1_score, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_class::<PyClassifier>()?;
    m.add_class::<PyEngine>()?;
    Ok(())
}
