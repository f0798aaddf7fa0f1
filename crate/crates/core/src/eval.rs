//! Confusion matrices, classification reports and Pearson correlation.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::emotion::{EmotionLabel, NUM_EMOTIONS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no examples to evaluate")]
    Empty,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Rows are true labels, columns predictions, both in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_EMOTIONS]; NUM_EMOTIONS],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_EMOTIONS).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    /// CSV grid with emotion-name headers; the corner cell is `true\predicted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for e in EmotionLabel::ALL {
            write!(out, ",{}", e.name()).unwrap();
        }
        out.push('\n');
        for (e, row) in EmotionLabel::ALL.iter().zip(&self.counts) {
            out.push_str(e.name());
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(truth: &[EmotionLabel], predicted: &[EmotionLabel]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub per_class: [ClassMetrics; NUM_EMOTIONS],
    /// Unweighted mean over the eight classes; `support` is the total.
    pub macro_avg: ClassMetrics,
    /// Set when some metric had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn report(cm: &ConfusionMatrix) -> ClassificationReport {
    let mut per_class = [ClassMetrics::default(); NUM_EMOTIONS];
    let mut zero_division = false;
    for (c, m) in per_class.iter_mut().enumerate() {
        let (tp, predicted, support) = (cm.counts[c][c], cm.col_sum(c), cm.row_sum(c));
        zero_division |= predicted == 0 || support == 0;
        m.precision = ratio(tp, predicted);
        m.recall = ratio(tp, support);
        m.f1 = f1_score(m.precision, m.recall);
        m.support = support;
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / NUM_EMOTIONS as f64;
    let macro_avg = ClassMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        support: cm.total(),
    };
    ClassificationReport {
        per_class,
        macro_avg,
        zero_division,
    }
}

impl ClassificationReport {
    /// Aligned text table: Precision, Recall, F1-score, Support.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<14}{:>10}{:>10}{:>10}{:>10}\n", "", "Precision", "Recall", "F1-score", "Support");
        let mut line = |name: &str, m: &ClassMetrics| {
            writeln!(
                out,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                name, m.precision, m.recall, m.f1, m.support
            )
            .unwrap();
        };
        for (e, m) in EmotionLabel::ALL.iter().zip(&self.per_class) {
            line(e.name(), m);
        }
        line("Average", &self.macro_avg);
        if self.zero_division {
            out.push_str("* metrics with a zero denominator are reported as 0\n");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("emotion,precision,recall,f1,support\n");
        let rows = EmotionLabel::ALL
            .iter()
            .map(|e| e.name())
            .zip(&self.per_class)
            .chain(std::iter::once(("Average", &self.macro_avg)));
        for (name, m) in rows {
            writeln!(out, "{name},{},{},{},{}", m.precision, m.recall, m.f1, m.support).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed p-value from Student's t with `n - 2` degrees of freedom.
    pub p: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            truth: x.len(),
            predicted: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(EvalError::DegenerateInput(format!("need at least 3 points, got {n}")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::DegenerateInput("zero variance".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * dist.cdf(-t.abs())
    };
    Ok(Correlation { r, p, n })
}
