//! Confusion matrices and the evaluation indexes used for model selection.
//!
//! The positive class is **non-crisis** (`+1`): sensitivity is the share of
//! calm months classified as calm, specificity the share of crisis months
//! classified as crisis. The noise-to-signal ratio is
//! `(1 - sensitivity) / specificity`, undefined when specificity is zero.

use std::fmt::Write as _;

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    /// Actual +1, predicted +1.
    pub tp: usize,
    /// Actual -1, predicted -1.
    pub tn: usize,
    /// Actual -1, predicted +1.
    pub fp: usize,
    /// Actual +1, predicted -1.
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn errors(&self) -> usize {
        self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    /// `None` when specificity is zero.
    pub nsr: Option<f64>,
}

pub fn confusion(actual: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidParameter(
            "confusion matrix needs at least one case".into(),
        ));
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        match (a, p) {
            (Label::NonCrisis, Label::NonCrisis) => cm.tp += 1,
            (Label::Crisis, Label::Crisis) => cm.tn += 1,
            (Label::Crisis, Label::NonCrisis) => cm.fp += 1,
            (Label::NonCrisis, Label::Crisis) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Same as [`confusion`] for raw `+1`/`-1` integers.
pub fn confusion_from_signs(actual: &[i32], predicted: &[i32]) -> Result<ConfusionMatrix> {
    let a = actual
        .iter()
        .map(|&s| Label::from_sign(s))
        .collect::<Result<Vec<_>>>()?;
    let p = predicted
        .iter()
        .map(|&s| Label::from_sign(s))
        .collect::<Result<Vec<_>>>()?;
    confusion(&a, &p)
}

/// An empty class gets a rate of 1 so single-class evaluation sets do not fail.
pub fn rates(cm: &ConfusionMatrix) -> Result<EvaluationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidParameter("confusion matrix is empty".into()));
    }
    let sensitivity = ratio_or_one(cm.tp, cm.positives());
    let specificity = ratio_or_one(cm.tn, cm.negatives());
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    Ok(EvaluationReport {
        confusion: *cm,
        sensitivity,
        specificity,
        accuracy,
        nsr: nsr(sensitivity, specificity),
    })
}

pub fn nsr(sensitivity: f64, specificity: f64) -> Option<f64> {
    if specificity > 0.0 {
        Some((1.0 - sensitivity) / specificity)
    } else {
        None
    }
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(actual: &[Label], predicted: &[Label]) -> Result<EvaluationReport> {
    rates(&confusion(actual, predicted)?)
}

pub fn format_nsr(nsr: Option<f64>) -> String {
    match nsr {
        Some(v) => format!("{:.4}", v),
        None => "undefined".to_string(),
    }
}

impl EvaluationReport {
    /// Sorting key with undefined NSR after every defined value.
    pub fn nsr_key(&self) -> f64 {
        self.nsr.unwrap_or(f64::INFINITY)
    }

    /// Printed NSR. A set without crisis cases has no signals to score, so
    /// its NSR reads `undefined` even though the rate conventions give a number.
    pub fn nsr_text(&self) -> String {
        if self.confusion.negatives() == 0 {
            return "undefined".to_string();
        }
        format_nsr(self.nsr)
    }

    /// Key/value block: headline rates first, then the raw counts.
    pub fn render(&self, polynomial_order: Option<u32>, support_vectors: Option<usize>) -> String {
        let mut out = String::new();
        let order = polynomial_order.map_or_else(|| "n/a".to_string(), |p| p.to_string());
        let svs = support_vectors.map_or_else(|| "n/a".to_string(), |n| n.to_string());
        let cm = &self.confusion;
        let _ = writeln!(out, "polynomial_order: {order}");
        let _ = writeln!(out, "support_vectors: {svs}");
        let _ = writeln!(out, "sensitivity_pct: {:.2}", 100.0 * self.sensitivity);
        let _ = writeln!(out, "specificity_pct: {:.2}", 100.0 * self.specificity);
        let _ = writeln!(out, "accuracy_pct: {:.2}", 100.0 * self.accuracy);
        let _ = writeln!(out, "nsr: {}", self.nsr_text());
        let _ = writeln!(out, "sensitivity: {:.4}", self.sensitivity);
        let _ = writeln!(out, "specificity: {:.4}", self.specificity);
        let _ = writeln!(out, "accuracy: {:.4}", self.accuracy);
        let _ = writeln!(out, "cases: {}", cm.total());
        let _ = writeln!(out, "tp: {}", cm.tp);
        let _ = writeln!(out, "tn: {}", cm.tn);
        let _ = writeln!(out, "fp: {}", cm.fp);
        let _ = writeln!(out, "fn: {}", cm.fn_);
        out
    }
}
