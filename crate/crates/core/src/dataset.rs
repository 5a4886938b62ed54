//! Labelled training data.
//!
//! Labels follow the crisis encoding: `+1` is a calm (non-crisis) month and
//! is the positive class for every rate in [`crate::metrics`]; `-1` is a
//! crisis month.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Crisis,
    NonCrisis,
}

impl Label {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::NonCrisis => 1.0,
            Label::Crisis => -1.0,
        }
    }

    /// Sign of a decision value; an exact zero maps to non-crisis.
    #[inline]
    pub fn from_decision(value: f64) -> Self {
        if value < 0.0 {
            Label::Crisis
        } else {
            Label::NonCrisis
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Label::NonCrisis),
            -1 => Ok(Label::Crisis),
            other => Err(Error::InvalidParameter(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::NonCrisis => write!(f, "+1"),
            Label::Crisis => write!(f, "-1"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" => Ok(Label::NonCrisis),
            "-1" => Ok(Label::Crisis),
            other => Err(Error::InvalidParameter(format!(
                "label must be +1 or -1, got '{other}'"
            ))),
        }
    }
}

/// Feature vectors paired with labels, plus the label horizon that produced them
/// (0 = same month, 1 = next month).
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
    pub horizon: usize,
}

impl SupervisedSet {
    /// Checks shape invariants: equal lengths, at least two rows, one common
    /// non-zero dimension, finite entries. Class balance is not checked here.
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Label>, horizon: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "supervised set needs at least 2 rows, got {}",
                x.len()
            )));
        }
        let dim = x[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("feature vectors must be non-empty".into()));
        }
        for row in &x {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(SupervisedSet { x, y, horizon })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn count(&self, label: Label) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(Label::Crisis) > 0 && self.count(Label::NonCrisis) > 0
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> SupervisedSet {
        SupervisedSet {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            horizon: self.horizon,
        }
    }

    pub fn signs(&self) -> Vec<f64> {
        self.y.iter().map(|l| l.sign()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_decision_is_non_crisis() {
        assert_eq!(Label::from_decision(0.0), Label::NonCrisis);
        assert_eq!(Label::from_decision(-0.0), Label::NonCrisis);
        assert_eq!(Label::from_decision(-1e-300), Label::Crisis);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = SupervisedSet::new(
            vec![vec![1.0, 2.0], vec![1.0]],
            vec![Label::Crisis, Label::NonCrisis],
            0,
        );
        assert!(err.is_err());
        assert!(SupervisedSet::new(vec![vec![1.0]], vec![Label::Crisis], 0).is_err());
    }

    #[test]
    fn label_text() {
        assert_eq!("+1".parse::<Label>().unwrap(), Label::NonCrisis);
        assert_eq!("-1".parse::<Label>().unwrap(), Label::Crisis);
        assert_eq!(Label::Crisis.to_string(), "-1");
        assert!("0".parse::<Label>().is_err());
    }
}
