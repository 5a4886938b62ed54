//! Trained classifier and its text file format.
//!
//! ```text
//! crisisvm-model v1
//! kernel=poly:p=3,m=1
//! b=<real>
//! dim=<int>
//! horizon=<int>
//! features=<comma-list>
//! training=n=<int>,c=<real>,kkt_tol=<real>,iterations=<int>,nsr=<real|undefined>
//! sv: alpha=<real> y=<+1|-1> x=<comma-separated reals>
//! ...
//! end
//! ```
//!
//! Reals are written with 17 significant digits so every `f64` survives a
//! round trip unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::{Label, SupervisedSet};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::metrics;
use crate::smo::{DualSolution, SolverConfig};

pub const MODEL_HEADER: &str = "crisisvm-model";
pub const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub x: Vec<f64>,
    pub label: Label,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSummary {
    pub n: usize,
    pub c: f64,
    pub kkt_tol: f64,
    pub iterations: usize,
    pub nsr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    kernel: KernelSpec,
    support_vectors: Vec<SupportVector>,
    bias: f64,
    feature_dim: usize,
    feature_names: Vec<String>,
    horizon: usize,
    summary: TrainingSummary,
}

impl TrainedModel {
    pub fn new(
        kernel: KernelSpec,
        support_vectors: Vec<SupportVector>,
        bias: f64,
        feature_names: Vec<String>,
        horizon: usize,
        summary: TrainingSummary,
    ) -> Result<Self> {
        kernel.validate()?;
        let feature_dim = feature_names.len();
        if feature_dim == 0 {
            return Err(Error::DimensionInconsistency("model has no features".into()));
        }
        if support_vectors.is_empty() {
            return Err(Error::DimensionInconsistency("model has no support vectors".into()));
        }
        if let Some(bad) = feature_names
            .iter()
            .find(|n| n.is_empty() || n.contains([',', '\n', '\r']))
        {
            return Err(Error::InvalidParameter(format!("invalid feature name '{bad}'")));
        }
        for (i, sv) in support_vectors.iter().enumerate() {
            if sv.x.len() != feature_dim {
                return Err(Error::DimensionInconsistency(format!(
                    "support vector {i} has {} components, expected {feature_dim}",
                    sv.x.len()
                )));
            }
            if !(sv.alpha > 0.0 && sv.alpha.is_finite()) || sv.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "support vector {i} must have a positive multiplier and finite components"
                )));
            }
        }
        if !bias.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(TrainedModel {
            kernel,
            support_vectors,
            bias,
            feature_dim,
            feature_names,
            horizon,
            summary,
        })
    }

    /// Keeps the support vectors of `solution` and records the training NSR.
    pub fn from_solution(
        solution: &DualSolution,
        data: &SupervisedSet,
        kernel: KernelSpec,
        cfg: &SolverConfig,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                found: feature_names.len(),
            });
        }
        let support_vectors = solution
            .support_indices
            .iter()
            .map(|&i| SupportVector {
                x: data.x[i].clone(),
                label: data.y[i],
                alpha: solution.alphas[i],
            })
            .collect();
        let summary = TrainingSummary {
            n: data.len(),
            c: cfg.c,
            kkt_tol: cfg.kkt_tol,
            iterations: solution.iterations,
            nsr: None,
        };
        let mut model = TrainedModel::new(
            kernel,
            support_vectors,
            solution.bias,
            feature_names,
            data.horizon,
            summary,
        )?;
        model.summary.nsr = model.evaluate(data)?.nsr;
        Ok(model)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_vectors(&self) -> &[SupportVector] {
        &self.support_vectors
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn summary(&self) -> &TrainingSummary {
        &self.summary
    }

    /// `sum_s a_s y_s k(X_s, x) - b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .map(|sv| sv.alpha * sv.label.sign() * self.kernel.eval_unchecked(&sv.x, x))
            .sum();
        Ok(sum - self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(Label::from_decision)
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    pub fn evaluate(&self, data: &SupervisedSet) -> Result<metrics::EvaluationReport> {
        let predicted = self.predict_all(&data.x)?;
        metrics::evaluate(&data.y, &predicted)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.summary;
        let _ = writeln!(out, "{MODEL_HEADER} {MODEL_VERSION}");
        let _ = writeln!(out, "kernel={}", self.kernel);
        let _ = writeln!(out, "b={}", real(self.bias));
        let _ = writeln!(out, "dim={}", self.feature_dim);
        let _ = writeln!(out, "horizon={}", self.horizon);
        let _ = writeln!(out, "features={}", self.feature_names.join(","));
        let _ = writeln!(
            out,
            "training=n={},c={},kkt_tol={},iterations={},nsr={}",
            s.n,
            real(s.c),
            real(s.kkt_tol),
            s.iterations,
            s.nsr.map_or_else(|| "undefined".to_string(), real)
        );
        for sv in &self.support_vectors {
            let xs: Vec<String> = sv.x.iter().map(|&v| real(v)).collect();
            let _ = writeln!(out, "sv: alpha={} y={} x={}", real(sv.alpha), sv.label, xs.join(","));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed("empty document"))?;
        let version = header
            .strip_prefix(MODEL_HEADER)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| malformed("missing header line"))?;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch(version.to_string()));
        }

        let mut field = |key: &str| -> Result<&str> {
            let line = lines
                .next()
                .ok_or_else(|| malformed(&format!("missing '{key}' line")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| malformed(&format!("expected '{key}=', found '{line}'")))
        };
        let kernel: KernelSpec = field("kernel")?.parse()?;
        let bias = parse_real(field("b")?, "b")?;
        let dim: usize = parse_int(field("dim")?, "dim")?;
        let horizon: usize = parse_int(field("horizon")?, "horizon")?;
        let features_text = field("features")?;
        let feature_names: Vec<String> = if features_text.is_empty() {
            Vec::new()
        } else {
            features_text.split(',').map(str::to_string).collect()
        };
        let summary = parse_summary(field("training")?)?;
        if feature_names.len() != dim {
            return Err(Error::DimensionInconsistency(format!(
                "dim={dim} but {} feature names",
                feature_names.len()
            )));
        }

        let mut support_vectors = Vec::new();
        let mut terminated = false;
        for line in lines.by_ref() {
            if line == "end" {
                terminated = true;
                break;
            }
            support_vectors.push(parse_sv(line, dim)?);
        }
        if !terminated {
            return Err(malformed("missing 'end' line"));
        }
        if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
            return Err(malformed(&format!("unexpected content after 'end': '{extra}'")));
        }
        TrainedModel::new(kernel, support_vectors, bias, feature_names, horizon, summary)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn malformed(msg: &str) -> Error {
    Error::MalformedModel(msg.to_string())
}

fn parse_real(text: &str, what: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| malformed(&format!("bad number '{text}' for {what}")))?;
    if !v.is_finite() {
        return Err(malformed(&format!("non-finite {what}")));
    }
    Ok(v)
}

fn parse_int(text: &str, what: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| malformed(&format!("bad integer '{text}' for {what}")))
}

fn parse_summary(text: &str) -> Result<TrainingSummary> {
    let mut parts = text.split(',');
    let mut next = |key: &str| -> Result<&str> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .and_then(|p| p.strip_prefix('='))
            .ok_or_else(|| malformed(&format!("training summary is missing '{key}'")))
    };
    let n = parse_int(next("n")?, "training n")?;
    let c = parse_real(next("c")?, "training c")?;
    let kkt_tol = parse_real(next("kkt_tol")?, "training kkt_tol")?;
    let iterations = parse_int(next("iterations")?, "training iterations")?;
    let nsr = match next("nsr")? {
        "undefined" => None,
        v => Some(parse_real(v, "training nsr")?),
    };
    if parts.next().is_some() {
        return Err(malformed("trailing fields in training summary"));
    }
    Ok(TrainingSummary {
        n,
        c,
        kkt_tol,
        iterations,
        nsr,
    })
}

fn parse_sv(line: &str, dim: usize) -> Result<SupportVector> {
    let rest = line
        .strip_prefix("sv: ")
        .ok_or_else(|| malformed(&format!("expected support vector line, found '{line}'")))?;
    let mut tokens = rest.split(' ');
    let mut token = |key: &str| -> Result<&str> {
        tokens
            .next()
            .and_then(|t| t.strip_prefix(key))
            .and_then(|t| t.strip_prefix('='))
            .ok_or_else(|| malformed(&format!("support vector line is missing '{key}': '{line}'")))
    };
    let alpha = parse_real(token("alpha")?, "alpha")?;
    let label: Label = token("y")?
        .parse()
        .map_err(|_| malformed(&format!("bad label in '{line}'")))?;
    let x = token("x")?
        .split(',')
        .map(|v| parse_real(v, "support vector component"))
        .collect::<Result<Vec<f64>>>()?;
    if tokens.next().is_some() {
        return Err(malformed(&format!("trailing tokens in '{line}'")));
    }
    if x.len() != dim {
        return Err(Error::DimensionInconsistency(format!(
            "dim={dim} but support vector has {} components",
            x.len()
        )));
    }
    Ok(SupportVector { x, label, alpha })
}
