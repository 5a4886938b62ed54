use std::path::PathBuf;

use thiserror::Error;

/// Diagnostics reported when the solver stops before meeting its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub passes: usize,
    /// Largest pairwise KKT violation at the last iterate.
    pub kkt_gap: f64,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid kernel spec '{0}'")]
    InvalidKernelSpec(String),

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error(
        "solver did not converge after {} passes ({} updates, kkt gap {:.3e}, objective {:.6})",
        .0.passes, .0.iterations, .0.kkt_gap, .0.objective
    )]
    NonConvergence(Box<SolverDiagnostics>),

    #[error("no feasible bias: KKT interval [{lower}, {upper}] is empty")]
    EmptyBiasInterval { lower: f64, upper: f64 },

    #[error("zero denominator at index {index}")]
    ZeroDenominator { index: usize },

    #[error("constant series cannot be standardized")]
    ConstantSeries,

    #[error("missing series '{0}'")]
    MissingSeries(String),

    #[error("malformed model document: {0}")]
    MalformedModel(String),

    #[error("unsupported model version '{0}'")]
    VersionMismatch(String),

    #[error("dimension inconsistency: {0}")]
    DimensionInconsistency(String),

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("non-consecutive months at row {row}: {previous} followed by {current}")]
    NonConsecutiveMonths {
        row: usize,
        previous: String,
        current: String,
    },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error("missing seed: pass --seed or add a seed line to the config")]
    MissingSeed,

    #[error("all {} sweep candidates failed: {}", .0.len(), .0.join("; "))]
    AllCandidatesFailed(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical routines rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_) | Error::EmptyBiasInterval { .. } | Error::AllCandidatesFailed(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
