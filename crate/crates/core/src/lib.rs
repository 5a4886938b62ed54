//! Kernel support vector machines trained by sequential minimal optimization,
//! and a currency-crisis early-warning pipeline built on them.
//!
//! The pipeline turns a monthly indicator panel into a speculative-pressure
//! index, labels crisis months, builds a seven-variable feature panel, and
//! selects a kernel by noise-to-signal ratio. Labels use `+1` for calm months
//! and `-1` for crisis months; calm is the positive class.

pub mod cli;
pub mod data_io;
pub mod dataset;
pub mod error;
pub mod indicators;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod panel;
pub mod pipeline;
pub mod selection;
pub mod smo;

pub use dataset::{Label, SupervisedSet};
pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use model::TrainedModel;
pub use smo::{train, DualSolution, SolverConfig};
