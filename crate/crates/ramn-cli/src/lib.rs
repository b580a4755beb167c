//! Experiment harness for robust associative-Markov-network training.
//!
//! The library side of the `ramn-cli` binary: a flat key=value experiment
//! configuration ([`config`]), a structure-blind linear baseline ([`svm`]),
//! the dataset → split → train → attack → evaluate sweep ([`experiment`]),
//! deterministic SVG rendering of the resulting curves ([`plots`]), and the
//! empirical certification checks behind `certify-bounds` ([`certify`]).

use std::path::PathBuf;

use thiserror::Error;

pub mod certify;
pub mod config;
pub mod experiment;
pub mod plots;
pub mod svm;

pub use config::{AttackKind, DatasetSource, ExperimentConfig, Trainer};
pub use experiment::{run_experiment, AggregateRow, ExperimentReport, ExperimentRow};
pub use plots::emit_plots;
pub use svm::{train_svm, tune_svm, SvmModel};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] ramn::graph::GraphError),
    #[error(transparent)]
    Amn(#[from] ramn::amn::AmnError),
    #[error(transparent)]
    Attack(#[from] ramn::AttackError),
    #[error(transparent)]
    Robust(#[from] ramn::RobustError),
    #[error(transparent)]
    Synth(#[from] ramn::SynthError),
    #[error(transparent)]
    Solver(#[from] ramn::solver::SolverError),
}

impl CliError {
    /// Wraps an IO failure together with the path it happened on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
