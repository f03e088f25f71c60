//! Experiment harness: model assembly, training loops and report files for
//! the image, audio and graph experiments.

pub mod config;
pub mod experiments;
pub mod model;
pub mod report;
pub mod train;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, ExperimentReport};
pub use model::{build_model, Arch, Model, ModelSpec};
pub use report::emit_report;
pub use train::{EpochMetrics, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] cvnn_core::Error),
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }

    pub(crate) fn data(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {e}"))
    }
}
