//! Experiment runner: configuration, evaluation metrics, the MNIST probe
//! and artifact writers (CSV, PGM, checkpoints).

pub mod config;
pub mod eval;
pub mod metrics;
pub mod pgm;
pub mod probe;
pub mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::datasets::DataError;
use crate::divergence::DivergenceError;
use crate::schemes::SchemeError;
use crate::tensor::TensorError;

pub use config::{DatasetConfig, EvalConfig, ExperimentConfig};
pub use eval::{
    balanced_labels, class_match_rate, histogram_family, jsd_of_assignments, jsd_of_points, spearman, ConditionalSampler,
    ConfusionMatrix, HistogramBox,
};
pub use metrics::{MetricsRecord, MetricsWriter, METRICS_HEADER};
pub use probe::{train_probe, Probe, ProbeConfig, PROBE_MIN_ACCURACY};
pub use run::{run_experiment, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("probe test accuracy {accuracy:.4} is below the required {required}")]
    ProbeTooWeak { accuracy: f64, required: f64 },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}
