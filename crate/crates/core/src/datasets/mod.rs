//! Data sources: class-labelled Gaussian mixtures in the plane and the
//! MNIST IDX files.

pub mod batches;
pub mod idx;
pub mod mixture;
pub mod mnist;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tensor::{Tensor, TensorError};

pub use batches::{minibatches, Minibatches};
pub use idx::IdxFile;
pub use mixture::{mixture_dataset, sample_mixture, GaussianMixtureSpec};
pub use mnist::{load_mnist, load_mnist_dir, MNIST_CLASSES, MNIST_PIXELS, MNIST_SIDE};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("bad IDX magic 0x{found:08x} at byte offset {offset}")]
    BadMagic { offset: usize, found: u32 },
    #[error("truncated IDX data at byte offset {offset}: needed {needed} bytes, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{extra} unexpected trailing bytes at byte offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("label {value} at byte offset {offset} is outside [0, {n_classes})")]
    LabelOutOfRange {
        offset: usize,
        value: u8,
        n_classes: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("unexpected shape: {0}")]
    Shape(String),
    #[error("invalid mixture: {0}")]
    Mixture(String),
    #[error("batch size {batch_size} is invalid for a dataset of {len} samples")]
    BatchSize { batch_size: usize, len: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DataError>,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl DataError {
    /// Attaches the file a parse error came from.
    pub fn at(self, path: &Path) -> Self {
        match self {
            e @ (DataError::Io { .. } | DataError::InFile { .. }) => e,
            e => DataError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }
}

/// Features with one integer class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledBatch {
    pub fn new(features: Tensor, labels: Vec<usize>, n_classes: usize) -> Result<Self, DataError> {
        let (rows, _) = features.dims2("labeled_batch")?;
        if rows != labels.len() {
            return Err(DataError::CountMismatch {
                images: rows,
                labels: labels.len(),
            });
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(DataError::Shape(format!("label {l} at row {i} is outside [0, {n_classes})")));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self, DataError> {
        Ok(Self {
            features: self.features.select_rows(rows)?,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_classes: self.n_classes,
        })
    }
}
