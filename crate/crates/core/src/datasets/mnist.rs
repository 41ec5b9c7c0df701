use std::path::Path;

use super::idx::{IdxFile, IMAGES_MAGIC, LABELS_MAGIC};
use super::{DataError, LabeledBatch};
use crate::tensor::Tensor;

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;
pub const MNIST_CLASSES: usize = 10;

/// Loads an image/label file pair. Pixels are scaled to `[0, 1]` by `/255`
/// and flattened row-major to 784 features.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<LabeledBatch, DataError> {
    let images = IdxFile::read(images_path)?;
    let labels = IdxFile::read(labels_path)?;
    from_idx(&images, &labels).map_err(|e| match e {
        e @ DataError::CountMismatch { .. } => e,
        DataError::LabelOutOfRange { .. } => e.at(labels_path),
        e => e.at(images_path),
    })
}

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// `(train, test)` from a directory holding the four standard files.
pub fn load_mnist_dir(dir: &Path) -> Result<(LabeledBatch, LabeledBatch), DataError> {
    let train = load_mnist(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let test = load_mnist(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    Ok((train, test))
}

pub fn from_idx(images: &IdxFile, labels: &IdxFile) -> Result<LabeledBatch, DataError> {
    if images.magic != IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            offset: 0,
            found: images.magic,
        });
    }
    if images.dims[1] as usize != MNIST_SIDE || images.dims[2] as usize != MNIST_SIDE {
        return Err(DataError::Shape(format!(
            "images are {}×{}, expected {MNIST_SIDE}×{MNIST_SIDE}",
            images.dims[1], images.dims[2]
        )));
    }
    if labels.magic != LABELS_MAGIC {
        return Err(DataError::BadMagic {
            offset: 0,
            found: labels.magic,
        });
    }
    let n = images.dims[0] as usize;
    if labels.dims[0] as usize != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: labels.dims[0] as usize,
        });
    }
    if n == 0 {
        return Err(DataError::Shape("file holds no samples".into()));
    }
    let header = 8;
    let label_vec = labels
        .payload
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if (v as usize) < MNIST_CLASSES {
                Ok(v as usize)
            } else {
                Err(DataError::LabelOutOfRange {
                    offset: header + i,
                    value: v,
                    n_classes: MNIST_CLASSES,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let features = images.payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    LabeledBatch::new(Tensor::new(vec![n, MNIST_PIXELS], features)?, label_vec, MNIST_CLASSES)
}
