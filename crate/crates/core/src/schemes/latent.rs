use rand::Rng;
use rand_distr::StandardNormal;

use super::{Result, SchemeError};
use crate::tensor::{Tensor, TensorError};

/// Latent space split into one disjoint region per class: a class's
/// vectors carry its one-hot code in the first `n_classes` coordinates,
/// followed by `noise_dim` standard-normal coordinates. The regions cover
/// the product space `{e_1..e_N} × R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatentPartition {
    pub n_classes: usize,
    pub noise_dim: usize,
}

impl LatentPartition {
    pub fn new(n_classes: usize, noise_dim: usize) -> Self {
        Self { n_classes, noise_dim }
    }

    pub fn dim(&self) -> usize {
        self.n_classes + self.noise_dim
    }

    /// The class whose region contains `z`, if `z` carries a valid code.
    pub fn region_of(&self, z: &[f64]) -> Option<usize> {
        let code = &z[..self.n_classes];
        let hot = code.iter().position(|&v| v == 1.0)?;
        code.iter()
            .enumerate()
            .all(|(i, &v)| if i == hot { v == 1.0 } else { v == 0.0 })
            .then_some(hot)
    }
}

/// One latent row per label, drawn from that label's region.
pub fn sample_latent<R: Rng + ?Sized>(partition: &LatentPartition, labels: &[usize], rng: &mut R) -> Result<Tensor> {
    let (n, d) = (partition.n_classes, partition.noise_dim);
    let mut data = Vec::with_capacity(labels.len() * partition.dim());
    for (i, &l) in labels.iter().enumerate() {
        if l >= n {
            return Err(SchemeError::Tensor(TensorError::Invalid {
                op: "sample_latent",
                reason: format!("label {l} at row {i} is outside [0, {n})"),
            }));
        }
        data.extend((0..n).map(|c| if c == l { 1.0 } else { 0.0 }));
        data.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
    }
    Ok(Tensor::new(vec![labels.len(), partition.dim()], data)?)
}
