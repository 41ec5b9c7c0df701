use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataError, LabeledBatch};
use crate::tensor::Tensor;

/// `N` isotropic Gaussians in the plane, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixtureSpec {
    pub means: Vec<[f64; 2]>,
    pub stddev: Vec<f64>,
    pub samples_per_class: usize,
}

impl GaussianMixtureSpec {
    pub const DEFAULT_RADIUS: f64 = 2.0;
    pub const DEFAULT_STDDEV: f64 = 0.15;

    /// Means equally spaced on a circle, starting on the positive x axis.
    pub fn circle(n_classes: usize, radius: f64, stddev: f64, samples_per_class: usize) -> Self {
        let means = (0..n_classes)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n_classes as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self {
            means,
            stddev: vec![stddev; n_classes],
            samples_per_class,
        }
    }

    pub fn default_layout(n_classes: usize) -> Self {
        Self::circle(n_classes, Self::DEFAULT_RADIUS, Self::DEFAULT_STDDEV, 1000)
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.means.len() < 2 {
            return Err(DataError::Mixture(format!("{} classes; need at least 2", self.means.len())));
        }
        if self.stddev.len() != self.means.len() {
            return Err(DataError::Mixture(format!(
                "{} means but {} standard deviations",
                self.means.len(),
                self.stddev.len()
            )));
        }
        if let Some(s) = self.stddev.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(DataError::Mixture(format!("standard deviation {s} is invalid")));
        }
        Ok(())
    }

    pub fn min_mean_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.means.iter().enumerate() {
            for b in &self.means[i + 1..] {
                best = best.min(dist(a, b));
            }
        }
        best
    }

    /// Index of the closest mean; ties go to the lowest index.
    pub fn nearest_mean(&self, point: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, m) in self.means.iter().enumerate() {
            let d = (point[0] - m[0]).powi(2) + (point[1] - m[1]).powi(2);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Draws `batch` labelled points: labels uniform over classes, features
/// from the label's Gaussian.
pub fn sample_mixture<R: Rng + ?Sized>(
    spec: &GaussianMixtureSpec,
    rng: &mut R,
    batch: usize,
) -> Result<LabeledBatch, DataError> {
    spec.validate()?;
    let n = spec.n_classes();
    let mut labels = Vec::with_capacity(batch);
    let mut features = Vec::with_capacity(batch * 2);
    for _ in 0..batch {
        let c = rng.random_range(0..n);
        let [mx, my] = spec.means[c];
        let s = spec.stddev[c];
        let (ex, ey): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        labels.push(c);
        features.push(mx + s * ex);
        features.push(my + s * ey);
    }
    LabeledBatch::new(Tensor::new(vec![batch, 2], features)?, labels, n)
}

/// Fixed training set of `samples_per_class` points per class, in class order.
pub fn mixture_dataset<R: Rng + ?Sized>(spec: &GaussianMixtureSpec, rng: &mut R) -> Result<LabeledBatch, DataError> {
    spec.validate()?;
    let mut labels = Vec::new();
    let mut features = Vec::new();
    for (c, (&[mx, my], &s)) in spec.means.iter().zip(&spec.stddev).enumerate() {
        for _ in 0..spec.samples_per_class {
            let (ex, ey): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            labels.push(c);
            features.push(mx + s * ex);
            features.push(my + s * ey);
        }
    }
    LabeledBatch::new(Tensor::new(vec![labels.len(), 2], features)?, labels, spec.n_classes())
}
