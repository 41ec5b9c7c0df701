use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, HarnessError, Result};
use crate::datasets::GaussianMixtureSpec;
use crate::optim::{AdamHyper, NesterovHyper};
use crate::schemes::{Architecture, SchemeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Gaussians in the plane; the default layout places `n_classes`
    /// means on a circle of radius 2.
    Mixture2d {
        #[serde(default)]
        spec: Option<GaussianMixtureSpec>,
    },
    /// Directory holding the four standard IDX files.
    Mnist { dir: PathBuf },
}

impl DatasetConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mixture2d { .. } => "mixture2d",
            Self::Mnist { .. } => "mnist",
        }
    }

    pub fn mixture_spec(&self, n_classes: usize) -> Option<GaussianMixtureSpec> {
        match self {
            Self::Mixture2d { spec } => Some(spec.clone().unwrap_or_else(|| GaussianMixtureSpec::default_layout(n_classes))),
            Self::Mnist { .. } => None,
        }
    }
}

fn default_eval_every() -> u64 {
    100
}

fn default_samples_per_class() -> usize {
    1000
}

fn default_grid_cols() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_eval_every")]
    pub every_steps: u64,
    #[serde(default = "default_samples_per_class")]
    pub samples_per_class: usize,
    /// Sample grids are written at these multiples of the step count, and
    /// always after the last step.
    #[serde(default)]
    pub grid_every: Option<u64>,
    #[serde(default = "default_grid_cols")]
    pub grid_cols: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            every_steps: default_eval_every(),
            samples_per_class: default_samples_per_class(),
            grid_every: None,
            grid_cols: default_grid_cols(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub training: SchemeConfig,
    /// Defaults to the preset for the dataset.
    #[serde(default)]
    pub architecture: Option<Architecture>,
    #[serde(default)]
    pub adam: AdamHyper,
    #[serde(default)]
    pub nesterov: NesterovHyper,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Probe checkpoint used to score MNIST samples during training.
    #[serde(default)]
    pub probe: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| HarnessError::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text, path)?;
        // Relative paths inside a config file are relative to that file.
        let base = path.parent().unwrap_or(Path::new("."));
        if let DatasetConfig::Mnist { dir } = &mut cfg.dataset {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        if let Some(p) = &mut cfg.probe {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture.clone().unwrap_or_else(|| match self.dataset {
            DatasetConfig::Mixture2d { .. } => Architecture::mixture2d(),
            DatasetConfig::Mnist { .. } => Architecture::mnist(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        let n = self.training.n_classes;
        if let Some(spec) = self.dataset.mixture_spec(n) {
            spec.validate()?;
            if spec.n_classes() != n {
                return Err(HarnessError::Config(format!(
                    "mixture has {} components but training.n_classes = {n}",
                    spec.n_classes()
                )));
            }
            if self.training.steps_per_epoch.is_none() && spec.samples_per_class * n < self.training.batch_size {
                return Err(HarnessError::Config("mixture dataset is smaller than one batch".into()));
            }
        }
        if matches!(self.dataset, DatasetConfig::Mnist { .. }) && n != 10 {
            return Err(HarnessError::Config(format!("MNIST has 10 classes, not {n}")));
        }
        let arch = self.architecture();
        let feature = match self.dataset {
            DatasetConfig::Mixture2d { .. } => 2,
            DatasetConfig::Mnist { .. } => 784,
        };
        if arch.feature_dim != feature {
            return Err(HarnessError::Config(format!(
                "architecture.feature_dim = {} but {} samples have {feature} features",
                arch.feature_dim,
                self.dataset.name()
            )));
        }
        if self.eval.every_steps == 0 || self.eval.samples_per_class == 0 || self.eval.grid_cols == 0 {
            return Err(HarnessError::Config("eval counts must be positive".into()));
        }
        if self.eval.grid_every == Some(0) {
            return Err(HarnessError::Config("eval.grid_every must be positive when given".into()));
        }
        Ok(())
    }

    /// Total optimisation steps for a dataset of `dataset_len` samples.
    pub fn total_steps(&self, dataset_len: usize) -> u64 {
        let per_epoch = self
            .training
            .steps_per_epoch
            .unwrap_or(dataset_len / self.training.batch_size);
        (per_epoch * self.training.epochs) as u64
    }
}
