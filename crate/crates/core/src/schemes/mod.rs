//! Generator / discriminator / classifier wiring for the four training
//! schemes.
//!
//! | scheme   | generator input        | discriminator input | class signal                          |
//! |----------|------------------------|---------------------|---------------------------------------|
//! | `gan`    | one-hot ++ noise       | sample              | none                                  |
//! | `cgan`   | one-hot ++ noise       | sample ++ one-hot   | through the discriminator             |
//! | `acgan`  | one-hot ++ noise       | sample              | class head on the discriminator trunk |
//! | `vacgan` | one-hot ++ noise       | sample              | separate classifier, parallel to D    |
//!
//! In every scheme the generator minimises `ϑ·BCE(D(G(z|c)), 1)`; the two
//! classifier schemes add `ζ·CCE(C(G(z|c)), c)`, whose gradient reaches the
//! generator through the classifier.

mod checkpoint;
mod latent;
mod losses;
mod networks;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::DataError;
use crate::tensor::TensorError;

pub use checkpoint::{
    checkpoint_paths, load_mlp, read_activation, read_checkpoint, save_mlp, write_activation, write_checkpoint,
    LoadedTrio, Manifest, ParamArchive, MANIFEST_FILE, PARAMS_FILE,
};
pub use latent::{sample_latent, LatentPartition};
pub use losses::{cgan_condition, discriminator_loss, generator_loss, generator_loss_vacgan};
pub use networks::{
    stream_rng, streams, Architecture, BoundDiscriminator, Classifier, Discriminator, GeneratorSnapshot, TrioState,
};
pub use train::{classifier_step, train_step, StepLosses};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gan,
    Cgan,
    Acgan,
    Vacgan,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Gan, Scheme::Cgan, Scheme::Acgan, Scheme::Vacgan];

    pub fn has_classifier(self) -> bool {
        matches!(self, Scheme::Acgan | Scheme::Vacgan)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gan => "gan",
            Scheme::Cgan => "cgan",
            Scheme::Acgan => "acgan",
            Scheme::Vacgan => "vacgan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which samples the parallel classifier learns from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierData {
    /// Generated batch labelled with the requested classes only.
    Generated,
    /// Generated batch plus the real labelled batch of the same step.
    #[default]
    RealAndGenerated,
}

fn default_classifier_data() -> ClassifierData {
    ClassifierData::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Weight ϑ of the adversarial generator term.
    pub theta: f64,
    /// Weight ζ of the classification generator term.
    pub zeta: f64,
    pub n_classes: usize,
    pub noise_dim: usize,
    pub batch_size: usize,
    /// `None`: one full pass over a finite dataset per epoch.
    #[serde(default)]
    pub steps_per_epoch: Option<usize>,
    pub epochs: usize,
    #[serde(default = "default_classifier_data")]
    pub classifier_data: ClassifierData,
}

impl SchemeConfig {
    /// ϑ = 0.2, ζ = 0.8.
    pub fn vacgan(n_classes: usize, noise_dim: usize) -> Self {
        Self {
            scheme: Scheme::Vacgan,
            theta: 0.2,
            zeta: 0.8,
            n_classes,
            noise_dim,
            batch_size: 64,
            steps_per_epoch: None,
            epochs: 5,
            classifier_data: ClassifierData::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SchemeError::Config(msg));
        if !(self.theta >= 0.0 && self.zeta >= 0.0 && self.theta.is_finite() && self.zeta.is_finite()) {
            return bad(format!("loss weights must be finite and non-negative (ϑ={}, ζ={})", self.theta, self.zeta));
        }
        let active = if self.scheme.has_classifier() {
            self.theta + self.zeta
        } else {
            self.theta
        };
        if active <= 0.0 {
            return bad(format!("scheme {} has no active generator loss term", self.scheme));
        }
        if self.n_classes < 2 {
            return bad(format!("n_classes = {}; need at least 2", self.n_classes));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.steps_per_epoch == Some(0) {
            return bad("steps_per_epoch must be positive when given".into());
        }
        Ok(())
    }

    /// ζ as actually applied: zero for schemes without a classifier.
    pub fn effective_zeta(&self) -> f64 {
        if self.scheme.has_classifier() {
            self.zeta
        } else {
            0.0
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("scheme {0} requires classifier outputs but none were provided")]
    MissingClassifier(Scheme),
    #[error("non-finite {which} loss ({value}) at step {step}")]
    NonFinite {
        which: &'static str,
        value: f64,
        step: u64,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SchemeError>;
