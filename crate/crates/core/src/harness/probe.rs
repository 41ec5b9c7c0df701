//! Independent MNIST classifier that scores generated digits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::datasets::{minibatches, LabeledBatch};
use crate::nn::{Activation, Mlp};
use crate::optim::{NesterovHyper, OptimizerState};
use crate::schemes::{classifier_step, load_mlp, save_mlp, stream_rng, streams, Classifier, Manifest};
use crate::tensor::Tensor;

/// Test accuracy below which a probe's verdicts are not trusted.
pub const PROBE_MIN_ACCURACY: f64 = 0.95;

const PREFIX: &str = "probe";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: NesterovHyper,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256],
            epochs: 3,
            batch_size: 64,
            optimizer: NesterovHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub net: Mlp,
    pub test_accuracy: f64,
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(probs: &Tensor) -> Vec<usize> {
    let cols = probs.shape()[1];
    probs
        .data()
        .chunks(cols)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

impl Probe {
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.net.infer(x)?))
    }

    pub fn accuracy(&self, data: &LabeledBatch) -> Result<f64> {
        let pred = self.predict(&data.features)?;
        Ok(super::class_match_rate(&pred, &data.labels))
    }

    /// Fails unless the probe met [`PROBE_MIN_ACCURACY`] on held-out data.
    pub fn ensure_trusted(&self) -> Result<()> {
        if self.test_accuracy >= PROBE_MIN_ACCURACY {
            Ok(())
        } else {
            Err(HarnessError::ProbeTooWeak {
                accuracy: self.test_accuracy,
                required: PROBE_MIN_ACCURACY,
            })
        }
    }

    /// Probe labels of `samples`, refusing an untrusted probe.
    pub fn assign(&self, samples: &Tensor) -> Result<Vec<usize>> {
        self.ensure_trusted()?;
        self.predict(samples)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut m = Manifest::default();
        m.set("probe.test_accuracy", self.test_accuracy);
        Ok(save_mlp(dir, PREFIX, &self.net, m)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (m, net) = load_mlp(path, PREFIX)?;
        Ok(Self {
            net,
            test_accuracy: m.parse_key("probe.test_accuracy")?,
        })
    }
}

/// Trains a softmax MLP on `train` and records its accuracy on `test`.
pub fn train_probe(train: &LabeledBatch, test: &LabeledBatch, config: &ProbeConfig, seed: u64) -> Result<Probe> {
    let mut init = stream_rng(seed, streams::PROBE);
    let mut dims = vec![train.feature_dim()];
    dims.extend_from_slice(&config.hidden);
    dims.push(train.n_classes);
    let net = Mlp::new(&dims, Activation::Relu, Activation::SoftmaxRows, &mut init)?;
    let opt = OptimizerState::nesterov(config.optimizer, &net.params());
    let mut clf = Classifier { net, opt };
    let mut order_rng = stream_rng(seed, streams::DATA);
    for _ in 0..config.epochs {
        for batch in minibatches(train, config.batch_size, &mut order_rng)? {
            classifier_step(&mut clf, &batch.features, &batch.labels)?;
        }
    }
    let mut probe = Probe {
        net: clf.net,
        test_accuracy: 0.0,
    };
    probe.test_accuracy = probe.accuracy(test)?;
    Ok(probe)
}
