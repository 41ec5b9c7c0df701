use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LatentPartition, Result, Scheme, SchemeConfig, SchemeError};
use crate::nn::{Activation, BoundDense, BoundMlp, DenseLayer, Mlp};
use crate::optim::{AdamHyper, NesterovHyper, OptimizerState};
use crate::tensor::{Tape, Tensor, Var};

/// Independent RNG streams derived from one seed, so that e.g. building a
/// classifier never shifts the generator's initial weights.
pub mod streams {
    pub const GENERATOR_INIT: u64 = 1;
    pub const DISCRIMINATOR_INIT: u64 = 2;
    pub const CLASSIFIER_INIT: u64 = 3;
    pub const DATA: u64 = 4;
    pub const LATENT: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const PROBE: u64 = 7;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn default_slope() -> f64 {
    0.2
}

/// Layer widths and output activations of the three networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub feature_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub classifier_hidden: Vec<usize>,
    pub generator_output: Activation,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
}

impl Architecture {
    /// latent → 256 → 512 → 784 sigmoid; 784 → 512 → 256 → 1; 784 → 256 → 10.
    pub fn mnist() -> Self {
        Self {
            feature_dim: 784,
            generator_hidden: vec![256, 512],
            discriminator_hidden: vec![512, 256],
            classifier_hidden: vec![256],
            generator_output: Activation::Sigmoid,
            leaky_slope: 0.2,
        }
    }

    /// Small MLPs for points in the plane; linear generator output.
    pub fn mixture2d() -> Self {
        Self {
            feature_dim: 2,
            generator_hidden: vec![64, 64],
            discriminator_hidden: vec![64, 64],
            classifier_hidden: vec![64],
            generator_output: Activation::Identity,
            leaky_slope: 0.2,
        }
    }
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(hidden.len() + 2);
    d.push(input);
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

/// Leaky-ReLU trunk with a sigmoid real/fake head and, for the ACGAN-style
/// scheme, a softmax class head sharing the trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub trunk: Mlp,
    pub adversarial: DenseLayer,
    pub class_head: Option<DenseLayer>,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: &[usize],
        slope: f64,
        class_head: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let Some(&top) = hidden.last() else {
            return Err(SchemeError::Config("discriminator needs at least one hidden layer".into()));
        };
        let mut dims = vec![in_dim];
        dims.extend_from_slice(hidden);
        let act = Activation::LeakyRelu(slope);
        let trunk = Mlp::new(&dims, act, act, rng)?;
        let adversarial = DenseLayer::glorot(top, 1, rng)?;
        let class_head = class_head.map(|n| DenseLayer::glorot(top, n, rng)).transpose()?;
        Ok(Self {
            trunk,
            adversarial,
            class_head,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.trunk.in_dim()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = self.trunk.params();
        p.extend([&self.adversarial.weights, &self.adversarial.bias]);
        if let Some(h) = &self.class_head {
            p.extend([&h.weights, &h.bias]);
        }
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.trunk.params_mut();
        p.extend([&mut self.adversarial.weights, &mut self.adversarial.bias]);
        if let Some(h) = &mut self.class_head {
            p.extend([&mut h.weights, &mut h.bias]);
        }
        p
    }

    /// Real/fake probabilities `[batch × 1]` and optional class probabilities.
    pub fn infer(&self, x: &Tensor) -> Result<(Tensor, Option<Tensor>)> {
        let h = self.trunk.infer(x)?;
        let mut adv = self.adversarial.infer(&h)?;
        Activation::Sigmoid.apply_in_place(adv.data_mut(), 1);
        let cls = match &self.class_head {
            Some(head) => {
                let mut c = head.infer(&h)?;
                let cols = c.shape()[1];
                Activation::SoftmaxRows.apply_in_place(c.data_mut(), cols);
                Some(c)
            }
            None => None,
        };
        Ok((adv, cls))
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundDiscriminator {
        BoundDiscriminator {
            trunk: self.trunk.bind(tape, trainable),
            adversarial: self.adversarial.bind(tape, trainable),
            class_head: self.class_head.as_ref().map(|h| h.bind(tape, trainable)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundDiscriminator {
    pub trunk: BoundMlp,
    pub adversarial: BoundDense,
    pub class_head: Option<BoundDense>,
}

impl BoundDiscriminator {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<(Var, Option<Var>)> {
        let h = self.trunk.forward(tape, x)?;
        let logit = self.adversarial.forward(tape, h)?;
        let adv = tape.sigmoid(logit)?;
        let cls = match &self.class_head {
            Some(head) => {
                let l = head.forward(tape, h)?;
                Some(tape.softmax_rows(l)?)
            }
            None => None,
        };
        Ok((adv, cls))
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.trunk.vars();
        v.extend([self.adversarial.weights, self.adversarial.bias]);
        if let Some(h) = &self.class_head {
            v.extend([h.weights, h.bias]);
        }
        v
    }
}

/// The parallel classifier of the VAC+GAN scheme with its optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub net: Mlp,
    pub opt: OptimizerState,
}

/// Everything one training run mutates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrioState {
    pub scheme: Scheme,
    pub partition: LatentPartition,
    pub generator: Mlp,
    pub generator_opt: OptimizerState,
    pub discriminator: Discriminator,
    pub discriminator_opt: OptimizerState,
    /// Present for `vacgan` only; `acgan` keeps its classifier inside the
    /// discriminator.
    pub classifier: Option<Classifier>,
    pub step: u64,
}

impl TrioState {
    pub fn new(
        config: &SchemeConfig,
        arch: &Architecture,
        adam: AdamHyper,
        nesterov: NesterovHyper,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let n = config.n_classes;
        let partition = LatentPartition::new(n, config.noise_dim);

        let mut g_rng = stream_rng(seed, streams::GENERATOR_INIT);
        let generator = Mlp::new(
            &widths(partition.dim(), &arch.generator_hidden, arch.feature_dim),
            Activation::Relu,
            arch.generator_output,
            &mut g_rng,
        )?;

        let d_in = match config.scheme {
            Scheme::Cgan => arch.feature_dim + n,
            _ => arch.feature_dim,
        };
        let head = (config.scheme == Scheme::Acgan).then_some(n);
        let mut d_rng = stream_rng(seed, streams::DISCRIMINATOR_INIT);
        let discriminator = Discriminator::new(d_in, &arch.discriminator_hidden, arch.leaky_slope, head, &mut d_rng)?;

        let classifier = if config.scheme == Scheme::Vacgan {
            let mut c_rng = stream_rng(seed, streams::CLASSIFIER_INIT);
            let net = Mlp::new(
                &widths(arch.feature_dim, &arch.classifier_hidden, n),
                Activation::Relu,
                Activation::SoftmaxRows,
                &mut c_rng,
            )?;
            let opt = OptimizerState::nesterov(nesterov, &net.params());
            Some(Classifier { net, opt })
        } else {
            None
        };

        Ok(Self {
            scheme: config.scheme,
            partition,
            generator_opt: OptimizerState::adam(adam, &generator.params()),
            generator,
            discriminator_opt: OptimizerState::adam(adam, &discriminator.params()),
            discriminator,
            classifier,
            step: 0,
        })
    }

    pub fn snapshot(&self) -> GeneratorSnapshot {
        GeneratorSnapshot {
            generator: self.generator.clone(),
            partition: self.partition,
        }
    }
}

/// Read-only copy of a generator for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSnapshot {
    pub generator: Mlp,
    pub partition: LatentPartition,
}

impl GeneratorSnapshot {
    pub fn generate(&self, latent: &Tensor) -> Result<Tensor> {
        Ok(self.generator.infer(latent)?)
    }

    pub fn sample<R: Rng + ?Sized>(&self, labels: &[usize], rng: &mut R) -> Result<Tensor> {
        let z = super::sample_latent(&self.partition, labels, rng)?;
        self.generate(&z)
    }
}
