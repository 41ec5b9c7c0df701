//! Fully connected layers and multi-layer perceptrons.

use rand::Rng;

use crate::tensor::kernels;
use crate::tensor::{Result, Tape, Tensor, TensorError, Var};

pub use crate::tensor::Activation;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Result<Self> {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Ok(Self {
            weights: Tensor::new(vec![in_dim, out_dim], w)?,
            bias: Tensor::zeros(vec![out_dim])?,
        })
    }

    pub fn from_parts(weights: Tensor, bias: Tensor) -> Result<Self> {
        let (_, out) = weights.dims2("dense")?;
        if bias.shape() != [out] {
            return Err(TensorError::ShapeMismatch {
                op: "dense",
                left: weights.shape().to_vec(),
                right: bias.shape().to_vec(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    /// Affine map without a tape; bit-identical to the taped forward.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let (m, k) = x.dims2("dense")?;
        if k != self.in_dim() {
            return Err(TensorError::ShapeMismatch {
                op: "dense",
                left: x.shape().to_vec(),
                right: self.weights.shape().to_vec(),
            });
        }
        let n = self.out_dim();
        let mut out = kernels::matmul(m, k, n, x.data(), self.weights.data());
        kernels::add_row_bias(&mut out, self.bias.data());
        Tensor::new(vec![m, n], out)
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundDense {
        BoundDense {
            weights: tape.leaf(self.weights.clone(), trainable),
            bias: tape.leaf(self.bias.clone(), trainable),
        }
    }
}

/// A layer's parameters recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct BoundDense {
    pub weights: Var,
    pub bias: Var,
}

impl BoundDense {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let h = tape.matmul(x, self.weights)?;
        tape.add_row_bias(h, self.bias)
    }
}

/// Stack of dense layers: `hidden` activation between layers, `output`
/// activation after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub hidden: Activation,
    pub output: Activation,
}

impl Mlp {
    /// `dims` lists every width from input to output, e.g. `[784, 256, 10]`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(TensorError::Invalid {
                op: "mlp",
                reason: format!("layer widths {dims:?} need at least input and output, all positive"),
            });
        }
        let layers = dims
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            layers,
            hidden,
            output,
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim()];
        d.extend(self.layers.iter().map(DenseLayer::out_dim));
        d
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in declaration order: `w0, b0, w1, b1, ...`.
    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
            .collect()
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.infer(&h)?;
            let act = if i == last { self.output } else { self.hidden };
            let cols = h.shape()[1];
            act.apply_in_place(h.data_mut(), cols);
        }
        Ok(h)
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundMlp {
        BoundMlp {
            layers: self.layers.iter().map(|l| l.bind(tape, trainable)).collect(),
            hidden: self.hidden,
            output: self.output,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundMlp {
    pub layers: Vec<BoundDense>,
    pub hidden: Activation,
    pub output: Activation,
}

impl BoundMlp {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, h)?;
            let act = if i == last { self.output } else { self.hidden };
            if act != Activation::Identity {
                h = tape.activation(h, act)?;
            }
        }
        Ok(h)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|l| [l.weights, l.bias]).collect()
    }

    /// Gradients in the same order as [`Mlp::params`].
    pub fn grads(&self, tape: &Tape) -> Vec<Tensor> {
        grads_of(tape, &self.vars())
    }
}

/// Gradients of `vars` after a backward pass, zero-filled where absent.
pub fn grads_of(tape: &Tape, vars: &[Var]) -> Vec<Tensor> {
    vars.iter()
        .map(|&v| {
            tape.grad(v).unwrap_or_else(|| {
                let shape = tape.value(v).shape().to_vec();
                Tensor::zeros(shape).expect("tape values are never empty")
            })
        })
        .collect()
}
