//! ADAM and Nesterov-momentum parameter updates.

use serde::{Deserialize, Serialize};

use crate::tensor::{Result, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    /// Generator/discriminator settings: lr 2e-4, β₁ 0.5, β₂ 0.999.
    fn default() -> Self {
        Self {
            learning_rate: 0.0002,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NesterovHyper {
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for NesterovHyper {
    /// Classifier settings: lr 0.01, momentum 0.9.
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Adam {
        hyper: AdamHyper,
        m: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        t: u64,
    },
    NesterovMomentum {
        hyper: NesterovHyper,
        velocity: Vec<Vec<f64>>,
    },
}

impl OptimizerState {
    /// Zeroed moments shaped like `params`.
    pub fn adam(hyper: AdamHyper, params: &[&Tensor]) -> Self {
        Self::Adam {
            hyper,
            m: zeros_like(params),
            v: zeros_like(params),
            t: 0,
        }
    }

    pub fn nesterov(hyper: NesterovHyper, params: &[&Tensor]) -> Self {
        Self::NesterovMomentum {
            hyper,
            velocity: zeros_like(params),
        }
    }

    /// Number of steps taken (ADAM's `t`; always 0 for Nesterov).
    pub fn steps(&self) -> u64 {
        match self {
            Self::Adam { t, .. } => *t,
            Self::NesterovMomentum { .. } => 0,
        }
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        match self {
            Self::Adam { .. } => self.adam_step(params, grads),
            Self::NesterovMomentum { .. } => self.nesterov_step(params, grads),
        }
    }

    pub fn adam_step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        let Self::Adam { hyper, m, v, t } = self else {
            return Err(wrong_kind("adam_step"));
        };
        check_shapes("adam_step", params, grads, m)?;
        *t += 1;
        let bc1 = 1.0 - hyper.beta1.powi(*t as i32);
        let bc2 = 1.0 - hyper.beta2.powi(*t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
                *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
            }
        }
        Ok(())
    }

    /// `v ← μv − lr·g`, then `θ ← θ + μv − lr·g` with the updated `v`.
    pub fn nesterov_step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        let Self::NesterovMomentum { hyper, velocity } = self else {
            return Err(wrong_kind("nesterov_step"));
        };
        check_shapes("nesterov_step", params, grads, velocity)?;
        let (lr, mu) = (hyper.learning_rate, hyper.momentum);
        for ((p, g), vel) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
            for ((p, &g), vel) in p.data_mut().iter_mut().zip(g.data()).zip(vel) {
                *vel = mu * *vel - lr * g;
                *p += mu * *vel - lr * g;
            }
        }
        Ok(())
    }

    /// Moment buffers in parameter order, for checkpoints and inspection.
    pub fn buffers(&self) -> Vec<&[f64]> {
        match self {
            Self::Adam { m, v, .. } => m.iter().chain(v.iter()).map(Vec::as_slice).collect(),
            Self::NesterovMomentum { velocity, .. } => velocity.iter().map(Vec::as_slice).collect(),
        }
    }
}

fn zeros_like(params: &[&Tensor]) -> Vec<Vec<f64>> {
    params.iter().map(|p| vec![0.0; p.len()]).collect()
}

fn wrong_kind(op: &'static str) -> TensorError {
    TensorError::Invalid {
        op,
        reason: "optimizer state is of a different kind".into(),
    }
}

fn check_shapes(op: &'static str, params: &[&mut Tensor], grads: &[Tensor], buffers: &[Vec<f64>]) -> Result<()> {
    if params.len() != grads.len() || params.len() != buffers.len() {
        return Err(TensorError::Invalid {
            op,
            reason: format!(
                "{} parameters, {} gradients, {} moment buffers",
                params.len(),
                grads.len(),
                buffers.len()
            ),
        });
    }
    for ((p, g), b) in params.iter().zip(grads).zip(buffers) {
        if p.shape() != g.shape() || p.len() != b.len() {
            return Err(TensorError::ShapeMismatch {
                op,
                left: p.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
    }
    Ok(())
}
