//! Conditional generator training with a classifier placed in parallel to
//! the discriminator, together with exact discrete checks of the
//! cross-entropy / Jensen–Shannon relations that motivate it.
//!
//! Layout:
//! - [`tensor`], [`nn`], [`optim`]: a small reverse-mode autodiff engine.
//! - [`divergence`]: entropy, KL, generalized JSD and the optimal classifier.
//! - [`datasets`]: Gaussian mixtures and MNIST IDX files.
//! - [`schemes`]: GAN, CGAN, ACGAN-style and VAC+GAN training steps.
//! - [`harness`]: experiment runner, evaluation and artifact writers.

pub mod nn;
pub mod optim;
pub mod tensor;
pub mod divergence;
pub mod datasets;
pub mod schemes;
pub mod harness;
