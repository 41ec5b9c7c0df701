use super::Result;
use crate::tensor::{one_hot, Tape, Var};

/// `BCE(D(x), 1) + BCE(D(G(z|c)), 0)`.
pub fn discriminator_loss(tape: &mut Tape, d_real: Var, d_fake: Var) -> Result<Var> {
    let r = tape.bce_loss_const(d_real, 1.0)?;
    let f = tape.bce_loss_const(d_fake, 0.0)?;
    Ok(tape.add(r, f)?)
}

/// `ϑ·BCE(D(G(z|c)), 1)`, the generator loss of the schemes without a
/// classification term.
pub fn generator_loss(tape: &mut Tape, d_fake: Var, theta: f64) -> Result<Var> {
    let adv = tape.bce_loss_const(d_fake, 1.0)?;
    Ok(tape.scale(adv, theta)?)
}

/// `ϑ·BCE(D(G(z|c)), 1) + ζ·CCE(C(G(z|c)), c)`.
///
/// The classification term stays on the tape even when `ζ = 0`; its
/// gradient is then scaled to exact zeros.
pub fn generator_loss_vacgan(
    tape: &mut Tape,
    d_fake: Var,
    c_fake: Var,
    requested: &[usize],
    theta: f64,
    zeta: f64,
) -> Result<Var> {
    let adv = generator_loss(tape, d_fake, theta)?;
    let cls = tape.cce_loss(c_fake, requested)?;
    let cls = tape.scale(cls, zeta)?;
    Ok(tape.add(adv, cls)?)
}

/// Appends the one-hot code of `labels` to the rows of `x`.
pub fn cgan_condition(tape: &mut Tape, x: Var, labels: &[usize], n_classes: usize) -> Result<Var> {
    let code = tape.constant(one_hot(labels, n_classes)?);
    Ok(tape.concat_cols(x, code)?)
}
