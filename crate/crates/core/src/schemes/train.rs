use rand::Rng;

use super::losses::{cgan_condition, discriminator_loss, generator_loss, generator_loss_vacgan};
use super::networks::Classifier;
use super::{sample_latent, ClassifierData, Result, Scheme, SchemeConfig, SchemeError, TrioState};
use crate::datasets::LabeledBatch;
use crate::nn::grads_of;
use crate::tensor::{Tape, Tensor};

/// Losses observed during one optimisation step, each measured before the
/// update it drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub d_loss: f64,
    pub g_loss: f64,
    pub c_loss: Option<f64>,
}

fn finite(which: &'static str, value: f64, step: u64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SchemeError::NonFinite { which, value, step })
    }
}

fn stack_rows(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (ra, c) = a.dims2("stack_rows")?;
    let (rb, _) = b.dims2("stack_rows")?;
    let mut data = Vec::with_capacity((ra + rb) * c);
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Ok(Tensor::new(vec![ra + rb, c], data)?)
}

/// One Nesterov step of the classifier on `features` labelled `labels`.
/// Returns the cross-entropy before the update.
pub fn classifier_step(classifier: &mut Classifier, features: &Tensor, labels: &[usize]) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = classifier.net.bind(&mut tape, true);
    let x = tape.constant(features.clone());
    let probs = bound.forward(&mut tape, x)?;
    let loss = tape.cce_loss(probs, labels)?;
    tape.backward(loss)?;
    let value = tape.scalar(loss);
    let grads = bound.grads(&tape);
    classifier.opt.step(&mut classifier.net.params_mut(), &grads)?;
    Ok(value)
}

/// One discriminator, classifier and generator update, in that order.
///
/// The requested classes of the generated batch are drawn uniformly. The
/// generator step sees the discriminator and classifier as updated
/// constants.
pub fn train_step<R: Rng + ?Sized>(
    state: &mut TrioState,
    config: &SchemeConfig,
    real: &LabeledBatch,
    rng: &mut R,
) -> Result<StepLosses> {
    let step = state.step;
    let n = state.partition.n_classes;
    let batch = real.len();
    let requested: Vec<usize> = (0..batch).map(|_| rng.random_range(0..n)).collect();
    let z = sample_latent(&state.partition, &requested, rng)?;
    let fake = state.generator.infer(&z)?;

    // Discriminator.
    let (d_loss, ac_loss) = {
        let mut tape = Tape::new();
        let bound = state.discriminator.bind(&mut tape, true);
        let mut xr = tape.constant(real.features.clone());
        let mut xf = tape.constant(fake.clone());
        if state.scheme == Scheme::Cgan {
            xr = cgan_condition(&mut tape, xr, &real.labels, n)?;
            xf = cgan_condition(&mut tape, xf, &requested, n)?;
        }
        let (dr, cr) = bound.forward(&mut tape, xr)?;
        let (df, cf) = bound.forward(&mut tape, xf)?;
        let adv = discriminator_loss(&mut tape, dr, df)?;
        let (total, ac) = match (cr, cf) {
            (Some(cr), Some(cf)) => {
                let lr = tape.cce_loss(cr, &real.labels)?;
                let lf = tape.cce_loss(cf, &requested)?;
                let cls = tape.add(lr, lf)?;
                let total = tape.add(adv, cls)?;
                (total, Some(tape.scalar(cls) / 2.0))
            }
            _ => (adv, None),
        };
        let d_value = finite("discriminator", tape.scalar(adv), step)?;
        if let Some(v) = ac {
            finite("classifier", v, step)?;
        }
        tape.backward(total)?;
        let grads = grads_of(&tape, &bound.vars());
        state
            .discriminator_opt
            .step(&mut state.discriminator.params_mut(), &grads)?;
        (d_value, ac)
    };

    // Parallel classifier.
    let c_loss = match state.classifier.as_mut() {
        Some(classifier) => {
            let value = match config.classifier_data {
                ClassifierData::Generated => classifier_step(classifier, &fake, &requested)?,
                ClassifierData::RealAndGenerated => {
                    let x = stack_rows(&real.features, &fake)?;
                    let mut labels = real.labels.clone();
                    labels.extend_from_slice(&requested);
                    classifier_step(classifier, &x, &labels)?
                }
            };
            Some(finite("classifier", value, step)?)
        }
        None => ac_loss,
    };

    // Generator.
    let g_loss = {
        let mut tape = Tape::new();
        let g = state.generator.bind(&mut tape, true);
        let d = state.discriminator.bind(&mut tape, false);
        let zv = tape.constant(z);
        let xg = g.forward(&mut tape, zv)?;
        let d_in = if state.scheme == Scheme::Cgan {
            cgan_condition(&mut tape, xg, &requested, n)?
        } else {
            xg
        };
        let (df, cls) = d.forward(&mut tape, d_in)?;
        let loss = match (state.scheme, state.classifier.as_ref()) {
            (Scheme::Vacgan, Some(classifier)) => {
                let c = classifier.net.bind(&mut tape, false);
                let probs = c.forward(&mut tape, xg)?;
                generator_loss_vacgan(&mut tape, df, probs, &requested, config.theta, config.zeta)?
            }
            (Scheme::Vacgan, None) => return Err(SchemeError::MissingClassifier(Scheme::Vacgan)),
            (Scheme::Acgan, _) => {
                let probs = cls.ok_or(SchemeError::MissingClassifier(Scheme::Acgan))?;
                generator_loss_vacgan(&mut tape, df, probs, &requested, config.theta, config.zeta)?
            }
            _ => generator_loss(&mut tape, df, config.theta)?,
        };
        let value = finite("generator", tape.scalar(loss), step)?;
        tape.backward(loss)?;
        let grads = g.grads(&tape);
        state.generator_opt.step(&mut state.generator.params_mut(), &grads)?;
        value
    };

    state.step += 1;
    Ok(StepLosses { d_loss, g_loss, c_loss })
}
