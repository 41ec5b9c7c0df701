//! Random instances of every differentiable tape operation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vacgan::nn::{Activation, Mlp};
use vacgan::schemes::generator_loss_vacgan;
use vacgan::tensor::{Tape, Tensor, Var};

use super::{away_from_zero, gradcheck, uniform, weighted_sum};

pub struct OpCase {
    pub name: &'static str,
    pub check: fn(&mut ChaCha8Rng) -> f64,
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    (rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..5))
}

fn unary(rng: &mut ChaCha8Rng, x: Tensor, op: fn(&mut Tape, Var) -> Var) -> f64 {
    let w = uniform(rng, x.shape(), -1.0, 1.0);
    gradcheck(&[x], &move |t, v| {
        let y = op(t, v[0]);
        weighted_sum(t, y, &w)
    })
}

fn binary(rng: &mut ChaCha8Rng, op: fn(&mut Tape, Var, Var) -> Var) -> f64 {
    let (m, n, _) = dims(rng);
    let a = uniform(rng, &[m, n], -2.0, 2.0);
    let b = uniform(rng, &[m, n], -2.0, 2.0);
    let w = uniform(rng, &[m, n], -1.0, 1.0);
    gradcheck(&[a, b], &move |t, v| {
        let y = op(t, v[0], v[1]);
        weighted_sum(t, y, &w)
    })
}

fn matmul(rng: &mut ChaCha8Rng) -> f64 {
    let (m, k, n) = dims(rng);
    let a = uniform(rng, &[m, k], -2.0, 2.0);
    let b = uniform(rng, &[k, n], -2.0, 2.0);
    let w = uniform(rng, &[m, n], -1.0, 1.0);
    gradcheck(&[a, b], &move |t, v| {
        let y = t.matmul(v[0], v[1]).unwrap();
        weighted_sum(t, y, &w)
    })
}

fn add_row_bias(rng: &mut ChaCha8Rng) -> f64 {
    let (m, n, _) = dims(rng);
    let x = uniform(rng, &[m, n], -2.0, 2.0);
    let b = uniform(rng, &[n], -2.0, 2.0);
    let w = uniform(rng, &[m, n], -1.0, 1.0);
    gradcheck(&[x, b], &move |t, v| {
        let y = t.add_row_bias(v[0], v[1]).unwrap();
        weighted_sum(t, y, &w)
    })
}

fn concat_cols(rng: &mut ChaCha8Rng) -> f64 {
    let (m, a, b) = dims(rng);
    let x = uniform(rng, &[m, a], -2.0, 2.0);
    let y = uniform(rng, &[m, b], -2.0, 2.0);
    let w = uniform(rng, &[m, a + b], -1.0, 1.0);
    gradcheck(&[x, y], &move |t, v| {
        let c = t.concat_cols(v[0], v[1]).unwrap();
        weighted_sum(t, c, &w)
    })
}

fn scale(rng: &mut ChaCha8Rng) -> f64 {
    let (m, n, _) = dims(rng);
    let x = uniform(rng, &[m, n], -2.0, 2.0);
    let w = uniform(rng, &[m, n], -1.0, 1.0);
    let f = rng.random_range(-3.0..3.0);
    gradcheck(&[x], &move |t, v| {
        let y = t.scale(v[0], f).unwrap();
        weighted_sum(t, y, &w)
    })
}

fn reduce(rng: &mut ChaCha8Rng, mean: bool) -> f64 {
    let (m, n, _) = dims(rng);
    let x = uniform(rng, &[m, n], -2.0, 2.0);
    gradcheck(&[x], &move |t, v| {
        // Square first so the gradient is not constant.
        let sq = t.mul(v[0], v[0]).unwrap();
        if mean {
            t.mean(sq).unwrap()
        } else {
            t.sum(sq).unwrap()
        }
    })
}

fn activation(rng: &mut ChaCha8Rng, kind: Activation) -> f64 {
    let (m, n, _) = dims(rng);
    let x = match kind {
        Activation::Relu | Activation::LeakyRelu(_) => away_from_zero(rng, &[m, n], 0.05, 2.0),
        _ => uniform(rng, &[m, n], -3.0, 3.0),
    };
    let w = uniform(rng, &[m, n], -1.0, 1.0);
    gradcheck(&[x], &move |t, v| {
        let y = t.activation(v[0], kind).unwrap();
        weighted_sum(t, y, &w)
    })
}

fn softmax(rng: &mut ChaCha8Rng) -> f64 {
    let (m, _, _) = dims(rng);
    let n = rng.random_range(2..6);
    let x = uniform(rng, &[m, n], -3.0, 3.0);
    unary(rng, x, |t, v| t.softmax_rows(v).unwrap())
}

fn bce(rng: &mut ChaCha8Rng) -> f64 {
    let (m, n, _) = dims(rng);
    let p = uniform(rng, &[m, n], 0.05, 0.95);
    let target: Vec<f64> = (0..m * n).map(|_| rng.random_range(0.0..=1.0)).collect();
    gradcheck(&[p], &move |t, v| t.bce_loss(v[0], &target).unwrap())
}

/// Cross-entropy takes probability rows, so it is checked behind a softmax
/// that keeps the perturbed inputs normalised.
fn cce(rng: &mut ChaCha8Rng) -> f64 {
    let (m, _, _) = dims(rng);
    let n = rng.random_range(2..6);
    let logits = uniform(rng, &[m, n], -3.0, 3.0);
    let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
    gradcheck(&[logits], &move |t, v| {
        let p = t.softmax_rows(v[0]).unwrap();
        t.cce_loss(p, &labels).unwrap()
    })
}

pub const OP_CASES: &[OpCase] = &[
    OpCase { name: "matmul", check: matmul },
    OpCase { name: "add_row_bias", check: add_row_bias },
    OpCase { name: "add", check: |r| binary(r, |t, a, b| t.add(a, b).unwrap()) },
    OpCase { name: "sub", check: |r| binary(r, |t, a, b| t.sub(a, b).unwrap()) },
    OpCase { name: "mul", check: |r| binary(r, |t, a, b| t.mul(a, b).unwrap()) },
    OpCase { name: "scale", check: scale },
    OpCase { name: "sum", check: |r| reduce(r, false) },
    OpCase { name: "mean", check: |r| reduce(r, true) },
    OpCase { name: "relu", check: |r| activation(r, Activation::Relu) },
    OpCase { name: "leaky_relu", check: |r| activation(r, Activation::LeakyRelu(0.2)) },
    OpCase { name: "sigmoid", check: |r| activation(r, Activation::Sigmoid) },
    OpCase { name: "tanh", check: |r| activation(r, Activation::Tanh) },
    OpCase { name: "softmax_rows", check: softmax },
    OpCase { name: "concat_cols", check: concat_cols },
    OpCase { name: "bce_loss", check: bce },
    OpCase { name: "cce_loss", check: cce },
];

/// Gradient of `ϑ·BCE(D(G(z)), 1) + ζ·CCE(C(G(z)), c)` with respect to the
/// generator weights of a 2-class toy, through a fixed discriminator and
/// classifier.
pub fn generator_through_classifier(rng: &mut ChaCha8Rng) -> f64 {
    let (latent, hidden, feat, batch) = (2 + 2, 5, 3, 6);
    let w0 = uniform(rng, &[latent, hidden], -1.0, 1.0);
    let b0 = uniform(rng, &[hidden], 0.1, 0.5);
    let w1 = uniform(rng, &[hidden, feat], -1.0, 1.0);
    let b1 = uniform(rng, &[feat], -0.5, 0.5);
    let mut z = uniform(rng, &[batch, latent], -1.0, 1.0);
    let labels: Vec<usize> = (0..batch).map(|i| i % 2).collect();
    for (i, &l) in labels.iter().enumerate() {
        z.data_mut()[i * latent] = if l == 0 { 1.0 } else { 0.0 };
        z.data_mut()[i * latent + 1] = if l == 1 { 1.0 } else { 0.0 };
    }
    let classifier = Mlp::new(&[feat, 4, 2], Activation::Tanh, Activation::SoftmaxRows, rng).unwrap();
    let disc = Mlp::new(&[feat, 4, 1], Activation::LeakyRelu(0.2), Activation::Sigmoid, rng).unwrap();
    gradcheck(&[w0, b0, w1, b1], &move |t, v| {
        let zv = t.constant(z.clone());
        let h = t.matmul(zv, v[0]).unwrap();
        let h = t.add_row_bias(h, v[1]).unwrap();
        let h = t.tanh(h).unwrap();
        let x = t.matmul(h, v[2]).unwrap();
        let x = t.add_row_bias(x, v[3]).unwrap();
        let d = disc.bind(t, false).forward(t, x).unwrap();
        let c = classifier.bind(t, false).forward(t, x).unwrap();
        generator_loss_vacgan(t, d, c, &labels, 0.2, 0.8).unwrap()
    })
}
