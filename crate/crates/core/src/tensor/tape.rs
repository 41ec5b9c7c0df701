use super::kernels::{self, clamp_prob, ROW_MAJOR, TRANSPOSED};
use super::{Result, Tensor, TensorError, LOG_CLAMP};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Pointwise (or row-wise, for softmax) nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
    SoftmaxRows,
}

impl Activation {
    /// Slope used by the discriminator's leaky units.
    pub const LEAKY_DEFAULT: Activation = Activation::LeakyRelu(0.2);

    /// Applies the activation to a buffer whose rows have `cols` entries.
    pub fn apply_in_place(self, x: &mut [f64], cols: usize) {
        match self {
            Activation::Identity => {}
            Activation::Relu => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::LeakyRelu(a) => x.iter_mut().for_each(|v| *v = kernels::leaky_relu(*v, a)),
            Activation::Sigmoid => x.iter_mut().for_each(|v| *v = kernels::sigmoid(*v)),
            Activation::Tanh => x.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::SoftmaxRows => kernels::softmax_rows(x, cols),
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    Mean(Var),
    Act(Var, Activation),
    ConcatCols(Var, Var),
    Bce { pred: Var, target: Vec<f64> },
    Cce { probs: Var, labels: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
}

/// Records operations in execution order and back-propagates through them.
///
/// A tape is single-use: record one forward pass, call [`Tape::backward`]
/// once, read the gradients, then drop it.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    backward_done: bool,
    visited: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable input.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// First element of a value; the loss for scalar nodes.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass, shaped like the value.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let g = self.grads.get(v.0)?.as_ref()?;
        Some(Tensor {
            shape: self.nodes[v.0].value.shape.clone(),
            data: g.clone(),
        })
    }

    pub fn grad_data(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0)?.as_deref()
    }

    /// Number of nodes whose backward rule ran during the last pass.
    pub fn backward_visits(&self) -> usize {
        self.visited
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<()> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(TensorError::UnknownVar(v.0))
        }
    }

    fn rg(&self, vs: &[Var]) -> bool {
        vs.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(TensorError::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check(a)?;
        self.check(b)?;
        let (m, k) = self.value(a).dims2("matmul")?;
        let (k2, n) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: vec![m, k],
                right: vec![k2, n],
            });
        }
        let data = kernels::matmul(m, k, n, self.value(a).data(), self.value(b).data());
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(vec![m, n], data)?, rg, Op::MatMul(a, b)))
    }

    /// `x[m×n] + bias[n]` broadcast over rows.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        self.check(x)?;
        self.check(bias)?;
        let (m, n) = self.value(x).dims2("add_row_bias")?;
        if self.value(bias).len() != n {
            return Err(TensorError::ShapeMismatch {
                op: "add_row_bias",
                left: vec![m, n],
                right: self.value(bias).shape().to_vec(),
            });
        }
        let mut data = self.value(x).data().to_vec();
        kernels::add_row_bias(&mut data, self.value(bias).data());
        let rg = self.rg(&[x, bias]);
        Ok(self.push(Tensor::new(vec![m, n], data)?, rg, Op::AddRowBias(x, bias)))
    }

    fn zip(&mut self, op: &'static str, a: Var, b: Var, f: fn(f64, f64) -> f64, node: Op) -> Result<Var> {
        self.same_shape(op, a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.value(a).shape().to_vec();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, data)?, rg, node))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.check(a)?;
        let v = self.value(a);
        let t = Tensor::new(v.shape().to_vec(), v.data().iter().map(|x| x * factor).collect())?;
        let rg = self.rg(&[a]);
        Ok(self.push(t, rg, Op::Scale(a, factor)))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let s = self.value(a).data().iter().sum();
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::scalar(s), rg, Op::Sum(a)))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.check(a)?;
        let v = self.value(a);
        let s = v.data().iter().sum::<f64>() / v.len() as f64;
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::scalar(s), rg, Op::Mean(a)))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        self.check(x)?;
        let v = self.value(x);
        let cols = if kind == Activation::SoftmaxRows {
            v.dims2("softmax_rows")?.1
        } else {
            *v.shape().last().unwrap_or(&1)
        };
        let mut data = v.data().to_vec();
        kind.apply_in_place(&mut data, cols);
        let t = Tensor::new(v.shape().to_vec(), data)?;
        let rg = self.rg(&[x]);
        Ok(self.push(t, rg, Op::Act(x, kind)))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Relu)
    }

    pub fn leaky_relu(&mut self, x: Var, alpha: f64) -> Result<Var> {
        self.activation(x, Activation::LeakyRelu(alpha))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Tanh)
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::SoftmaxRows)
    }

    /// Concatenates two rank-2 tensors along the feature axis.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check(a)?;
        self.check(b)?;
        let (m, ca) = self.value(a).dims2("concat_cols")?;
        let (m2, cb) = self.value(b).dims2("concat_cols")?;
        if m != m2 {
            return Err(TensorError::ShapeMismatch {
                op: "concat_cols",
                left: vec![m, ca],
                right: vec![m2, cb],
            });
        }
        let mut data = Vec::with_capacity(m * (ca + cb));
        for i in 0..m {
            data.extend_from_slice(self.value(a).row(i));
            data.extend_from_slice(self.value(b).row(i));
        }
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(vec![m, ca + cb], data)?, rg, Op::ConcatCols(a, b)))
    }

    /// Mean binary cross-entropy of `pred` against a constant target with
    /// entries in `[0, 1]`. Predictions are clamped before the logarithm.
    pub fn bce_loss(&mut self, pred: Var, target: &[f64]) -> Result<Var> {
        self.check(pred)?;
        let p = self.value(pred);
        if p.len() != target.len() {
            return Err(TensorError::ShapeMismatch {
                op: "bce_loss",
                left: p.shape().to_vec(),
                right: vec![target.len()],
            });
        }
        if let Some((i, t)) = target.iter().enumerate().find(|(_, t)| !(0.0..=1.0).contains(*t)) {
            return Err(TensorError::Invalid {
                op: "bce_loss",
                reason: format!("target[{i}] = {t} is outside [0, 1]"),
            });
        }
        let n = p.len() as f64;
        let total: f64 = p
            .data()
            .iter()
            .zip(target)
            .map(|(&p, &t)| {
                let p = clamp_prob(p);
                -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            })
            .sum();
        let rg = self.rg(&[pred]);
        Ok(self.push(
            Tensor::scalar(total / n),
            rg,
            Op::Bce {
                pred,
                target: target.to_vec(),
            },
        ))
    }

    /// BCE against a constant target value broadcast to every element.
    pub fn bce_loss_const(&mut self, pred: Var, target: f64) -> Result<Var> {
        self.check(pred)?;
        let n = self.value(pred).len();
        self.bce_loss(pred, &vec![target; n])
    }

    /// Mean categorical cross-entropy `-log p[label]` over the rows of a
    /// `[batch × N]` probability matrix.
    pub fn cce_loss(&mut self, probs: Var, labels: &[usize]) -> Result<Var> {
        self.check(probs)?;
        let p = self.value(probs);
        let (rows, cols) = p.dims2("cce_loss")?;
        if rows != labels.len() {
            return Err(TensorError::ShapeMismatch {
                op: "cce_loss",
                left: vec![rows, cols],
                right: vec![labels.len()],
            });
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= cols) {
            return Err(TensorError::Invalid {
                op: "cce_loss",
                reason: format!("label[{i}] = {l} is outside [0, {cols})"),
            });
        }
        for i in 0..rows {
            let s: f64 = p.row(i).iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(TensorError::Invalid {
                    op: "cce_loss",
                    reason: format!("row {i} sums to {s}, not 1"),
                });
            }
        }
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| -clamp_prob(p.get2(i, l)).ln())
            .sum();
        let rg = self.rg(&[probs]);
        Ok(self.push(
            Tensor::scalar(total / rows as f64),
            rg,
            Op::Cce {
                probs,
                labels: labels.to_vec(),
            },
        ))
    }

    /// Back-propagates from a scalar `loss`. Every node that requires a
    /// gradient ends up with one, zero-filled when unreachable.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        self.check(loss)?;
        if self.backward_done {
            return Err(TensorError::BackwardTwice);
        }
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        self.backward_done = true;
        self.grads = vec![None; self.nodes.len()];
        self.visited = 0;
        if !self.nodes[loss.0].requires_grad {
            self.fill_leaf_grads();
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.visited += 1;
            self.backprop_node(i, &g);
            self.grads[i] = Some(g);
        }
        self.fill_leaf_grads();
        Ok(())
    }

    fn fill_leaf_grads(&mut self) {
        for (node, g) in self.nodes.iter().zip(self.grads.iter_mut()) {
            if node.requires_grad && g.is_none() {
                *g = Some(vec![0.0; node.value.len()]);
            }
        }
    }

    /// Zero-initialised gradient slot for `v`, or `None` when `v` takes no gradient.
    fn slot<'a>(grads: &'a mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> Option<&'a mut [f64]> {
        if !nodes[v.0].requires_grad {
            return None;
        }
        let len = nodes[v.0].value.len();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
    }

    fn backprop_node(&mut self, i: usize, g: &[f64]) {
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let out = &nodes[i].value;
        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (nodes[a.0].value.shape()[0], nodes[a.0].value.shape()[1]);
                let n = nodes[b.0].value.shape()[1];
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    // ga += g · bᵀ
                    kernels::gemm(m, n, k, 1.0, g, ROW_MAJOR(n), nodes[b.0].value.data(), TRANSPOSED(n), 1.0, ga);
                }
                if let Some(gb) = Self::slot(grads, nodes, *b) {
                    // gb += aᵀ · g
                    kernels::gemm(k, m, n, 1.0, nodes[a.0].value.data(), TRANSPOSED(k), g, ROW_MAJOR(n), 1.0, gb);
                }
            }
            Op::AddRowBias(x, bias) => {
                if let Some(gx) = Self::slot(grads, nodes, *x) {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
                if let Some(gb) = Self::slot(grads, nodes, *bias) {
                    for row in g.chunks_exact(gb.len()) {
                        gb.iter_mut().zip(row).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(gv) = Self::slot(grads, nodes, *v) {
                        gv.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::Sub(a, b) => {
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
                if let Some(gb) = Self::slot(grads, nodes, *b) {
                    gb.iter_mut().zip(g).for_each(|(d, s)| *d -= s);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    for ((d, s), y) in ga.iter_mut().zip(g).zip(bv) {
                        *d += s * y;
                    }
                }
                if let Some(gb) = Self::slot(grads, nodes, *b) {
                    for ((d, s), x) in gb.iter_mut().zip(g).zip(av) {
                        *d += s * x;
                    }
                }
            }
            Op::Scale(a, f) => {
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, s)| *d += f * s);
                }
            }
            Op::Sum(a) => {
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    ga.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Mean(a) => {
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    let s = g[0] / ga.len() as f64;
                    ga.iter_mut().for_each(|d| *d += s);
                }
            }
            Op::Act(x, kind) => {
                let xv = nodes[x.0].value.data();
                let y = out.data();
                let Some(gx) = Self::slot(grads, nodes, *x) else {
                    return;
                };
                match *kind {
                    Activation::Identity => gx.iter_mut().zip(g).for_each(|(d, s)| *d += s),
                    Activation::Relu => {
                        for ((d, s), &x) in gx.iter_mut().zip(g).zip(xv) {
                            if x > 0.0 {
                                *d += s;
                            }
                        }
                    }
                    Activation::LeakyRelu(alpha) => {
                        for ((d, s), &x) in gx.iter_mut().zip(g).zip(xv) {
                            *d += if x > 0.0 { *s } else { alpha * s };
                        }
                    }
                    Activation::Sigmoid => {
                        for ((d, s), &y) in gx.iter_mut().zip(g).zip(y) {
                            *d += s * y * (1.0 - y);
                        }
                    }
                    Activation::Tanh => {
                        for ((d, s), &y) in gx.iter_mut().zip(g).zip(y) {
                            *d += s * (1.0 - y * y);
                        }
                    }
                    Activation::SoftmaxRows => {
                        let cols = out.shape()[1];
                        for ((dr, sr), yr) in gx
                            .chunks_exact_mut(cols)
                            .zip(g.chunks_exact(cols))
                            .zip(y.chunks_exact(cols))
                        {
                            let dot: f64 = sr.iter().zip(yr).map(|(s, y)| s * y).sum();
                            for ((d, s), y) in dr.iter_mut().zip(sr).zip(yr) {
                                *d += y * (s - dot);
                            }
                        }
                    }
                }
            }
            Op::ConcatCols(a, b) => {
                let ca = nodes[a.0].value.shape()[1];
                let cb = nodes[b.0].value.shape()[1];
                if let Some(ga) = Self::slot(grads, nodes, *a) {
                    for (d, s) in ga.chunks_exact_mut(ca).zip(g.chunks_exact(ca + cb)) {
                        d.iter_mut().zip(&s[..ca]).for_each(|(d, s)| *d += s);
                    }
                }
                if let Some(gb) = Self::slot(grads, nodes, *b) {
                    for (d, s) in gb.chunks_exact_mut(cb).zip(g.chunks_exact(ca + cb)) {
                        d.iter_mut().zip(&s[ca..]).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::Bce { pred, target } => {
                let pv = nodes[pred.0].value.data();
                let Some(gp) = Self::slot(grads, nodes, *pred) else {
                    return;
                };
                let scale = g[0] / pv.len() as f64;
                for ((d, &p), &t) in gp.iter_mut().zip(pv).zip(target) {
                    if p > LOG_CLAMP && p < 1.0 - LOG_CLAMP {
                        *d += scale * ((1.0 - t) / (1.0 - p) - t / p);
                    }
                }
            }
            Op::Cce { probs, labels } => {
                let pv = &nodes[probs.0].value;
                let cols = pv.shape()[1];
                let scale = g[0] / labels.len() as f64;
                let pdata = pv.data();
                let Some(gp) = Self::slot(grads, nodes, *probs) else {
                    return;
                };
                for (i, &l) in labels.iter().enumerate() {
                    let p = pdata[i * cols + l];
                    if p > LOG_CLAMP && p < 1.0 - LOG_CLAMP {
                        gp[i * cols + l] -= scale / p;
                    }
                }
            }
        }
    }
}
