//! Define-by-run reverse-mode differentiation.
//!
//! Every op appends a node holding its output value; inputs always precede
//! their consumers, so creation order is a topological order and the
//! backward pass is a single reverse sweep.

use std::collections::{BTreeMap, HashMap};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, scale: f64 },
    AddConst(Var),
    MulConst { x: Var, factor: Vec<f64> },
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    Softmax(Var),
    Min(Var, Var),
    Clip { x: Var, lo: f64, hi: f64 },
    Sum(Var),
    Dot(Var, Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Row { table: Var, index: usize },
    CrossEntropy { logits: Var, target: usize, probs: Vec<f64> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Affine { .. } => "affine",
            Op::AddConst(..) => "add_const",
            Op::MulConst { .. } => "mul_const",
            Op::Tanh(..) => "tanh",
            Op::Sigmoid(..) => "sigmoid",
            Op::Exp(..) => "exp",
            Op::Log(..) => "log",
            Op::Softmax(..) => "softmax",
            Op::Min(..) => "min",
            Op::Clip { .. } => "clip",
            Op::Sum(..) => "sum",
            Op::Dot(..) => "dot",
            Op::Concat(..) => "concat",
            Op::Slice { .. } => "slice",
            Op::Row { .. } => "row",
            Op::CrossEntropy { .. } => "cross_entropy",
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Gradients of a scalar loss keyed by parameter name.
pub type Gradients = BTreeMap<String, Tensor>;

/// A computation tape. Build one per sequence, then call [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(String, Var)>,
    param_index: HashMap<String, Var>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

/// Inner product with four running sums, which lets the loop vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Numerically stable softmax of a slice.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Logistic function, stable for large magnitudes.
pub fn logistic(x: f64) -> f64 {
    sigmoid(x)
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    /// Registers a named trainable leaf. Registering the same name twice
    /// returns the existing node.
    pub fn param(&mut self, name: &str, value: &Tensor) -> Var {
        if let Some(&v) = self.param_index.get(name) {
            return v;
        }
        let v = self.leaf(value.clone(), true);
        self.params.push((name.to_string(), v));
        self.param_index.insert(name.to_string(), v);
        v
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn constant_scalar(&mut self, value: f64) -> Result<Var> {
        Ok(self.constant(Tensor::scalar(value)?))
    }

    pub fn constant_vector(&mut self, data: Vec<f64>) -> Result<Var> {
        Ok(self.constant(Tensor::vector(data)?))
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, data: Vec<f64>) -> Result<Var> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: op.name().to_string(),
            });
        }
        let requires_grad = self.inputs_of(&op).iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value: Tensor::from_raw(shape, data),
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn inputs_of(&self, op: &Op) -> Vec<Var> {
        match op {
            Op::Leaf => vec![],
            Op::MatVec(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::Min(a, b)
            | Op::Dot(a, b) => vec![*a, *b],
            Op::Affine { x, .. }
            | Op::MulConst { x, .. }
            | Op::Clip { x, .. }
            | Op::Slice { x, .. } => vec![*x],
            Op::AddConst(x)
            | Op::Tanh(x)
            | Op::Sigmoid(x)
            | Op::Exp(x)
            | Op::Log(x)
            | Op::Softmax(x)
            | Op::Sum(x) => vec![*x],
            Op::Concat(xs) => xs.clone(),
            Op::Row { table, .. } => vec![*table],
            Op::CrossEntropy { logits, .. } => vec![*logits],
        }
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// `W · x` for `W` of shape `[m, n]` and `x` of length `n`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let ws = self.shape(w).to_vec();
        let xs = self.shape(x).to_vec();
        if ws.len() != 2 || ws[1] != self.value(x).numel() {
            return Err(Error::dim("matvec", format!("matrix {:?} vs vector {:?}", ws, xs)));
        }
        let (m, n) = (ws[0], ws[1]);
        let wd = self.data(w);
        let xd = self.data(x);
        let out: Vec<f64> = (0..m).map(|i| dot(&wd[i * n..(i + 1) * n], xd)).collect();
        self.push(Op::MatVec(w, x), vec![m], out)
    }

    fn broadcast_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Vec<usize>> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa == sb {
            Ok(sa.to_vec())
        } else if self.value(a).numel() == 1 {
            Ok(sb.to_vec())
        } else if self.value(b).numel() == 1 {
            Ok(sa.to_vec())
        } else {
            Err(Error::dim(op, format!("{:?} vs {:?}", sa, sb)))
        }
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<(Vec<usize>, Vec<f64>)> {
        let shape = self.broadcast_shape(op, a, b)?;
        let (ad, bd) = (self.data(a), self.data(b));
        let n: usize = shape.iter().product();
        let out = (0..n)
            .map(|i| {
                let x = if ad.len() == 1 { ad[0] } else { ad[i] };
                let y = if bd.len() == 1 { bd[0] } else { bd[i] };
                f(x, y)
            })
            .collect();
        Ok((shape, out))
    }

    /// Elementwise sum; a single-element operand broadcasts.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (shape, out) = self.binary("add", a, b, |x, y| x + y)?;
        self.push(Op::Add(a, b), shape, out)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (shape, out) = self.binary("sub", a, b, |x, y| x - y)?;
        self.push(Op::Sub(a, b), shape, out)
    }

    /// Elementwise product; a single-element operand broadcasts.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (shape, out) = self.binary("mul", a, b, |x, y| x * y)?;
        self.push(Op::Mul(a, b), shape, out)
    }

    /// `scale · x + shift` with constant coefficients.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var> {
        let out = self.data(x).iter().map(|v| scale * v + shift).collect();
        let shape = self.shape(x).to_vec();
        self.push(Op::Affine { x, scale }, shape, out)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        self.affine(x, factor, 0.0)
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.affine(x, -1.0, 0.0)
    }

    /// `1 - x`
    pub fn one_minus(&mut self, x: Var) -> Result<Var> {
        self.affine(x, -1.0, 1.0)
    }

    /// Adds a constant tensor of the same length.
    pub fn add_const(&mut self, x: Var, offset: &[f64]) -> Result<Var> {
        if offset.len() != self.value(x).numel() {
            return Err(Error::dim(
                "add_const",
                format!("{:?} vs constant of length {}", self.shape(x), offset.len()),
            ));
        }
        let out = self.data(x).iter().zip(offset).map(|(a, b)| a + b).collect();
        let shape = self.shape(x).to_vec();
        self.push(Op::AddConst(x), shape, out)
    }

    /// Multiplies by a constant tensor of the same length (dropout masks).
    pub fn mul_const(&mut self, x: Var, factor: &[f64]) -> Result<Var> {
        if factor.len() != self.value(x).numel() {
            return Err(Error::dim(
                "mul_const",
                format!("{:?} vs constant of length {}", self.shape(x), factor.len()),
            ));
        }
        let out = self.data(x).iter().zip(factor).map(|(a, b)| a * b).collect();
        let shape = self.shape(x).to_vec();
        self.push(
            Op::MulConst {
                x,
                factor: factor.to_vec(),
            },
            shape,
            out,
        )
    }

    fn unary(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let out = self.data(x).iter().map(|&v| f(v)).collect();
        let shape = self.shape(x).to_vec();
        self.push(op, shape, out)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Op::Tanh(x), f64::tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Op::Exp(x), f64::exp)
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Op::Log(x), f64::ln)
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let out = softmax(self.data(x));
        let shape = self.shape(x).to_vec();
        self.push(Op::Softmax(x), shape, out)
    }

    /// Gumbel-softmax relaxation: `softmax((logits + noise) / tau)`.
    /// Without noise this is the tempered softmax.
    pub fn gumbel_softmax(&mut self, logits: Var, noise: Option<&[f64]>, tau: f64) -> Result<Var> {
        if !(tau > 0.0) {
            return Err(Error::Contract(format!("gumbel temperature must be positive, got {tau}")));
        }
        let perturbed = match noise {
            Some(g) => self.add_const(logits, g)?,
            None => logits,
        };
        let tempered = self.scale(perturbed, 1.0 / tau)?;
        self.softmax(tempered)
    }

    /// Elementwise minimum. Gradient goes to the smaller argument, to `a` on ties.
    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim("min", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let out = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| if x <= y { x } else { y }).collect();
        let shape = self.shape(a).to_vec();
        self.push(Op::Min(a, b), shape, out)
    }

    /// Clamps into `[lo, hi]`; gradient passes on the closed interval.
    pub fn clip(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        if lo > hi {
            return Err(Error::Contract(format!("clip bounds reversed: [{lo}, {hi}]")));
        }
        self.unary(x, Op::Clip { x, lo, hi }, |v| v.max(lo).min(hi))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.data(x).iter().sum();
        self.push(Op::Sum(x), vec![1], vec![total])
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).numel() != self.value(b).numel() {
            return Err(Error::dim("dot", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let total = dot(self.data(a), self.data(b));
        self.push(Op::Dot(a, b), vec![1], vec![total])
    }

    /// Concatenates vectors (or scalars) end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::dim("concat", "no inputs"));
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.data(p));
        }
        let n = out.len();
        self.push(Op::Concat(parts.to_vec()), vec![n], out)
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.value(x).numel();
        if start + len > n || len == 0 {
            return Err(Error::dim(
                "slice",
                format!("range {}..{} of {:?}", start, start + len, self.shape(x)),
            ));
        }
        let out = self.data(x)[start..start + len].to_vec();
        self.push(Op::Slice { x, start }, vec![len], out)
    }

    /// Element `i` as a single-element tensor.
    pub fn index(&mut self, x: Var, i: usize) -> Result<Var> {
        self.slice(x, i, 1)
    }

    /// Row `index` of a 2-D table (embedding lookup).
    pub fn row(&mut self, table: Var, index: usize) -> Result<Var> {
        let shape = self.shape(table).to_vec();
        if shape.len() != 2 || index >= shape[0] {
            return Err(Error::dim("row", format!("row {} of {:?}", index, shape)));
        }
        let out = self.value(table).row(index).to_vec();
        self.push(Op::Row { table, index }, vec![shape[1]], out)
    }

    /// `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.value(logits).numel();
        if target >= n {
            return Err(Error::dim("cross_entropy", format!("target {} of {} classes", target, n)));
        }
        let d = self.data(logits);
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + d.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - d[target];
        let probs = softmax(d);
        self.push(Op::CrossEntropy { logits, target, probs }, vec![1], vec![loss])
    }

    /// Reverse sweep from a scalar `loss`. Every registered parameter gets an
    /// entry; unreached parameters get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let out = node.value.data();
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatVec(w, x) => {
                    let (m, n) = (self.shape(*w)[0], self.shape(*w)[1]);
                    let wd = self.data(*w);
                    let xd = self.data(*x);
                    self.accumulate(&mut grads, *w, |gw| {
                        for r in 0..m {
                            let gr = g[r];
                            if gr != 0.0 {
                                for c in 0..n {
                                    gw[r * n + c] += gr * xd[c];
                                }
                            }
                        }
                    });
                    self.accumulate(&mut grads, *x, |gx| {
                        for r in 0..m {
                            let gr = g[r];
                            if gr != 0.0 {
                                for c in 0..n {
                                    gx[c] += gr * wd[r * n + c];
                                }
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    self.accumulate_broadcast(&mut grads, *a, &g, |_| 1.0);
                    self.accumulate_broadcast(&mut grads, *b, &g, |_| 1.0);
                }
                Op::Sub(a, b) => {
                    self.accumulate_broadcast(&mut grads, *a, &g, |_| 1.0);
                    self.accumulate_broadcast(&mut grads, *b, &g, |_| -1.0);
                }
                Op::Mul(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    self.accumulate_broadcast(&mut grads, *a, &g, |k| if bd.len() == 1 { bd[0] } else { bd[k] });
                    self.accumulate_broadcast(&mut grads, *b, &g, |k| if ad.len() == 1 { ad[0] } else { ad[k] });
                }
                Op::Affine { x, scale } => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for (dst, gv) in gx.iter_mut().zip(&g) {
                            *dst += scale * gv;
                        }
                    });
                }
                Op::AddConst(x) => {
                    self.accumulate(&mut grads, *x, |gx| add_into(gx, &g));
                }
                Op::MulConst { x, factor } => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), f) in gx.iter_mut().zip(&g).zip(factor) {
                            *dst += gv * f;
                        }
                    });
                }
                Op::Tanh(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), y) in gx.iter_mut().zip(&g).zip(out) {
                            *dst += gv * (1.0 - y * y);
                        }
                    });
                }
                Op::Sigmoid(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), y) in gx.iter_mut().zip(&g).zip(out) {
                            *dst += gv * y * (1.0 - y);
                        }
                    });
                }
                Op::Exp(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), y) in gx.iter_mut().zip(&g).zip(out) {
                            *dst += gv * y;
                        }
                    });
                }
                Op::Log(x) => {
                    let xd = self.data(*x);
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), v) in gx.iter_mut().zip(&g).zip(xd) {
                            *dst += gv / v;
                        }
                    });
                }
                Op::Softmax(x) => {
                    let inner: f64 = g.iter().zip(out).map(|(a, b)| a * b).sum();
                    self.accumulate(&mut grads, *x, |gx| {
                        for ((dst, gv), y) in gx.iter_mut().zip(&g).zip(out) {
                            *dst += y * (gv - inner);
                        }
                    });
                }
                Op::Min(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    self.accumulate(&mut grads, *a, |ga| {
                        for k in 0..g.len() {
                            if ad[k] <= bd[k] {
                                ga[k] += g[k];
                            }
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for k in 0..g.len() {
                            if ad[k] > bd[k] {
                                gb[k] += g[k];
                            }
                        }
                    });
                }
                Op::Clip { x, lo, hi } => {
                    let xd = self.data(*x);
                    self.accumulate(&mut grads, *x, |gx| {
                        for k in 0..g.len() {
                            if xd[k] >= *lo && xd[k] <= *hi {
                                gx[k] += g[k];
                            }
                        }
                    });
                }
                Op::Sum(x) => {
                    self.accumulate(&mut grads, *x, |gx| {
                        for dst in gx.iter_mut() {
                            *dst += g[0];
                        }
                    });
                }
                Op::Dot(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    self.accumulate(&mut grads, *a, |ga| {
                        for (dst, v) in ga.iter_mut().zip(bd) {
                            *dst += g[0] * v;
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for (dst, v) in gb.iter_mut().zip(ad) {
                            *dst += g[0] * v;
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).numel();
                        self.accumulate(&mut grads, p, |gp| add_into(gp, &g[offset..offset + n]));
                        offset += n;
                    }
                }
                Op::Slice { x, start } => {
                    self.accumulate(&mut grads, *x, |gx| add_into(&mut gx[*start..*start + g.len()], &g));
                }
                Op::Row { table, index } => {
                    let cols = self.shape(*table)[1];
                    self.accumulate(&mut grads, *table, |gt| {
                        add_into(&mut gt[index * cols..(index + 1) * cols], &g)
                    });
                }
                Op::CrossEntropy { logits, target, probs } => {
                    self.accumulate(&mut grads, *logits, |gl| {
                        for (k, (dst, p)) in gl.iter_mut().zip(probs).enumerate() {
                            let y = if k == *target { 1.0 } else { 0.0 };
                            *dst += g[0] * (p - y);
                        }
                    });
                }
            }
        }

        let mut out = Gradients::new();
        for (name, v) in &self.params {
            let shape = self.shape(*v).to_vec();
            let data = grads[v.0].take().unwrap_or_else(|| vec![0.0; self.value(*v).numel()]);
            if data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    op: format!("gradient of {name}"),
                });
            }
            out.insert(name.clone(), Tensor::from_raw(shape, data));
        }
        Ok(out)
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.numel()]);
        f(slot);
    }

    fn accumulate_broadcast(&self, grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64], coeff: impl Fn(usize) -> f64) {
        let broadcast = self.value(v).numel() == 1 && g.len() != 1;
        self.accumulate(grads, v, |gv| {
            if broadcast {
                gv[0] += g.iter().enumerate().map(|(k, x)| x * coeff(k)).sum::<f64>();
            } else {
                for (k, (dst, x)) in gv.iter_mut().zip(g).enumerate() {
                    *dst += x * coeff(k);
                }
            }
        });
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
