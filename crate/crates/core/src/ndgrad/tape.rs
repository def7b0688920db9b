use crate::scalar::Scalar;

use super::tensor::{matmul_nt_acc, matmul_tn_acc};
use super::{GradError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise operations available through [`Tape::elementwise`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementwise {
    Add,
    Sub,
    Mul,
    Sigmoid,
    Tanh,
}

#[derive(Clone, Copy)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Scale(Var, T),
    Sum(Var),
    Mse(Var, Var),
    /// Row `i` of a rank-2 tensor.
    Row(Var, usize),
    /// Elementwise map with a caller-supplied derivative `df(x)`.
    Map(Var, fn(T) -> T),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Define-by-run record of executed operations.
///
/// Nodes are appended in execution order, so the node list is already a
/// topological order and the backward pass walks it in reverse. A tape
/// supports exactly one backward pass; build a fresh tape per forward.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    backward_done: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        debug_assert!(
            !self.backward_done,
            "tape extended after its backward pass"
        );
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Leaf that participates in differentiation.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    pub fn elementwise(&mut self, op: Elementwise, inputs: &[Var]) -> Result<Var, GradError> {
        let arity = match op {
            Elementwise::Add | Elementwise::Sub | Elementwise::Mul => 2,
            Elementwise::Sigmoid | Elementwise::Tanh => 1,
        };
        if inputs.len() != arity {
            return Err(GradError::Usage(format!(
                "{op:?} takes {arity} input(s), got {}",
                inputs.len()
            )));
        }
        match op {
            Elementwise::Add => self.add(inputs[0], inputs[1]),
            Elementwise::Sub => self.sub(inputs[0], inputs[1]),
            Elementwise::Mul => self.mul(inputs[0], inputs[1]),
            Elementwise::Sigmoid => Ok(self.sigmoid(inputs[0])),
            Elementwise::Tanh => Ok(self.tanh(inputs[0])),
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let out = self.value(a).zip_with(self.value(b), "add", |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let out = self.value(a).zip_with(self.value(b), "sub", |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let out = self.value(a).zip_with(self.value(b), "mul", |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    /// `x[p,q] + bias[1,q]` added to every row. The only broadcast the tape knows.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var, GradError> {
        let (p, q) = self.value(x).dims2()?;
        let bshape = self.value(bias).shape();
        if bshape != [1, q] {
            return Err(GradError::Shape {
                op: "add_row_bias",
                left: vec![p, q],
                right: bshape.to_vec(),
            });
        }
        let b = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(q) {
            for (o, &bv) in row.iter_mut().zip(b) {
                *o = *o + bv;
            }
        }
        let out = Tensor::from_vec(vec![p, q], out)?;
        let rg = self.rg(&[x, bias]);
        Ok(self.push(out, Op::AddRowBias(x, bias), rg))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).map(sigmoid);
        let rg = self.rg(&[x]);
        self.push(out, Op::Sigmoid(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).map(T::tanh);
        let rg = self.rg(&[x]);
        self.push(out, Op::Tanh(x), rg)
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let out = self.value(x).map(|v| v * factor);
        let rg = self.rg(&[x]);
        self.push(out, Op::Scale(x, factor), rg)
    }

    /// Elementwise `f(x)` whose backward rule multiplies by `df(x)`.
    pub fn map(&mut self, x: Var, f: fn(T) -> T, df: fn(T) -> T) -> Var {
        let out = self.value(x).map(f);
        let rg = self.rg(&[x]);
        self.push(out, Op::Map(x, df), rg)
    }

    /// Row `i` of a `[p, q]` tensor, as a `[1, q]` tensor.
    pub fn row(&mut self, x: Var, i: usize) -> Result<Var, GradError> {
        let v = self.value(x);
        let (p, q) = v.dims2()?;
        if i >= p {
            return Err(GradError::Usage(format!("row {i} of a {p}-row tensor")));
        }
        let out = Tensor::from_vec(vec![1, q], v.data()[i * q..(i + 1) * q].to_vec())?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::Row(x, i), rg))
    }

    /// Sum of all elements, as a one-element tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self
            .value(x)
            .data()
            .iter()
            .fold(T::zero(), |acc, &v| acc + v);
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Mean squared error between equally sized tensors.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var, GradError> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.len() != t.len() {
            return Err(GradError::Shape {
                op: "mse_loss",
                left: p.shape().to_vec(),
                right: t.shape().to_vec(),
            });
        }
        if p.is_empty() {
            return Err(GradError::Domain("mse_loss of empty input".into()));
        }
        let sq = p
            .data()
            .iter()
            .zip(t.data())
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        let loss = sq / T::count(p.len());
        let rg = self.rg(&[pred, target]);
        Ok(self.push(Tensor::scalar(loss), Op::Mse(pred, target), rg))
    }

    /// Reverse pass from a scalar `loss`.
    ///
    /// Returns the gradient of every `requires_grad` leaf on the tape. Leaves
    /// the loss does not depend on receive zeros. A second call on the same
    /// tape is an error.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>, GradError> {
        if self.backward_done {
            return Err(GradError::Usage(
                "backward already ran on this tape; record a new forward pass".into(),
            ));
        }
        if self.value(loss).len() != 1 {
            return Err(GradError::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        if !self.nodes[loss.0].requires_grad {
            return Err(GradError::Usage(
                "loss is detached: it depends on no requires_grad leaf".into(),
            ));
        }
        self.backward_done = true;

        let mut grads: Vec<Option<Vec<T>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let (p, q) = av.dims2()?;
                    let (_, r) = bv.dims2()?;
                    if self.nodes[a.0].requires_grad {
                        let da = slot(&mut grads, a, p * q);
                        matmul_nt_acc(&g, bv.data(), da, p, q, r);
                    }
                    if self.nodes[b.0].requires_grad {
                        let db = slot(&mut grads, b, q * r);
                        matmul_tn_acc(av.data(), &g, db, p, q, r);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, a, &g, |gi, _| gi);
                    self.accumulate(&mut grads, b, &g, |gi, _| gi);
                }
                Op::Sub(a, b) => {
                    self.accumulate(&mut grads, a, &g, |gi, _| gi);
                    self.accumulate(&mut grads, b, &g, |gi, _| -gi);
                }
                Op::Mul(a, b) => {
                    let bv = self.nodes[b.0].value.data();
                    self.accumulate(&mut grads, a, &g, |gi, i| gi * bv[i]);
                    let av = self.nodes[a.0].value.data();
                    self.accumulate(&mut grads, b, &g, |gi, i| gi * av[i]);
                }
                Op::AddRowBias(x, bias) => {
                    self.accumulate(&mut grads, x, &g, |gi, _| gi);
                    if self.nodes[bias.0].requires_grad {
                        let q = self.nodes[bias.0].value.len();
                        let db = slot(&mut grads, bias, q);
                        for row in g.chunks(q) {
                            for (d, &gi) in db.iter_mut().zip(row) {
                                *d = *d + gi;
                            }
                        }
                    }
                }
                Op::Sigmoid(x) => {
                    let s = node.value.data();
                    self.accumulate(&mut grads, x, &g, |gi, i| gi * s[i] * (T::one() - s[i]));
                }
                Op::Tanh(x) => {
                    let t = node.value.data();
                    self.accumulate(&mut grads, x, &g, |gi, i| gi * (T::one() - t[i] * t[i]));
                }
                Op::Scale(x, factor) => {
                    self.accumulate(&mut grads, x, &g, |gi, _| gi * factor);
                }
                Op::Map(x, df) => {
                    let xv = self.nodes[x.0].value.data();
                    self.accumulate(&mut grads, x, &g, |gi, i| gi * df(xv[i]));
                }
                Op::Sum(x) => {
                    let g0 = g[0];
                    self.accumulate_fill(&mut grads, x, g0);
                }
                Op::Row(x, i) => {
                    if self.nodes[x.0].requires_grad {
                        let n = self.nodes[x.0].value.len();
                        let q = g.len();
                        let dx = slot(&mut grads, x, n);
                        for (d, &gi) in dx[i * q..(i + 1) * q].iter_mut().zip(&g) {
                            *d = *d + gi;
                        }
                    }
                }
                Op::Mse(pred, target) => {
                    let pv = self.nodes[pred.0].value.data();
                    let tv = self.nodes[target.0].value.data();
                    let k = T::count(pv.len());
                    let two = T::lit(2.0);
                    let g0 = g[0];
                    let diff = |i: usize| two * (pv[i] - tv[i]) / k * g0;
                    if self.nodes[pred.0].requires_grad {
                        let dp = slot(&mut grads, pred, pv.len());
                        for (i, d) in dp.iter_mut().enumerate() {
                            *d = *d + diff(i);
                        }
                    }
                    if self.nodes[target.0].requires_grad {
                        let dt = slot(&mut grads, target, tv.len());
                        for (i, d) in dt.iter_mut().enumerate() {
                            *d = *d - diff(i);
                        }
                    }
                }
            }
        }

        let leaves = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if matches!(n.op, Op::Leaf) && n.requires_grad {
                    let data = grads
                        .get_mut(i)
                        .and_then(Option::take)
                        .unwrap_or_else(|| vec![T::zero(); n.value.len()]);
                    Some(
                        Tensor::from_vec(n.value.shape().to_vec(), data)
                            .expect("gradient buffer matches value shape"),
                    )
                } else {
                    None
                }
            })
            .collect();
        Ok(Gradients { leaves })
    }

    fn accumulate(
        &self,
        grads: &mut [Option<Vec<T>>],
        target: Var,
        upstream: &[T],
        f: impl Fn(T, usize) -> T,
    ) {
        if !self.nodes[target.0].requires_grad {
            return;
        }
        let buf = slot(grads, target, upstream.len());
        for (i, (d, &gi)) in buf.iter_mut().zip(upstream).enumerate() {
            *d = *d + f(gi, i);
        }
    }

    fn accumulate_fill(&self, grads: &mut [Option<Vec<T>>], target: Var, g: T) {
        if !self.nodes[target.0].requires_grad {
            return;
        }
        let n = self.nodes[target.0].value.len();
        for d in slot(grads, target, n).iter_mut() {
            *d = *d + g;
        }
    }
}

fn slot<T: Scalar>(grads: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut Vec<T> {
    grads[v.0].get_or_insert_with(|| vec![T::zero(); len])
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Leaf gradients produced by one backward pass.
pub struct Gradients<T> {
    leaves: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient for `v`, or `None` if `v` is not a `requires_grad` leaf.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.leaves.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.leaves.get_mut(v.0).and_then(Option::take)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn sum_of_vector_has_unit_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[5], &[0.3, -1.0, 2.0, 4.0, 0.0]));
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.0; 5]);
    }

    #[test]
    fn sigmoid_and_tanh_at_zero() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(0.0));
        let s = tape.sigmoid(x);
        let th = tape.tanh(x);
        assert_eq!(tape.value(s).data()[0], 0.5);
        assert_eq!(tape.value(th).data()[0], 0.0);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data()[0], 0.25);
    }

    #[test]
    fn mse_values_and_gradient() {
        let mut tape = Tape::new();
        let p = tape.param(t(&[1], &[2.0]));
        let y = tape.constant(t(&[1], &[0.0]));
        let l = tape.mse_loss(p, y).unwrap();
        assert_eq!(tape.value(l).data()[0], 4.0);
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(p).unwrap().data(), &[4.0]);

        let mut tape = Tape::new();
        let p = tape.param(t(&[3], &[1.0, 2.0, 3.0]));
        let y = tape.constant(t(&[3], &[1.0, 2.0, 3.0]));
        let l = tape.mse_loss(p, y).unwrap();
        assert_eq!(tape.value(l).data()[0], 0.0);
    }

    #[test]
    fn mse_rejects_empty() {
        let mut tape = Tape::<f64>::new();
        let p = tape.param(Tensor::zeros(vec![0]));
        let y = tape.constant(Tensor::zeros(vec![0]));
        assert!(matches!(tape.mse_loss(p, y), Err(GradError::Domain(_))));
    }

    #[test]
    fn scalar_chain_matches_analytic() {
        // loss = (w*x - y)^2, d/dx = 2w(wx - y)
        let (w, x0, y) = (1.5, -0.4, 0.7);
        let mut tape = Tape::new();
        let wv = tape.constant(t(&[1, 1], &[w]));
        let xv = tape.param(t(&[1, 1], &[x0]));
        let yv = tape.constant(t(&[1, 1], &[y]));
        let p = tape.matmul(wv, xv).unwrap();
        let l = tape.mse_loss(p, yv).unwrap();
        let g = tape.backward(l).unwrap();
        let expected = 2.0 * w * (w * x0 - y);
        assert!((g.get(xv).unwrap().data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn second_backward_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[1.0, 2.0]));
        let s = tape.sum(x);
        tape.backward(s).unwrap();
        assert!(matches!(tape.backward(s), Err(GradError::Usage(_))));
    }

    #[test]
    fn non_scalar_and_detached_losses_are_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[1.0, 2.0]));
        assert!(matches!(tape.backward(x), Err(GradError::Usage(_))));

        let mut tape = Tape::new();
        let c = tape.constant(t(&[2], &[1.0, 2.0]));
        let s = tape.sum(c);
        assert!(matches!(tape.backward(s), Err(GradError::Usage(_))));
    }

    #[test]
    fn unreachable_leaf_gets_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2], &[1.0, 2.0]));
        let unused = tape.param(t(&[3], &[1.0, 2.0, 3.0]));
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(unused).unwrap().data(), &[0.0; 3]);
        assert!(g.get(s).is_none());
    }

    #[test]
    fn elementwise_arity_and_shape_checks() {
        let mut tape = Tape::new();
        let a = tape.param(t(&[2], &[1.0, 2.0]));
        let b = tape.param(t(&[3], &[1.0, 2.0, 3.0]));
        assert!(tape.elementwise(Elementwise::Add, &[a]).is_err());
        assert!(matches!(
            tape.elementwise(Elementwise::Mul, &[a, b]),
            Err(GradError::Shape { .. })
        ));
    }

    #[test]
    fn row_bias_requires_matching_width() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::zeros(vec![3, 2]));
        let b = tape.param(Tensor::zeros(vec![1, 3]));
        assert!(tape.add_row_bias(x, b).is_err());
        let b = tape.param(t(&[1, 2], &[1.0, -1.0]));
        let y = tape.add_row_bias(x, b).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        let s = tape.sum(y);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(b).unwrap().data(), &[3.0, 3.0]);
    }

    #[test]
    fn fan_out_accumulates_within_one_pass() {
        // loss = sum(x * x) => grad = 2x
        let mut tape = Tape::new();
        let x = tape.param(t(&[3], &[1.0, -2.0, 0.5]));
        let sq = tape.mul(x, x).unwrap();
        let s = tape.sum(sq);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn row_scatters_gradient_into_its_row() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let r = tape.row(x, 1).unwrap();
        assert_eq!(tape.value(r).shape(), &[1, 2]);
        assert_eq!(tape.value(r).data(), &[3.0, 4.0]);
        let s = tape.sum(r);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0.0, 0.0, 1.0, 1.0]);
        let mut tape = Tape::new();
        let x = tape.param(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        assert!(tape.row(x, 2).is_err());
    }
}
