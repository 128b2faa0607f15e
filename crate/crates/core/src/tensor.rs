//! Define-by-run reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] owns every tensor created during one forward pass. Operations
//! append a node whose inputs always precede it, so replaying the tape in
//! reverse visits each node after all of its consumers. Tensors are addressed
//! by [`TensorId`] handles; the tape is meant to be rebuilt for every training
//! step.
//!
//! ```
//! use miqa_pns::tensor::Tape;
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(vec![1], vec![3.0]).unwrap();
//! let sq = tape.mul(x, x).unwrap();
//! let root = tape.sum(sq).unwrap();
//! tape.backward(root).unwrap();
//! assert_eq!(tape.grad(x).unwrap(), &[6.0]);
//! ```

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: unsupported input shape {shape:?}")]
    BadShape { op: &'static str, shape: Vec<usize> },
    #[error("{op}: expected {expected} input(s), got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty tensor (shape {0:?})")]
    Empty(Vec<usize>),
    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { len: usize, shape: Vec<usize> },
    #[error("select_index: index {index} out of range for {classes} classes")]
    IndexOutOfRange { index: usize, classes: usize },
    #[error("select_index: {indices} indices for {rows} rows")]
    IndexCount { indices: usize, rows: usize },
    #[error("backward root must be scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("backward already ran on this tape; call reset_grads first")]
    BackwardTwice,
    #[error("tensor {0} is not on this tape")]
    UnknownTensor(usize),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorId(usize);

impl TensorId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The differentiable operations the tape understands.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    /// `[m, k] x [k, n] -> [m, n]`.
    MatMul,
    /// Elementwise sum of equal shapes, or bias-add of `[n]`/`[1, n]` onto `[m, n]`.
    Add,
    MulElementwise,
    ScalarMul(f64),
    Relu,
    /// Row-wise over the last axis.
    LogSoftmax,
    Sum,
    Mean,
    /// Picks one column per row: `[m, c] -> [m]` (or `[c] -> [1]`).
    SelectIndex(Vec<usize>),
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::MulElementwise => "mul_elementwise",
            OpKind::ScalarMul(_) => "scalar_mul",
            OpKind::Relu => "relu",
            OpKind::LogSoftmax => "log_softmax",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::SelectIndex(_) => "select_index",
        }
    }

    fn arity(&self) -> usize {
        match self {
            OpKind::MatMul | OpKind::Add | OpKind::MulElementwise => 2,
            _ => 1,
        }
    }
}

/// A node's value, shape and (after backward) gradient.
#[derive(Debug, Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

impl Tensor {
    fn new(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::Empty(shape));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape,
            });
        }
        Ok(Self {
            shape,
            data,
            grad: None,
            requires_grad,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }
}

#[derive(Debug, Clone)]
struct Node {
    tensor: Tensor,
    op: Option<(OpKind, Vec<TensorId>)>,
}

/// Recording of one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
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

    /// A trainable input: gradients are collected for it.
    pub fn leaf(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Result<TensorId> {
        self.push(Tensor::new(shape, data, true)?, None)
    }

    /// A non-trainable input (data batch, mask). No gradient is stored.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<f64>) -> Result<TensorId> {
        self.push(Tensor::new(shape, data, false)?, None)
    }

    pub fn tensor(&self, id: TensorId) -> Result<&Tensor> {
        self.nodes
            .get(id.0)
            .map(|n| &n.tensor)
            .ok_or(TensorError::UnknownTensor(id.0))
    }

    /// Panics if `id` came from another tape.
    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].tensor.data
    }

    /// Panics if `id` came from another tape.
    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].tensor.shape
    }

    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.nodes.get(id.0).and_then(|n| n.tensor.grad.as_deref())
    }

    /// Scalar value of a one-element tensor.
    pub fn scalar(&self, id: TensorId) -> f64 {
        self.nodes[id.0].tensor.data[0]
    }

    /// Clears all gradients so `backward` may run again.
    pub fn reset_grads(&mut self) {
        for node in &mut self.nodes {
            node.tensor.grad = None;
        }
        self.backward_done = false;
    }

    fn push(&mut self, tensor: Tensor, op: Option<(OpKind, Vec<TensorId>)>) -> Result<TensorId> {
        let id = TensorId(self.nodes.len());
        self.nodes.push(Node { tensor, op });
        Ok(id)
    }

    fn check(&self, id: TensorId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(TensorError::UnknownTensor(id.0))
        }
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(OpKind::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(OpKind::Add, &[a, b])
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.apply(OpKind::MulElementwise, &[a, b])
    }

    pub fn scalar_mul(&mut self, a: TensorId, s: f64) -> Result<TensorId> {
        self.apply(OpKind::ScalarMul(s), &[a])
    }

    pub fn relu(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(OpKind::Relu, &[a])
    }

    pub fn log_softmax(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(OpKind::LogSoftmax, &[a])
    }

    pub fn sum(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(OpKind::Sum, &[a])
    }

    pub fn mean(&mut self, a: TensorId) -> Result<TensorId> {
        self.apply(OpKind::Mean, &[a])
    }

    pub fn select_index(&mut self, a: TensorId, indices: Vec<usize>) -> Result<TensorId> {
        self.apply(OpKind::SelectIndex(indices), &[a])
    }

    /// Evaluates `kind` on `inputs` and records it.
    pub fn apply(&mut self, kind: OpKind, inputs: &[TensorId]) -> Result<TensorId> {
        let op = kind.name();
        if inputs.len() != kind.arity() {
            return Err(TensorError::Arity {
                op,
                expected: kind.arity(),
                got: inputs.len(),
            });
        }
        for &id in inputs {
            self.check(id)?;
        }
        let requires_grad = inputs.iter().any(|&i| self.nodes[i.0].tensor.requires_grad);
        let a = &self.nodes[inputs[0].0].tensor;
        let (shape, data) = match &kind {
            OpKind::MatMul => {
                let b = &self.nodes[inputs[1].0].tensor;
                let (m, k, n) = matmul_dims(a, b)?;
                let mut out = vec![0.0; m * n];
                gemm(m, k, n, &a.data, Layout::Normal, &b.data, Layout::Normal, &mut out, false);
                (vec![m, n], out)
            }
            OpKind::Add => {
                let b = &self.nodes[inputs[1].0].tensor;
                match add_kind(a, b)? {
                    AddKind::Same => (
                        a.shape.clone(),
                        a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
                    ),
                    AddKind::Bias { cols } => {
                        let mut out = a.data.clone();
                        add_bias(&mut out, &b.data, cols);
                        (a.shape.clone(), out)
                    }
                }
            }
            OpKind::MulElementwise => {
                let b = &self.nodes[inputs[1].0].tensor;
                if a.shape != b.shape {
                    return Err(TensorError::ShapeMismatch {
                        op,
                        lhs: a.shape.clone(),
                        rhs: b.shape.clone(),
                    });
                }
                (
                    a.shape.clone(),
                    a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
                )
            }
            OpKind::ScalarMul(s) => (a.shape.clone(), a.data.iter().map(|x| x * s).collect()),
            OpKind::Relu => (a.shape.clone(), a.data.iter().map(|&x| relu(x)).collect()),
            OpKind::LogSoftmax => {
                let cols = last_dim(a, op)?;
                let mut out = a.data.clone();
                log_softmax_rows(&mut out, cols);
                (a.shape.clone(), out)
            }
            OpKind::Sum => (vec![1], vec![a.data.iter().sum()]),
            OpKind::Mean => (vec![1], vec![a.data.iter().sum::<f64>() / a.data.len() as f64]),
            OpKind::SelectIndex(indices) => {
                let (rows, cols) = select_dims(a, indices)?;
                let out = (0..rows).map(|r| a.data[r * cols + indices[r]]).collect();
                (vec![rows], out)
            }
        };
        let tensor = Tensor::new(shape, data, requires_grad)?;
        self.push(tensor, Some((kind, inputs.to_vec())))
    }

    /// Propagates d(root)/d(node) into every trainable node up to `root`.
    ///
    /// Gradients accumulate across fan-out. Running twice without
    /// [`Tape::reset_grads`] is an error.
    pub fn backward(&mut self, root: TensorId) -> Result<()> {
        self.check(root)?;
        if self.backward_done {
            return Err(TensorError::BackwardTwice);
        }
        let root_shape = &self.nodes[root.0].tensor.shape;
        if root_shape.iter().product::<usize>() != 1 {
            return Err(TensorError::NonScalarRoot(root_shape.clone()));
        }
        self.backward_done = true;

        let mut grads: Vec<Option<Vec<f64>>> = self.nodes[..=root.0]
            .iter()
            .map(|n| n.tensor.requires_grad.then(|| vec![0.0; n.tensor.data.len()]))
            .collect();
        if let Some(g) = grads[root.0].as_mut() {
            g[0] = 1.0;
        }

        for idx in (0..=root.0).rev() {
            let Some((kind, inputs)) = &self.nodes[idx].op else {
                continue;
            };
            let Some(out_grad) = grads[idx].take() else {
                continue;
            };
            let out = &self.nodes[idx].tensor;
            match kind {
                OpKind::MatMul => {
                    let a = &self.nodes[inputs[0].0].tensor;
                    let b = &self.nodes[inputs[1].0].tensor;
                    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        // dA += dC · Bᵀ
                        gemm(m, n, k, &out_grad, Layout::Normal, &b.data, Layout::Transposed { ld: n }, ga, true);
                    }
                    if let Some(gb) = grads[inputs[1].0].as_mut() {
                        // dB += Aᵀ · dC
                        gemm(k, m, n, &a.data, Layout::Transposed { ld: k }, &out_grad, Layout::Normal, gb, true);
                    }
                }
                OpKind::Add => {
                    let a = &self.nodes[inputs[0].0].tensor;
                    let b = &self.nodes[inputs[1].0].tensor;
                    let kind = add_kind(a, b)?;
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        accumulate(ga, &out_grad);
                    }
                    if let Some(gb) = grads[inputs[1].0].as_mut() {
                        match kind {
                            AddKind::Same => accumulate(gb, &out_grad),
                            AddKind::Bias { cols } => {
                                for row in out_grad.chunks_exact(cols) {
                                    accumulate(gb, row);
                                }
                            }
                        }
                    }
                }
                OpKind::MulElementwise => {
                    let (ia, ib) = (inputs[0].0, inputs[1].0);
                    if grads[ia].is_some() {
                        let b = &self.nodes[ib].tensor.data;
                        let ga = grads[ia].as_mut().unwrap();
                        for ((g, d), y) in ga.iter_mut().zip(&out_grad).zip(b) {
                            *g += d * y;
                        }
                    }
                    if grads[ib].is_some() {
                        let a = &self.nodes[ia].tensor.data;
                        let gb = grads[ib].as_mut().unwrap();
                        for ((g, d), x) in gb.iter_mut().zip(&out_grad).zip(a) {
                            *g += d * x;
                        }
                    }
                }
                OpKind::ScalarMul(s) => {
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        for (g, d) in ga.iter_mut().zip(&out_grad) {
                            *g += d * s;
                        }
                    }
                }
                OpKind::Relu => {
                    let a = &self.nodes[inputs[0].0].tensor.data;
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        for ((g, d), x) in ga.iter_mut().zip(&out_grad).zip(a) {
                            if *x > 0.0 {
                                *g += d;
                            }
                        }
                    }
                }
                OpKind::LogSoftmax => {
                    let cols = *out.shape.last().unwrap();
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        // dx = dy - softmax(x) * sum(dy), per row
                        for ((g_row, d_row), y_row) in ga
                            .chunks_exact_mut(cols)
                            .zip(out_grad.chunks_exact(cols))
                            .zip(out.data.chunks_exact(cols))
                        {
                            let total: f64 = d_row.iter().sum();
                            for ((g, d), y) in g_row.iter_mut().zip(d_row).zip(y_row) {
                                *g += d - y.exp() * total;
                            }
                        }
                    }
                }
                OpKind::Sum => {
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        for g in ga.iter_mut() {
                            *g += out_grad[0];
                        }
                    }
                }
                OpKind::Mean => {
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        let share = out_grad[0] / ga.len() as f64;
                        for g in ga.iter_mut() {
                            *g += share;
                        }
                    }
                }
                OpKind::SelectIndex(indices) => {
                    let cols = *self.nodes[inputs[0].0].tensor.shape.last().unwrap();
                    if let Some(ga) = grads[inputs[0].0].as_mut() {
                        for (r, (&i, d)) in indices.iter().zip(&out_grad).enumerate() {
                            ga[r * cols + i] += d;
                        }
                    }
                }
            }
            grads[idx] = Some(out_grad);
        }

        for (node, grad) in self.nodes.iter_mut().zip(grads) {
            node.tensor.grad = grad;
        }
        Ok(())
    }
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn matmul_dims(a: &Tensor, b: &Tensor) -> Result<(usize, usize, usize)> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return Err(TensorError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape.clone(),
            rhs: b.shape.clone(),
        });
    }
    Ok((a.shape[0], a.shape[1], b.shape[1]))
}

enum AddKind {
    Same,
    Bias { cols: usize },
}

fn add_kind(a: &Tensor, b: &Tensor) -> Result<AddKind> {
    if a.shape == b.shape {
        return Ok(AddKind::Same);
    }
    let bias_ok = a.shape.len() == 2
        && match b.shape.as_slice() {
            [n] => *n == a.shape[1],
            [1, n] => *n == a.shape[1],
            _ => false,
        };
    if bias_ok {
        Ok(AddKind::Bias { cols: a.shape[1] })
    } else {
        Err(TensorError::ShapeMismatch {
            op: "add",
            lhs: a.shape.clone(),
            rhs: b.shape.clone(),
        })
    }
}

fn last_dim(a: &Tensor, op: &'static str) -> Result<usize> {
    match a.shape.len() {
        1 | 2 => Ok(*a.shape.last().unwrap()),
        _ => Err(TensorError::BadShape {
            op,
            shape: a.shape.clone(),
        }),
    }
}

fn select_dims(a: &Tensor, indices: &[usize]) -> Result<(usize, usize)> {
    let (rows, cols) = match a.shape.as_slice() {
        [c] => (1, *c),
        [r, c] => (*r, *c),
        _ => {
            return Err(TensorError::BadShape {
                op: "select_index",
                shape: a.shape.clone(),
            })
        }
    };
    if indices.len() != rows {
        return Err(TensorError::IndexCount {
            indices: indices.len(),
            rows,
        });
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= cols) {
        return Err(TensorError::IndexOutOfRange {
            index,
            classes: cols,
        });
    }
    Ok((rows, cols))
}

// ---- kernels shared with the tape-free inference path ----

#[inline]
pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Row-wise `x - max - ln(sum(exp(x - max)))`, in place.
pub(crate) fn log_softmax_rows(data: &mut [f64], cols: usize) {
    for row in data.chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        for x in row.iter_mut() {
            *x = *x - max - lse;
        }
    }
}

pub(crate) fn add_bias(data: &mut [f64], bias: &[f64], cols: usize) {
    for row in data.chunks_exact_mut(cols) {
        accumulate(row, bias);
    }
}

/// Storage of a row-major operand. `Transposed { ld }` reads a stored
/// row-major matrix with leading dimension `ld` as its transpose.
#[derive(Clone, Copy)]
pub(crate) enum Layout {
    Normal,
    Transposed { ld: usize },
}

/// `c (m x n) = a (m x k) · b (k x n)`, or `c += ...` when `accumulate`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_layout: Layout,
    b: &[f64],
    b_layout: Layout,
    c: &mut [f64],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let (rsa, csa) = match a_layout {
        Layout::Normal => (k as isize, 1),
        Layout::Transposed { ld } => (1, ld as isize),
    };
    let (rsb, csb) = match b_layout {
        Layout::Normal => (n as isize, 1),
        Layout::Transposed { ld } => (1, ld as isize),
    };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_hand_example() {
        let mut t = Tape::new();
        let a = t.leaf(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = t.leaf(vec![2, 1], vec![1.0, 1.0]).unwrap();
        let c = t.matmul(a, b).unwrap();
        assert_eq!(t.shape(c), &[2, 1]);
        assert_eq!(t.value(c), &[3.0, 7.0]);
    }

    #[test]
    fn relu_definition() {
        let mut t = Tape::new();
        let a = t.leaf(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        let r = t.relu(a).unwrap();
        assert_eq!(t.value(r), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn log_softmax_uniform() {
        let mut t = Tape::new();
        let a = t.leaf(vec![2], vec![0.0, 0.0]).unwrap();
        let l = t.log_softmax(a).unwrap();
        for v in t.value(l) {
            assert!((v + std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn log_softmax_large_logits_stay_finite() {
        let mut t = Tape::new();
        let a = t.leaf(vec![1, 2], vec![1000.0, -1000.0]).unwrap();
        let l = t.log_softmax(a).unwrap();
        assert_eq!(t.value(l)[0], 0.0);
        assert_eq!(t.value(l)[1], -2000.0);
    }

    #[test]
    fn square_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(vec![1], vec![3.0]).unwrap();
        let sq = t.mul(x, x).unwrap();
        let root = t.sum(sq).unwrap();
        t.backward(root).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[6.0]);
        assert_eq!(t.grad(root).unwrap(), &[1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let mut t = Tape::new();
        let x = t.leaf(vec![1], vec![1.0]).unwrap();
        let s = t.add(x, x).unwrap();
        let root = t.sum(s).unwrap();
        t.backward(root).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[2.0]);
    }

    #[test]
    fn bias_add_broadcasts_and_reduces_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = t.leaf(vec![2], vec![10.0, 20.0]).unwrap();
        let y = t.add(x, b).unwrap();
        assert_eq!(t.value(y), &[11.0, 22.0, 13.0, 24.0]);
        let root = t.sum(y).unwrap();
        t.backward(root).unwrap();
        assert_eq!(t.grad(b).unwrap(), &[2.0, 2.0]);
    }

    #[test]
    fn shape_mismatch_names_op_and_shapes() {
        let mut t = Tape::new();
        let a = t.leaf(vec![2, 3], vec![0.0; 6]).unwrap();
        let b = t.leaf(vec![2, 3], vec![0.0; 6]).unwrap();
        let err = t.matmul(a, b).unwrap_err();
        assert_eq!(
            err,
            TensorError::ShapeMismatch {
                op: "matmul",
                lhs: vec![2, 3],
                rhs: vec![2, 3]
            }
        );
        assert!(err.to_string().contains("matmul"));
    }

    #[test]
    fn empty_tensor_rejected() {
        let mut t = Tape::new();
        assert!(matches!(t.leaf(vec![0], vec![]), Err(TensorError::Empty(_))));
        assert!(matches!(t.leaf(vec![], vec![]), Err(TensorError::Empty(_))));
        assert!(matches!(
            t.leaf(vec![2], vec![1.0]),
            Err(TensorError::DataLength { .. })
        ));
    }

    #[test]
    fn backward_errors() {
        let mut t = Tape::new();
        let x = t.leaf(vec![2], vec![1.0, 2.0]).unwrap();
        assert!(matches!(t.backward(x), Err(TensorError::NonScalarRoot(_))));
        let s = t.sum(x).unwrap();
        t.backward(s).unwrap();
        assert_eq!(t.backward(s), Err(TensorError::BackwardTwice));
        t.reset_grads();
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn select_index_bounds() {
        let mut t = Tape::new();
        let x = t.leaf(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = t.select_index(x, vec![1, 0]).unwrap();
        assert_eq!(t.value(s), &[2.0, 3.0]);
        assert!(matches!(
            t.select_index(x, vec![2, 0]),
            Err(TensorError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            t.select_index(x, vec![0]),
            Err(TensorError::IndexCount { .. })
        ));
    }

    #[test]
    fn constants_collect_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(vec![1], vec![2.0]).unwrap();
        let x = t.leaf(vec![1], vec![3.0]).unwrap();
        let y = t.mul(c, x).unwrap();
        let root = t.sum(y).unwrap();
        t.backward(root).unwrap();
        assert!(t.grad(c).is_none());
        assert_eq!(t.grad(x).unwrap(), &[2.0]);
    }
}
