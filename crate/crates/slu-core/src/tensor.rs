//! A small reverse-mode automatic differentiation engine over `f64`
//! matrices, sized for the models in this crate rather than generality.
//!
//! A [`Graph`] is built afresh for every training example (define-by-run):
//! each operation evaluates eagerly and records enough to run
//! [`Graph::backward`] from a scalar loss. Parameters enter a graph as
//! named leaves cloned out of a [`store::ParameterStore`]; after backward,
//! [`Graph::accumulate_grads`] adds the leaf gradients back into the
//! store, which owns the Adam state.
//!
//! Everything is two-dimensional and row-major. Scalars are `[1, 1]`,
//! row vectors `[1, n]`, column vectors `[n, 1]`.

pub mod nn;
pub mod store;

use crate::error::{Error, Result};

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: format!("{} values for [{rows}, {cols}]", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn scalar(x: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![x] }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Stable softmax of a flat slice.
pub fn softmax_slice(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Handle to a node in a [`Graph`].
pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// broadcast a `[1, n]` row across every row of a `[m, n]` matrix
    AddRow(NodeId, NodeId),
    /// broadcast a `[m, 1]` column across every column of a `[m, n]` matrix
    AddCol(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    SliceCols(NodeId, usize, usize),
    SliceRows(NodeId, usize, usize),
    Transpose(NodeId),
    SoftmaxRows(NodeId),
    /// per-column log-sum-exp over rows: `[m, n] -> [1, n]`
    LogSumExpCols(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    Reshape(NodeId),
    Pick(NodeId, usize, usize),
    /// row gather from an embedding table
    EmbedRows(NodeId, Vec<usize>),
    /// 1-D convolution over rows (time) with same-length zero padding
    Conv1dSame { x: NodeId, w: NodeId, width: usize },
    /// mean softmax cross-entropy of `[n, k]` logits against n class ids
    CrossEntropy { logits: NodeId, targets: Vec<usize> },
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Tensor,
    param: Option<String>,
}

/// A define-by-run computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let grad = Tensor::zeros(value.rows, value.cols);
        self.nodes.push(Node { op, value, grad, param: None });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn grad(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].grad
    }

    /// Constant leaf (no gradient flows out of the graph).
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// Named parameter leaf, cloned from the store.
    pub fn param(&mut self, store: &store::ParameterStore, name: &str) -> NodeId {
        let value = store.value(name).expect("unknown parameter").clone();
        let id = self.push(Op::Leaf, value);
        self.nodes[id].param = Some(name.to_string());
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ar, ac) = self.nodes[a].value.shape();
        let (br, bc) = self.nodes[b].value.shape();
        assert_eq!(ac, br, "matmul inner dimensions: [{ar},{ac}] x [{br},{bc}]");
        let mut out = Tensor::zeros(ar, bc);
        {
            let av = &self.nodes[a].value;
            let bv = &self.nodes[b].value;
            for i in 0..ar {
                for k in 0..ac {
                    let aik = av.data[i * ac + k];
                    if aik == 0.0 {
                        continue;
                    }
                    let brow = &bv.data[k * bc..(k + 1) * bc];
                    let orow = &mut out.data[i * bc..(i + 1) * bc];
                    for (o, b) in orow.iter_mut().zip(brow) {
                        *o += aik * b;
                    }
                }
            }
        }
        self.push(Op::MatMul(a, b), out)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.nodes[a].value.shape(), self.nodes[b].value.shape(), "add shapes");
        let mut out = self.nodes[a].value.clone();
        for (o, x) in out.data.iter_mut().zip(&self.nodes[b].value.data) {
            *o += x;
        }
        self.push(Op::Add(a, b), out)
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        assert_eq!(self.nodes[row].value.shape(), (1, n), "add_row shapes");
        let mut out = self.nodes[a].value.clone();
        for r in 0..m {
            for c in 0..n {
                out.data[r * n + c] += self.nodes[row].value.data[c];
            }
        }
        self.push(Op::AddRow(a, row), out)
    }

    pub fn add_col(&mut self, a: NodeId, col: NodeId) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        assert_eq!(self.nodes[col].value.shape(), (m, 1), "add_col shapes");
        let mut out = self.nodes[a].value.clone();
        for r in 0..m {
            for c in 0..n {
                out.data[r * n + c] += self.nodes[col].value.data[r];
            }
        }
        self.push(Op::AddCol(a, col), out)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.nodes[a].value.shape(), self.nodes[b].value.shape(), "mul shapes");
        let mut out = self.nodes[a].value.clone();
        for (o, x) in out.data.iter_mut().zip(&self.nodes[b].value.data) {
            *o *= x;
        }
        self.push(Op::Mul(a, b), out)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let mut out = self.nodes[a].value.clone();
        for o in out.data.iter_mut() {
            *o *= factor;
        }
        self.push(Op::Scale(a, factor), out)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let mut out = self.nodes[a].value.clone();
        for o in out.data.iter_mut() {
            *o = 1.0 / (1.0 + (-*o).exp());
        }
        self.push(Op::Sigmoid(a), out)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let mut out = self.nodes[a].value.clone();
        for o in out.data.iter_mut() {
            *o = o.tanh();
        }
        self.push(Op::Tanh(a), out)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let mut out = self.nodes[a].value.clone();
        for o in out.data.iter_mut() {
            *o = o.max(0.0);
        }
        self.push(Op::Relu(a), out)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let rows = self.nodes[parts[0]].value.rows;
        let cols: usize = parts.iter().map(|p| self.nodes[*p].value.cols).sum();
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let v = &self.nodes[*p].value;
            assert_eq!(v.rows, rows, "concat_cols row mismatch");
            for r in 0..rows {
                out.data[r * cols + offset..r * cols + offset + v.cols]
                    .copy_from_slice(&v.data[r * v.cols..(r + 1) * v.cols]);
            }
            offset += v.cols;
        }
        self.push(Op::ConcatCols(parts.to_vec()), out)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let cols = self.nodes[parts[0]].value.cols;
        let rows: usize = parts.iter().map(|p| self.nodes[*p].value.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for p in parts {
            let v = &self.nodes[*p].value;
            assert_eq!(v.cols, cols, "concat_rows col mismatch");
            data.extend_from_slice(&v.data);
        }
        self.push(Op::ConcatRows(parts.to_vec()), Tensor { rows, cols, data })
    }

    pub fn slice_cols(&mut self, a: NodeId, from: usize, to: usize) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        assert!(from < to && to <= n, "slice_cols {from}..{to} of {n}");
        let mut out = Tensor::zeros(m, to - from);
        for r in 0..m {
            out.data[r * (to - from)..(r + 1) * (to - from)]
                .copy_from_slice(&self.nodes[a].value.data[r * n + from..r * n + to]);
        }
        self.push(Op::SliceCols(a, from, to), out)
    }

    pub fn slice_rows(&mut self, a: NodeId, from: usize, to: usize) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        assert!(from < to && to <= m, "slice_rows {from}..{to} of {m}");
        let data = self.nodes[a].value.data[from * n..to * n].to_vec();
        self.push(Op::SliceRows(a, from, to), Tensor { rows: to - from, cols: n, data })
    }

    pub fn row(&mut self, a: NodeId, r: usize) -> NodeId {
        self.slice_rows(a, r, r + 1)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        let mut out = Tensor::zeros(n, m);
        for r in 0..m {
            for c in 0..n {
                out.data[c * m + r] = self.nodes[a].value.data[r * n + c];
            }
        }
        self.push(Op::Transpose(a), out)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        let mut out = Tensor::zeros(m, n);
        for r in 0..m {
            let soft = softmax_slice(&self.nodes[a].value.data[r * n..(r + 1) * n]);
            out.data[r * n..(r + 1) * n].copy_from_slice(&soft);
        }
        self.push(Op::SoftmaxRows(a), out)
    }

    pub fn log_sum_exp_cols(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.nodes[a].value.shape();
        let mut out = Tensor::zeros(1, n);
        for c in 0..n {
            let mut max = f64::NEG_INFINITY;
            for r in 0..m {
                max = max.max(self.nodes[a].value.at(r, c));
            }
            let mut sum = 0.0;
            for r in 0..m {
                sum += (self.nodes[a].value.at(r, c) - max).exp();
            }
            out.data[c] = max + sum.ln();
        }
        self.push(Op::LogSumExpCols(a), out)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total: f64 = self.nodes[a].value.data.iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(total))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let len = self.nodes[a].value.len() as f64;
        let total: f64 = self.nodes[a].value.data.iter().sum();
        self.push(Op::Mean(a), Tensor::scalar(total / len))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> NodeId {
        let v = &self.nodes[a].value;
        assert_eq!(v.len(), rows * cols, "reshape size mismatch");
        let out = Tensor { rows, cols, data: v.data.clone() };
        self.push(Op::Reshape(a), out)
    }

    pub fn pick(&mut self, a: NodeId, r: usize, c: usize) -> NodeId {
        let x = self.nodes[a].value.at(r, c);
        self.push(Op::Pick(a, r, c), Tensor::scalar(x))
    }

    /// Gather `indices` rows from an embedding table into `[len, cols]`.
    pub fn embed_rows(&mut self, table: NodeId, indices: &[usize]) -> NodeId {
        let (m, n) = self.nodes[table].value.shape();
        let mut out = Tensor::zeros(indices.len(), n);
        for (r, idx) in indices.iter().enumerate() {
            assert!(*idx < m, "embedding index {idx} out of {m}");
            out.data[r * n..(r + 1) * n]
                .copy_from_slice(&self.nodes[table].value.data[idx * n..(idx + 1) * n]);
        }
        self.push(Op::EmbedRows(table, indices.to_vec()), out)
    }

    /// Convolve `x: [T, E]` over time with filters `w: [width * E, F]`,
    /// zero-padded so the output is `[T, F]`. The window for output `t`
    /// starts at `t - (width - 1) / 2`.
    pub fn conv1d_same(&mut self, x: NodeId, w: NodeId, width: usize) -> NodeId {
        let (t_len, e) = self.nodes[x].value.shape();
        let (wr, f) = self.nodes[w].value.shape();
        assert_eq!(wr, width * e, "conv filter rows must be width * in_dim");
        let pad_left = (width - 1) / 2;
        let mut out = Tensor::zeros(t_len, f);
        for t in 0..t_len {
            for k in 0..width {
                let src = t as isize + k as isize - pad_left as isize;
                if src < 0 || src >= t_len as isize {
                    continue;
                }
                let src = src as usize;
                for ein in 0..e {
                    let xv = self.nodes[x].value.at(src, ein);
                    if xv == 0.0 {
                        continue;
                    }
                    let wrow = k * e + ein;
                    for fo in 0..f {
                        out.data[t * f + fo] += xv * self.nodes[w].value.at(wrow, fo);
                    }
                }
            }
        }
        self.push(Op::Conv1dSame { x, w, width }, out)
    }

    /// Mean softmax cross-entropy over rows of `[n, k]` logits.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[usize]) -> NodeId {
        let (n, k) = self.nodes[logits].value.shape();
        assert_eq!(targets.len(), n, "one target per logits row");
        let mut loss = 0.0;
        for (r, t) in targets.iter().enumerate() {
            assert!(*t < k, "target {t} out of {k} classes");
            let row = &self.nodes[logits].value.data[r * k..(r + 1) * k];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            loss += lse - row[*t];
        }
        loss /= n as f64;
        self.push(Op::CrossEntropy { logits, targets: targets.to_vec() }, Tensor::scalar(loss))
    }

    /// Run reverse-mode accumulation from a scalar root.
    pub fn backward(&mut self, root: NodeId) {
        assert_eq!(self.nodes[root].value.shape(), (1, 1), "backward needs a scalar root");
        for node in self.nodes.iter_mut() {
            node.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
        self.nodes[root].grad.data[0] = 1.0;

        for id in (0..=root).rev() {
            let op = self.nodes[id].op.clone();
            if matches!(op, Op::Leaf) {
                continue;
            }
            let grad = std::mem::replace(&mut self.nodes[id].grad, Tensor::zeros(0, 0));
            if grad.data.iter().all(|g| *g == 0.0) {
                self.nodes[id].grad = grad;
                continue;
            }
            match op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    let (ar, ac) = self.nodes[a].value.shape();
                    let (_, bc) = self.nodes[b].value.shape();
                    // dA += dOut . B^T
                    for i in 0..ar {
                        for j in 0..bc {
                            let g = grad.data[i * bc + j];
                            if g == 0.0 {
                                continue;
                            }
                            for k in 0..ac {
                                let bv = self.nodes[b].value.data[k * bc + j];
                                self.nodes[a].grad.data[i * ac + k] += g * bv;
                            }
                        }
                    }
                    // dB += A^T . dOut
                    for k in 0..ac {
                        for i in 0..ar {
                            let av = self.nodes[a].value.data[i * ac + k];
                            if av == 0.0 {
                                continue;
                            }
                            for j in 0..bc {
                                self.nodes[b].grad.data[k * bc + j] += av * grad.data[i * bc + j];
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (g, d) in self.nodes[a].grad.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                    for (g, d) in self.nodes[b].grad.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                }
                Op::AddRow(a, row) => {
                    let (m, n) = self.nodes[a].value.shape();
                    for (g, d) in self.nodes[a].grad.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                    for r in 0..m {
                        for c in 0..n {
                            self.nodes[row].grad.data[c] += grad.data[r * n + c];
                        }
                    }
                }
                Op::AddCol(a, col) => {
                    let (m, n) = self.nodes[a].value.shape();
                    for (g, d) in self.nodes[a].grad.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                    for r in 0..m {
                        for c in 0..n {
                            self.nodes[col].grad.data[r] += grad.data[r * n + c];
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for i in 0..grad.data.len() {
                        let (av, bv) =
                            (self.nodes[a].value.data[i], self.nodes[b].value.data[i]);
                        self.nodes[a].grad.data[i] += grad.data[i] * bv;
                        self.nodes[b].grad.data[i] += grad.data[i] * av;
                    }
                }
                Op::Scale(a, factor) => {
                    for (g, d) in self.nodes[a].grad.data.iter_mut().zip(&grad.data) {
                        *g += factor * d;
                    }
                }
                Op::Sigmoid(a) => {
                    for i in 0..grad.data.len() {
                        let y = self.nodes[id].value.data[i];
                        self.nodes[a].grad.data[i] += grad.data[i] * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    for i in 0..grad.data.len() {
                        let y = self.nodes[id].value.data[i];
                        self.nodes[a].grad.data[i] += grad.data[i] * (1.0 - y * y);
                    }
                }
                Op::Relu(a) => {
                    for i in 0..grad.data.len() {
                        if self.nodes[a].value.data[i] > 0.0 {
                            self.nodes[a].grad.data[i] += grad.data[i];
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let cols = grad.cols;
                    let mut offset = 0;
                    for p in parts {
                        let (pr, pc) = self.nodes[p].value.shape();
                        for r in 0..pr {
                            for c in 0..pc {
                                self.nodes[p].grad.data[r * pc + c] +=
                                    grad.data[r * cols + offset + c];
                            }
                        }
                        offset += pc;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p].value.len();
                        for i in 0..len {
                            self.nodes[p].grad.data[i] += grad.data[offset + i];
                        }
                        offset += len;
                    }
                }
                Op::SliceCols(a, from, _to) => {
                    let n = self.nodes[a].value.cols;
                    let (gr, gc) = grad.shape();
                    for r in 0..gr {
                        for c in 0..gc {
                            self.nodes[a].grad.data[r * n + from + c] += grad.data[r * gc + c];
                        }
                    }
                }
                Op::SliceRows(a, from, _to) => {
                    let n = self.nodes[a].value.cols;
                    for (i, d) in grad.data.iter().enumerate() {
                        self.nodes[a].grad.data[from * n + i] += d;
                    }
                }
                Op::Transpose(a) => {
                    let (m, n) = self.nodes[a].value.shape();
                    for r in 0..m {
                        for c in 0..n {
                            self.nodes[a].grad.data[r * n + c] += grad.data[c * m + r];
                        }
                    }
                }
                Op::SoftmaxRows(a) => {
                    let (m, n) = grad.shape();
                    for r in 0..m {
                        let y = self.nodes[id].value.data[r * n..(r + 1) * n].to_vec();
                        let dy = &grad.data[r * n..(r + 1) * n];
                        let dot: f64 = y.iter().zip(dy).map(|(yi, di)| yi * di).sum();
                        for c in 0..n {
                            self.nodes[a].grad.data[r * n + c] += y[c] * (dy[c] - dot);
                        }
                    }
                }
                Op::LogSumExpCols(a) => {
                    let (m, n) = self.nodes[a].value.shape();
                    for c in 0..n {
                        let lse = self.nodes[id].value.data[c];
                        let d = grad.data[c];
                        if d == 0.0 {
                            continue;
                        }
                        for r in 0..m {
                            let w = (self.nodes[a].value.at(r, c) - lse).exp();
                            self.nodes[a].grad.data[r * n + c] += d * w;
                        }
                    }
                }
                Op::Sum(a) => {
                    let d = grad.data[0];
                    for g in self.nodes[a].grad.data.iter_mut() {
                        *g += d;
                    }
                }
                Op::Mean(a) => {
                    let d = grad.data[0] / self.nodes[a].value.len() as f64;
                    for g in self.nodes[a].grad.data.iter_mut() {
                        *g += d;
                    }
                }
                Op::Reshape(a) => {
                    for (g, d) in self.nodes[a].grad.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                }
                Op::Pick(a, r, c) => {
                    let n = self.nodes[a].value.cols;
                    self.nodes[a].grad.data[r * n + c] += grad.data[0];
                }
                Op::EmbedRows(table, indices) => {
                    let n = self.nodes[table].value.cols;
                    for (r, idx) in indices.iter().enumerate() {
                        for c in 0..n {
                            self.nodes[table].grad.data[idx * n + c] += grad.data[r * n + c];
                        }
                    }
                }
                Op::Conv1dSame { x, w, width } => {
                    let (t_len, e) = self.nodes[x].value.shape();
                    let f = self.nodes[w].value.cols;
                    let pad_left = (width - 1) / 2;
                    for t in 0..t_len {
                        for k in 0..width {
                            let src = t as isize + k as isize - pad_left as isize;
                            if src < 0 || src >= t_len as isize {
                                continue;
                            }
                            let src = src as usize;
                            for ein in 0..e {
                                let wrow = k * e + ein;
                                let xv = self.nodes[x].value.at(src, ein);
                                let mut dx = 0.0;
                                for fo in 0..f {
                                    let d = grad.data[t * f + fo];
                                    dx += d * self.nodes[w].value.at(wrow, fo);
                                    self.nodes[w].grad.data[wrow * f + fo] += d * xv;
                                }
                                self.nodes[x].grad.data[src * e + ein] += dx;
                            }
                        }
                    }
                }
                Op::CrossEntropy { logits, targets } => {
                    let (n, k) = self.nodes[logits].value.shape();
                    let d = grad.data[0] / n as f64;
                    for (r, t) in targets.iter().enumerate() {
                        let soft =
                            softmax_slice(&self.nodes[logits].value.data[r * k..(r + 1) * k]);
                        for c in 0..k {
                            let indicator = if c == *t { 1.0 } else { 0.0 };
                            self.nodes[logits].grad.data[r * k + c] +=
                                d * (soft[c] - indicator);
                        }
                    }
                }
            }
            self.nodes[id].grad = grad;
        }
    }

    /// Add each named leaf's gradient into the store.
    pub fn accumulate_grads(&self, store: &mut store::ParameterStore) {
        for node in &self.nodes {
            if let Some(name) = &node.param {
                store.add_grad(name, &node.grad);
            }
        }
    }
}

/// Worst relative error between analytic and central-difference gradients.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checks: usize,
    /// parameter, element index, analytic and numeric values at the worst
    /// coordinate, for diagnosing borderline disagreements
    pub worst: Option<(String, usize, f64, f64)>,
}

/// Compare analytic gradients against central differences for every
/// parameter in the store. `build` must deterministically construct the
/// same scalar loss from the current parameter values. At most
/// `max_per_tensor` evenly spaced elements are probed per tensor.
///
/// The relative-error denominator is floored at `1e-6` so coordinates
/// whose true gradient is numerically zero are compared in absolute
/// terms instead of amplifying finite-difference round-off.
pub fn grad_check<F>(
    store: &mut store::ParameterStore,
    build: F,
    eps: f64,
    max_per_tensor: usize,
) -> GradCheckReport
where
    F: Fn(&mut Graph, &store::ParameterStore) -> NodeId,
{
    let mut g = Graph::new();
    let loss = build(&mut g, store);
    g.backward(loss);
    store.zero_grads();
    g.accumulate_grads(store);

    let names: Vec<String> = store.names().map(str::to_string).collect();
    let mut report = GradCheckReport { max_rel_err: 0.0, checks: 0, worst: None };
    for name in names {
        let len = store.value(&name).unwrap().len();
        let stride = (len / max_per_tensor).max(1);
        for i in (0..len).step_by(stride) {
            let analytic = store.grad(&name).unwrap().data[i];
            let orig = store.value(&name).unwrap().data[i];

            store.value_mut(&name).unwrap().data[i] = orig + eps;
            let mut gp = Graph::new();
            let lp = build(&mut gp, store);
            let loss_p = gp.value(lp).data[0];

            store.value_mut(&name).unwrap().data[i] = orig - eps;
            let mut gm = Graph::new();
            let lm = build(&mut gm, store);
            let loss_m = gm.value(lm).data[0];

            store.value_mut(&name).unwrap().data[i] = orig;

            let numeric = (loss_p - loss_m) / (2.0 * eps);
            let rel = (analytic - numeric).abs()
                / analytic.abs().max(numeric.abs()).max(1e-6);
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((name.clone(), i, analytic, numeric));
            }
            report.checks += 1;
        }
    }
    report
}
