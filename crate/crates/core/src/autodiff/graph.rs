//! Reverse-mode automatic differentiation on an eager tape.
//!
//! Nodes are appended in construction order, so parents always precede
//! children and the reverse pass is a single backwards scan. Values are
//! computed when a node is created; `backward` only propagates adjoints.
//! All reductions run left to right, which makes forward and backward
//! passes bit-deterministic for identical inputs.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Neg(NodeId),
    AddScalar(NodeId),
    MulScalar(NodeId, f64),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    /// Row vector added to every row of a matrix.
    AddRow(NodeId, NodeId),
    /// Row vector multiplied into every row of a matrix.
    MulRow(NodeId, NodeId),
    /// `c[i][j] = a[i] - b[j]`.
    SubOuter(NodeId, NodeId),
    /// Single column of a matrix as a vector.
    Col(NodeId, usize),
    /// Columns `lo..hi` of a matrix.
    SliceCols(NodeId, usize, usize),
    Relu(NodeId),
    LeakyRelu(NodeId, f64),
    Sigmoid(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Softplus(NodeId),
    Abs(NodeId),
    Square(NodeId),
    SumAll(NodeId),
    MeanAll(NodeId),
    /// Sum over axis 1: `[m,n] -> [m]`.
    SumRows(NodeId),
    /// Sum over axis 0: `[m,n] -> [n]`.
    SumCols(NodeId),
    /// Log-sum-exp over axis 1, max-shifted for stability.
    LogSumExpRows(NodeId),
    /// Vector added to the diagonal of a square matrix.
    AddDiag(NodeId, NodeId),
    /// Diagonal of a square matrix as a vector.
    DiagOf(NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Tape of one forward computation.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // max(x, 0) + ln(1 + exp(-|x|))
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Leaf that receives no gradient (inputs, noise, targets).
    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf, false)
    }

    /// Leaf that participates in `backward` (trainable parameter).
    pub fn param(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf, true)
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.constant(Tensor::scalar(v))
    }

    fn unary<F: Fn(f64) -> f64>(&mut self, a: NodeId, op: Op, f: F) -> NodeId {
        let v = self.value(a);
        let data = v.data().iter().map(|&x| f(x)).collect();
        let t = Tensor::new(v.shape().to_vec(), data).expect("unary preserves shape");
        let needs = self.needs(a);
        self.push(t, op, needs)
    }

    fn binary_same_shape<F: Fn(f64, f64) -> f64>(
        &mut self,
        a: NodeId,
        b: NodeId,
        op: Op,
        f: F,
    ) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(
            va.shape(),
            vb.shape(),
            "elementwise op on mismatched shapes {:?} vs {:?}",
            va.shape(),
            vb.shape()
        );
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let t = Tensor::new(va.shape().to_vec(), data).expect("shape preserved");
        let needs = self.needs(a) || self.needs(b);
        self.push(t, op, needs)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Neg(a), |x| -x)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        self.unary(a, Op::AddScalar(a), |x| x + c)
    }

    pub fn mul_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        self.unary(a, Op::MulScalar(a, c), |x| x * c)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.rank(), 2, "matmul lhs must be rank 2");
        assert_eq!(vb.rank(), 2, "matmul rhs must be rank 2");
        let (m, k) = (va.rows(), va.cols());
        let (k2, n) = (vb.rows(), vb.cols());
        assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
        let mut out = vec![0.0; m * n];
        let (da, db) = (va.data(), vb.data());
        for i in 0..m {
            let arow = &da[i * k..(i + 1) * k];
            let crow = &mut out[i * n..(i + 1) * n];
            for (l, &av) in arow.iter().enumerate() {
                let brow = &db[l * n..(l + 1) * n];
                for (c, &bv) in crow.iter_mut().zip(brow) {
                    *c += av * bv;
                }
            }
        }
        let t = Tensor::new(vec![m, n], out).expect("matmul shape");
        let needs = self.needs(a) || self.needs(b);
        self.push(t, Op::MatMul(a, b), needs)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2, "transpose needs rank 2");
        let (m, n) = (va.rows(), va.cols());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = va.at(i, j);
            }
        }
        let t = Tensor::new(vec![n, m], out).expect("transpose shape");
        let needs = self.needs(a);
        self.push(t, Op::Transpose(a), needs)
    }

    pub fn add_row(&mut self, a: NodeId, r: NodeId) -> NodeId {
        let (va, vr) = (self.value(a), self.value(r));
        assert_eq!(va.rank(), 2);
        assert_eq!(vr.rank(), 1);
        assert_eq!(va.cols(), vr.len(), "add_row width mismatch");
        let (m, n) = (va.rows(), va.cols());
        let rd = vr.data();
        let mut out = va.data().to_vec();
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] += rd[j];
            }
        }
        let t = Tensor::new(vec![m, n], out).expect("shape");
        let needs = self.needs(a) || self.needs(r);
        self.push(t, Op::AddRow(a, r), needs)
    }

    pub fn mul_row(&mut self, a: NodeId, r: NodeId) -> NodeId {
        let (va, vr) = (self.value(a), self.value(r));
        assert_eq!(va.rank(), 2);
        assert_eq!(vr.rank(), 1);
        assert_eq!(va.cols(), vr.len(), "mul_row width mismatch");
        let (m, n) = (va.rows(), va.cols());
        let rd = vr.data();
        let mut out = va.data().to_vec();
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] *= rd[j];
            }
        }
        let t = Tensor::new(vec![m, n], out).expect("shape");
        let needs = self.needs(a) || self.needs(r);
        self.push(t, Op::MulRow(a, r), needs)
    }

    pub fn sub_outer(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.rank(), 1);
        assert_eq!(vb.rank(), 1);
        let (m, n) = (va.len(), vb.len());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = va.data()[i] - vb.data()[j];
            }
        }
        let t = Tensor::new(vec![m, n], out).expect("shape");
        let needs = self.needs(a) || self.needs(b);
        self.push(t, Op::SubOuter(a, b), needs)
    }

    pub fn col(&mut self, a: NodeId, j: usize) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        assert!(j < va.cols(), "column {j} out of range");
        let m = va.rows();
        let data = (0..m).map(|i| va.at(i, j)).collect();
        let needs = self.needs(a);
        self.push(Tensor::vector(data), Op::Col(a, j), needs)
    }

    pub fn slice_cols(&mut self, a: NodeId, lo: usize, hi: usize) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        assert!(lo < hi && hi <= va.cols(), "slice {lo}..{hi} out of range");
        let (m, w) = (va.rows(), hi - lo);
        let mut out = Vec::with_capacity(m * w);
        for i in 0..m {
            out.extend_from_slice(&va.row(i)[lo..hi]);
        }
        let t = Tensor::new(vec![m, w], out).expect("shape");
        let needs = self.needs(a);
        self.push(t, Op::SliceCols(a, lo, hi), needs)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        self.unary(
            a,
            Op::LeakyRelu(a, slope),
            |x| if x > 0.0 { x } else { slope * x },
        )
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Ln(a), f64::ln)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Softplus(a), softplus)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Abs(a), f64::abs)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        let needs = self.needs(a);
        self.push(Tensor::scalar(s), Op::SumAll(a), needs)
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let s: f64 = v.data().iter().sum();
        let n = v.len() as f64;
        let needs = self.needs(a);
        self.push(Tensor::scalar(s / n), Op::MeanAll(a), needs)
    }

    pub fn sum_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        let data = (0..va.rows()).map(|i| va.row(i).iter().sum()).collect();
        let needs = self.needs(a);
        self.push(Tensor::vector(data), Op::SumRows(a), needs)
    }

    pub fn sum_cols(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        let (m, n) = (va.rows(), va.cols());
        let mut out = vec![0.0; n];
        for i in 0..m {
            for (j, o) in out.iter_mut().enumerate() {
                *o += va.at(i, j);
            }
        }
        let needs = self.needs(a);
        self.push(Tensor::vector(out), Op::SumCols(a), needs)
    }

    pub fn logsumexp_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        let data = (0..va.rows())
            .map(|i| {
                let row = va.row(i);
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = row.iter().map(|&x| (x - mx).exp()).sum();
                mx + s.ln()
            })
            .collect();
        let needs = self.needs(a);
        self.push(Tensor::vector(data), Op::LogSumExpRows(a), needs)
    }

    pub fn add_diag(&mut self, a: NodeId, v: NodeId) -> NodeId {
        let (va, vv) = (self.value(a), self.value(v));
        assert_eq!(va.rank(), 2);
        assert_eq!(va.rows(), va.cols(), "add_diag needs a square matrix");
        assert_eq!(va.rows(), vv.len());
        let n = va.rows();
        let mut out = va.data().to_vec();
        for i in 0..n {
            out[i * n + i] += vv.data()[i];
        }
        let t = Tensor::new(vec![n, n], out).expect("shape");
        let needs = self.needs(a) || self.needs(v);
        self.push(t, Op::AddDiag(a, v), needs)
    }

    pub fn diag_of(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert_eq!(va.rank(), 2);
        assert_eq!(va.rows(), va.cols(), "diag_of needs a square matrix");
        let data = (0..va.rows()).map(|i| va.at(i, i)).collect();
        let needs = self.needs(a);
        self.push(Tensor::vector(data), Op::DiagOf(a), needs)
    }

    /// Adjoints of `loss` with respect to every grad-requiring node.
    ///
    /// Nodes off every path to the loss keep a zero gradient.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(Error::usage(format!(
                "backward requires a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            if grads[idx].is_none() || !self.nodes[idx].needs_grad {
                continue;
            }
            let g = grads[idx].take().expect("present");
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], target: NodeId, delta: Tensor) {
        if !self.nodes[target.0].needs_grad {
            return;
        }
        match &mut grads[target.0] {
            Some(t) => {
                for (a, b) in t.data_mut().iter_mut().zip(delta.data()) {
                    *a += b;
                }
            }
            slot => *slot = Some(delta),
        }
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, a, g.clone());
                self.accumulate(grads, b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, a, g.clone());
                let mut d = g.clone();
                d.data_mut().iter_mut().for_each(|x| *x = -*x);
                self.accumulate(grads, b, d);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(a), self.value(b));
                let da = zip_map(g, vb, |gi, bi| gi * bi);
                let db = zip_map(g, va, |gi, ai| gi * ai);
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
            Op::Neg(a) => {
                let mut d = g.clone();
                d.data_mut().iter_mut().for_each(|x| *x = -*x);
                self.accumulate(grads, a, d);
            }
            Op::AddScalar(a) => self.accumulate(grads, a, g.clone()),
            Op::MulScalar(a, c) => {
                let mut d = g.clone();
                d.data_mut().iter_mut().for_each(|x| *x *= c);
                self.accumulate(grads, a, d);
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(a), self.value(b));
                let (m, k) = (va.rows(), va.cols());
                let n = vb.cols();
                // da = g @ b^T
                if self.nodes[a.0].needs_grad {
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        let grow = &g.data()[i * n..(i + 1) * n];
                        let darow = &mut da[i * k..(i + 1) * k];
                        for (l, d) in darow.iter_mut().enumerate() {
                            let brow = &vb.data()[l * n..(l + 1) * n];
                            let mut acc = 0.0;
                            for (gv, bv) in grow.iter().zip(brow) {
                                acc += gv * bv;
                            }
                            *d += acc;
                        }
                    }
                    self.accumulate(grads, a, Tensor::new(vec![m, k], da).expect("shape"));
                }
                // db = a^T @ g
                if self.nodes[b.0].needs_grad {
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let grow = &g.data()[i * n..(i + 1) * n];
                        let arow = &va.data()[i * k..(i + 1) * k];
                        for (l, &av) in arow.iter().enumerate() {
                            let dbrow = &mut db[l * n..(l + 1) * n];
                            for (d, gv) in dbrow.iter_mut().zip(grow) {
                                *d += av * gv;
                            }
                        }
                    }
                    self.accumulate(grads, b, Tensor::new(vec![k, n], db).expect("shape"));
                }
            }
            Op::Transpose(a) => {
                let (n, m) = (g.rows(), g.cols());
                let mut d = vec![0.0; m * n];
                for i in 0..n {
                    for j in 0..m {
                        d[j * n + i] = g.at(i, j);
                    }
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], d).expect("shape"));
            }
            Op::AddRow(a, r) => {
                self.accumulate(grads, a, g.clone());
                if self.nodes[r.0].needs_grad {
                    let (m, n) = (g.rows(), g.cols());
                    let mut dr = vec![0.0; n];
                    for i in 0..m {
                        for (j, d) in dr.iter_mut().enumerate() {
                            *d += g.at(i, j);
                        }
                    }
                    self.accumulate(grads, r, Tensor::vector(dr));
                }
            }
            Op::MulRow(a, r) => {
                let (va, vr) = (self.value(a), self.value(r));
                let (m, n) = (g.rows(), g.cols());
                if self.nodes[a.0].needs_grad {
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] = g.at(i, j) * vr.data()[j];
                        }
                    }
                    self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
                }
                if self.nodes[r.0].needs_grad {
                    let mut dr = vec![0.0; n];
                    for i in 0..m {
                        for (j, d) in dr.iter_mut().enumerate() {
                            *d += g.at(i, j) * va.at(i, j);
                        }
                    }
                    self.accumulate(grads, r, Tensor::vector(dr));
                }
            }
            Op::SubOuter(a, b) => {
                let (m, n) = (g.rows(), g.cols());
                if self.nodes[a.0].needs_grad {
                    let da = (0..m).map(|i| g.row(i).iter().sum()).collect();
                    self.accumulate(grads, a, Tensor::vector(da));
                }
                if self.nodes[b.0].needs_grad {
                    let mut db = vec![0.0; n];
                    for i in 0..m {
                        for (j, d) in db.iter_mut().enumerate() {
                            *d -= g.at(i, j);
                        }
                    }
                    self.accumulate(grads, b, Tensor::vector(db));
                }
            }
            Op::Col(a, j) => {
                let va = self.value(a);
                let (m, n) = (va.rows(), va.cols());
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    da[i * n + j] = g.data()[i];
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
            }
            Op::SliceCols(a, lo, _hi) => {
                let va = self.value(a);
                let (m, n, w) = (va.rows(), va.cols(), g.cols());
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..w {
                        da[i * n + lo + j] = g.at(i, j);
                    }
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
            }
            Op::Relu(a) => {
                let va = self.value(a);
                let d = zip_map(g, va, |gi, ai| if ai > 0.0 { gi } else { 0.0 });
                self.accumulate(grads, a, d);
            }
            Op::LeakyRelu(a, s) => {
                let va = self.value(a);
                let d = zip_map(g, va, |gi, ai| if ai > 0.0 { gi } else { s * gi });
                self.accumulate(grads, a, d);
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                let d = zip_map(g, y, |gi, yi| gi * yi * (1.0 - yi));
                self.accumulate(grads, a, d);
            }
            Op::Exp(a) => {
                let y = &node.value;
                let d = zip_map(g, y, |gi, yi| gi * yi);
                self.accumulate(grads, a, d);
            }
            Op::Ln(a) => {
                let va = self.value(a);
                let d = zip_map(g, va, |gi, ai| gi / ai);
                self.accumulate(grads, a, d);
            }
            Op::Softplus(a) => {
                let va = self.value(a);
                let d = zip_map(g, va, |gi, ai| gi * sigmoid(ai));
                self.accumulate(grads, a, d);
            }
            Op::Abs(a) => {
                let va = self.value(a);
                // Subgradient 0 at the kink.
                let d = zip_map(g, va, |gi, ai| {
                    if ai > 0.0 {
                        gi
                    } else if ai < 0.0 {
                        -gi
                    } else {
                        0.0
                    }
                });
                self.accumulate(grads, a, d);
            }
            Op::Square(a) => {
                let va = self.value(a);
                let d = zip_map(g, va, |gi, ai| 2.0 * ai * gi);
                self.accumulate(grads, a, d);
            }
            Op::SumAll(a) => {
                let va = self.value(a);
                let g0 = g.scalar_value();
                let d = Tensor::new(va.shape().to_vec(), vec![g0; va.len()]).expect("shape");
                self.accumulate(grads, a, d);
            }
            Op::MeanAll(a) => {
                let va = self.value(a);
                let g0 = g.scalar_value() / va.len() as f64;
                let d = Tensor::new(va.shape().to_vec(), vec![g0; va.len()]).expect("shape");
                self.accumulate(grads, a, d);
            }
            Op::SumRows(a) => {
                let va = self.value(a);
                let (m, n) = (va.rows(), va.cols());
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    let gi = g.data()[i];
                    for j in 0..n {
                        da[i * n + j] = gi;
                    }
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
            }
            Op::SumCols(a) => {
                let va = self.value(a);
                let (m, n) = (va.rows(), va.cols());
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        da[i * n + j] = g.data()[j];
                    }
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
            }
            Op::LogSumExpRows(a) => {
                let va = self.value(a);
                let y = &node.value;
                let (m, n) = (va.rows(), va.cols());
                let mut da = vec![0.0; m * n];
                for i in 0..m {
                    let gi = g.data()[i];
                    let yi = y.data()[i];
                    for j in 0..n {
                        da[i * n + j] = gi * (va.at(i, j) - yi).exp();
                    }
                }
                self.accumulate(grads, a, Tensor::new(vec![m, n], da).expect("shape"));
            }
            Op::AddDiag(a, v) => {
                self.accumulate(grads, a, g.clone());
                if self.nodes[v.0].needs_grad {
                    let n = g.rows();
                    let dv = (0..n).map(|i| g.at(i, i)).collect();
                    self.accumulate(grads, v, Tensor::vector(dv));
                }
            }
            Op::DiagOf(a) => {
                let va = self.value(a);
                let n = va.rows();
                let mut da = vec![0.0; n * n];
                for i in 0..n {
                    da[i * n + i] = g.data()[i];
                }
                self.accumulate(grads, a, Tensor::new(vec![n, n], da).expect("shape"));
            }
        }
    }
}

fn zip_map<F: Fn(f64, f64) -> f64>(g: &Tensor, other: &Tensor, f: F) -> Tensor {
    debug_assert_eq!(g.shape(), other.shape());
    let data = g
        .data()
        .iter()
        .zip(other.data())
        .map(|(&a, &b)| f(a, b))
        .collect();
    Tensor::new(g.shape().to_vec(), data).expect("shape preserved")
}

/// Per-node adjoints produced by [`Graph::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `id`; exact zeros for disconnected nodes.
    pub fn wrt(&self, graph: &Graph, id: NodeId) -> Tensor {
        match &self.grads[id.0] {
            Some(t) => t.clone(),
            None => Tensor::zeros(graph.value(id).shape().to_vec()),
        }
    }

    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }
}
