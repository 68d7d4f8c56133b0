//! Reverse-mode automatic differentiation over real matrices.
//!
//! A [`Tape`] records matrix-valued operations; [`Tape::backward`] walks the
//! record in reverse and accumulates gradients. Complex-valued operator
//! applications are expressed as pairs of real sparse products before they
//! reach the tape, so every recorded value and gradient is a real matrix.

use std::rc::Rc;

use crate::sparse::SparseRealMatrix;
use crate::{Error, Result};

/// Dense row-major real matrix (rank at most 2; vectors are 1-row or 1-column).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::from_vec(1, 1, vec![v])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Tensor::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for j in 0..other.cols {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorRef(usize);

enum Op {
    Leaf,
    MatMul(TensorRef, TensorRef),
    Add(TensorRef, TensorRef),
    Sub(TensorRef, TensorRef),
    /// Broadcast-add a 1-by-k bias row to every row.
    AddRowBias(TensorRef, TensorRef),
    Scale(TensorRef, f64),
    Hadamard(TensorRef, TensorRef),
    Tanh(TensorRef),
    Relu(TensorRef),
    Abs(TensorRef),
    /// y = S x with a constant sparse matrix S.
    Spmm(Rc<SparseRealMatrix>, TensorRef),
    /// y = S^T x with a constant sparse matrix S.
    SpmmT(Rc<SparseRealMatrix>, TensorRef),
    HCat(TensorRef, TensorRef),
    Narrow(TensorRef, usize, usize),
    /// Elementwise multiply by a fixed mask (dropout keep-mask, already scaled).
    MulMask(TensorRef, Vec<f64>),
    /// Mean squared error over masked rows; target and row mask are constants.
    MaskedMse(TensorRef, Rc<Tensor>, Rc<Vec<f64>>),
    /// Binary cross-entropy with logits over masked rows.
    MaskedBceLogits(TensorRef, Rc<Tensor>, Rc<Vec<f64>>),
}

struct Node {
    op: Op,
    value: Tensor,
}

/// A single-threaded record of matrix operations.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> TensorRef {
        self.nodes.push(Node { op, value });
        TensorRef(self.nodes.len() - 1)
    }

    pub fn value(&self, r: TensorRef) -> &Tensor {
        &self.nodes[r.0].value
    }

    /// Record an input (leaf). Leaves receive gradients.
    pub fn leaf(&mut self, value: Tensor) -> TensorRef {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: TensorRef, b: TensorRef) -> TensorRef {
        let value = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), value)
    }

    pub fn add(&mut self, a: TensorRef, b: TensorRef) -> TensorRef {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!((ta.rows, ta.cols), (tb.rows, tb.cols), "add shape mismatch");
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Add(a, b), value)
    }

    pub fn sub(&mut self, a: TensorRef, b: TensorRef) -> TensorRef {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!((ta.rows, ta.cols), (tb.rows, tb.cols), "sub shape mismatch");
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x - y).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Sub(a, b), value)
    }

    pub fn add_row_bias(&mut self, a: TensorRef, bias: TensorRef) -> TensorRef {
        let (ta, tb) = (self.value(a), self.value(bias));
        assert_eq!(tb.rows, 1, "bias must be a row vector");
        assert_eq!(ta.cols, tb.cols, "bias width mismatch");
        let mut value = ta.clone();
        for r in 0..value.rows {
            for c in 0..value.cols {
                value.data[r * value.cols + c] += tb.data[c];
            }
        }
        self.push(Op::AddRowBias(a, bias), value)
    }

    pub fn scale(&mut self, a: TensorRef, factor: f64) -> TensorRef {
        let ta = self.value(a);
        let data = ta.data.iter().map(|x| x * factor).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Scale(a, factor), value)
    }

    pub fn hadamard(&mut self, a: TensorRef, b: TensorRef) -> TensorRef {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(
            (ta.rows, ta.cols),
            (tb.rows, tb.cols),
            "hadamard shape mismatch"
        );
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Hadamard(a, b), value)
    }

    pub fn tanh(&mut self, a: TensorRef) -> TensorRef {
        let ta = self.value(a);
        let data = ta.data.iter().map(|x| x.tanh()).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Tanh(a), value)
    }

    pub fn relu(&mut self, a: TensorRef) -> TensorRef {
        let ta = self.value(a);
        let data = ta.data.iter().map(|x| x.max(0.0)).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Relu(a), value)
    }

    pub fn abs(&mut self, a: TensorRef) -> TensorRef {
        let ta = self.value(a);
        let data = ta.data.iter().map(|x| x.abs()).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::Abs(a), value)
    }

    pub fn spmm(&mut self, s: Rc<SparseRealMatrix>, a: TensorRef) -> TensorRef {
        let ta = self.value(a);
        assert_eq!(s.cols(), ta.rows, "spmm shape mismatch");
        let mut value = Tensor::zeros(s.rows(), ta.cols);
        s.apply(&ta.data, ta.cols, &mut value.data);
        self.push(Op::Spmm(s, a), value)
    }

    pub fn spmm_t(&mut self, s: Rc<SparseRealMatrix>, a: TensorRef) -> TensorRef {
        let ta = self.value(a);
        assert_eq!(s.rows(), ta.rows, "spmm_t shape mismatch");
        let mut value = Tensor::zeros(s.cols(), ta.cols);
        s.apply_transpose_add(&ta.data, ta.cols, &mut value.data);
        self.push(Op::SpmmT(s, a), value)
    }

    pub fn hcat(&mut self, a: TensorRef, b: TensorRef) -> TensorRef {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.rows, tb.rows, "hcat row mismatch");
        let cols = ta.cols + tb.cols;
        let mut value = Tensor::zeros(ta.rows, cols);
        for r in 0..ta.rows {
            value.data[r * cols..r * cols + ta.cols]
                .copy_from_slice(&ta.data[r * ta.cols..(r + 1) * ta.cols]);
            value.data[r * cols + ta.cols..(r + 1) * cols]
                .copy_from_slice(&tb.data[r * tb.cols..(r + 1) * tb.cols]);
        }
        self.push(Op::HCat(a, b), value)
    }

    pub fn narrow(&mut self, a: TensorRef, start: usize, len: usize) -> TensorRef {
        let ta = self.value(a);
        assert!(start + len <= ta.cols, "narrow out of range");
        let mut value = Tensor::zeros(ta.rows, len);
        for r in 0..ta.rows {
            value.data[r * len..(r + 1) * len]
                .copy_from_slice(&ta.data[r * ta.cols + start..r * ta.cols + start + len]);
        }
        self.push(Op::Narrow(a, start, len), value)
    }

    /// Elementwise multiply by a fixed mask. Dropout passes a keep-mask whose
    /// surviving entries are already scaled by `1/(1-p)`.
    pub fn mul_mask(&mut self, a: TensorRef, mask: Vec<f64>) -> TensorRef {
        let ta = self.value(a);
        assert_eq!(mask.len(), ta.data.len(), "mask length mismatch");
        let data = ta.data.iter().zip(&mask).map(|(x, m)| x * m).collect();
        let value = Tensor::from_vec(ta.rows, ta.cols, data);
        self.push(Op::MulMask(a, mask), value)
    }

    /// Mean over masked rows of the squared error. `mask` holds one 0/1 flag
    /// per row and must select at least one row.
    pub fn masked_mse(&mut self, pred: TensorRef, target: Rc<Tensor>, mask: Rc<Vec<f64>>) -> TensorRef {
        let tp = self.value(pred);
        assert_eq!((tp.rows, tp.cols), (target.rows, target.cols));
        assert_eq!(mask.len(), tp.rows);
        let count: f64 = mask.iter().sum::<f64>() * tp.cols as f64;
        assert!(count > 0.0, "masked_mse: empty mask");
        let mut acc = 0.0;
        for r in 0..tp.rows {
            if mask[r] == 0.0 {
                continue;
            }
            for c in 0..tp.cols {
                let d = tp.data[r * tp.cols + c] - target.data[r * tp.cols + c];
                acc += d * d;
            }
        }
        let value = Tensor::scalar(acc / count);
        self.push(Op::MaskedMse(pred, target, mask), value)
    }

    /// Mean over masked rows of the logistic loss on logits.
    pub fn masked_bce_logits(
        &mut self,
        logits: TensorRef,
        labels: Rc<Tensor>,
        mask: Rc<Vec<f64>>,
    ) -> TensorRef {
        let tz = self.value(logits);
        assert_eq!((tz.rows, tz.cols), (labels.rows, labels.cols));
        assert_eq!(mask.len(), tz.rows);
        let count: f64 = mask.iter().sum::<f64>() * tz.cols as f64;
        assert!(count > 0.0, "masked_bce_logits: empty mask");
        let mut acc = 0.0;
        for r in 0..tz.rows {
            if mask[r] == 0.0 {
                continue;
            }
            for c in 0..tz.cols {
                let z = tz.data[r * tz.cols + c];
                let y = labels.data[r * tz.cols + c];
                // stable form of y*softplus(-z) + (1-y)*softplus(z)
                acc += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            }
        }
        let value = Tensor::scalar(acc / count);
        self.push(Op::MaskedBceLogits(logits, labels, mask), value)
    }

    /// Reverse sweep from a scalar loss. Returns one gradient slot per node;
    /// only nodes on a path to the loss have a gradient.
    pub fn backward(&self, loss: TensorRef) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.rows != 1 || lt.cols != 1 {
            return Err(Error::Dimension(format!(
                "backward needs a scalar loss, got {}x{}",
                lt.rows, lt.cols
            )));
        }
        if !lt.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let gy = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(gy);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = gy.matmul(&self.value(*b).transpose());
                    let gb = self.value(*a).transpose().matmul(&gy);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, gy.clone());
                    accumulate(&mut grads, *b, gy);
                }
                Op::Sub(a, b) => {
                    let mut neg = gy.clone();
                    for v in neg.data.iter_mut() {
                        *v = -*v;
                    }
                    accumulate(&mut grads, *a, gy);
                    accumulate(&mut grads, *b, neg);
                }
                Op::AddRowBias(a, bias) => {
                    let width = gy.cols;
                    let mut gb = Tensor::zeros(1, width);
                    for r in 0..gy.rows {
                        for c in 0..width {
                            gb.data[c] += gy.data[r * width + c];
                        }
                    }
                    accumulate(&mut grads, *a, gy);
                    accumulate(&mut grads, *bias, gb);
                }
                Op::Scale(a, factor) => {
                    let mut ga = gy;
                    for v in ga.data.iter_mut() {
                        *v *= factor;
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Hadamard(a, b) => {
                    let tb = self.value(*b);
                    let ta = self.value(*a);
                    let ga_data = gy.data.iter().zip(&tb.data).map(|(g, x)| g * x).collect();
                    let gb_data = gy.data.iter().zip(&ta.data).map(|(g, x)| g * x).collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(gy.rows, gy.cols, ga_data));
                    accumulate(&mut grads, *b, Tensor::from_vec(gy.rows, gy.cols, gb_data));
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let data = gy
                        .data
                        .iter()
                        .zip(&y.data)
                        .map(|(g, t)| g * (1.0 - t * t))
                        .collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(gy.rows, gy.cols, data));
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let data = gy
                        .data
                        .iter()
                        .zip(&x.data)
                        .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(gy.rows, gy.cols, data));
                }
                Op::Abs(a) => {
                    let x = self.value(*a);
                    let data = gy
                        .data
                        .iter()
                        .zip(&x.data)
                        .map(|(g, v)| g * v.signum() * if *v == 0.0 { 0.0 } else { 1.0 })
                        .collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(gy.rows, gy.cols, data));
                }
                Op::Spmm(s, a) => {
                    let ta = self.value(*a);
                    let mut ga = Tensor::zeros(ta.rows, ta.cols);
                    s.apply_transpose_add(&gy.data, gy.cols, &mut ga.data);
                    accumulate(&mut grads, *a, ga);
                }
                Op::SpmmT(s, a) => {
                    let ta = self.value(*a);
                    let mut ga = Tensor::zeros(ta.rows, ta.cols);
                    s.apply(&gy.data, gy.cols, &mut ga.data);
                    accumulate(&mut grads, *a, ga);
                }
                Op::HCat(a, b) => {
                    let wa = self.value(*a).cols;
                    let wb = self.value(*b).cols;
                    let mut ga = Tensor::zeros(gy.rows, wa);
                    let mut gb = Tensor::zeros(gy.rows, wb);
                    for r in 0..gy.rows {
                        ga.data[r * wa..(r + 1) * wa]
                            .copy_from_slice(&gy.data[r * gy.cols..r * gy.cols + wa]);
                        gb.data[r * wb..(r + 1) * wb]
                            .copy_from_slice(&gy.data[r * gy.cols + wa..(r + 1) * gy.cols]);
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Narrow(a, start, len) => {
                    let ta = self.value(*a);
                    let mut ga = Tensor::zeros(ta.rows, ta.cols);
                    for r in 0..gy.rows {
                        ga.data[r * ta.cols + start..r * ta.cols + start + len]
                            .copy_from_slice(&gy.data[r * len..(r + 1) * len]);
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::MulMask(a, mask) => {
                    let data = gy.data.iter().zip(mask).map(|(g, m)| g * m).collect();
                    accumulate(&mut grads, *a, Tensor::from_vec(gy.rows, gy.cols, data));
                }
                Op::MaskedMse(pred, target, mask) => {
                    let tp = self.value(*pred);
                    let count: f64 = mask.iter().sum::<f64>() * tp.cols as f64;
                    let upstream = gy.data[0];
                    let mut gp = Tensor::zeros(tp.rows, tp.cols);
                    for r in 0..tp.rows {
                        if mask[r] == 0.0 {
                            continue;
                        }
                        for c in 0..tp.cols {
                            let d = tp.data[r * tp.cols + c] - target.data[r * tp.cols + c];
                            gp.data[r * tp.cols + c] = upstream * 2.0 * d / count;
                        }
                    }
                    accumulate(&mut grads, *pred, gp);
                }
                Op::MaskedBceLogits(pred, labels, mask) => {
                    let tz = self.value(*pred);
                    let count: f64 = mask.iter().sum::<f64>() * tz.cols as f64;
                    let upstream = gy.data[0];
                    let mut gp = Tensor::zeros(tz.rows, tz.cols);
                    for r in 0..tz.rows {
                        if mask[r] == 0.0 {
                            continue;
                        }
                        for c in 0..tz.cols {
                            let z = tz.data[r * tz.cols + c];
                            let y = labels.data[r * tz.cols + c];
                            let sig = 1.0 / (1.0 + (-z).exp());
                            gp.data[r * tz.cols + c] = upstream * (sig - y) / count;
                        }
                    }
                    accumulate(&mut grads, *pred, gp);
                }
            }
        }
        for (i, g) in grads.iter().enumerate() {
            if let Some(t) = g {
                if !t.is_finite() {
                    return Err(Error::NonFinite(format!("gradient of node {}", i)));
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], r: TensorRef, g: Tensor) {
    match &mut grads[r.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Gradients produced by a backward sweep.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, r: TensorRef) -> Option<&Tensor> {
        self.grads[r.0].as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64], tol: f64) {
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            xp[i] += h;
            let fp = f(&xp);
            xp[i] -= 2.0 * h;
            let fm = f(&xp);
            let fd = (fp - fm) / (2.0 * h);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-8);
            assert!(
                ((analytic[i] - fd) / denom).abs() < tol,
                "entry {}: analytic {} vs fd {}",
                i,
                analytic[i],
                fd
            );
        }
    }

    #[test]
    fn tanh_gradient_at_zero_is_one() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(0.0));
        let y = tape.tanh(x);
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().data[0], 1.0);
    }

    #[test]
    fn quadratic_form_gradient_matches_closed_form() {
        // loss = ||W x||^2; dL/dW = 2 (W x) x^T
        let w = Tensor::from_vec(2, 2, vec![1.0, -0.5, 0.3, 2.0]);
        let x = Tensor::from_vec(2, 1, vec![0.7, -1.2]);
        let mut tape = Tape::new();
        let wr = tape.leaf(w.clone());
        let xr = tape.leaf(x.clone());
        let y = tape.matmul(wr, xr);
        let target = Rc::new(Tensor::zeros(2, 1));
        let mask = Rc::new(vec![1.0, 1.0]);
        let loss = tape.masked_mse(y, target, mask);
        let grads = tape.backward(loss).unwrap();
        // masked_mse averages over 2 rows, so dL/dW = 2(Wx)x^T / 2 = (Wx)x^T
        let wx = w.matmul(&x);
        let want = wx.matmul(&x.transpose());
        let got = grads.get(wr).unwrap();
        for (a, b) in got.data.iter().zip(&want.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_graph_matches_finite_differences() {
        let s = Rc::new(SparseRealMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 0, -2.0), (1, 1, 0.5), (2, 1, 3.0)],
        ));
        let x0 = vec![0.3, -0.7, 1.1, 0.4];
        let target = Rc::new(Tensor::from_vec(3, 1, vec![0.1, -0.2, 0.5]));
        let mask = Rc::new(vec![1.0, 0.0, 1.0]);

        let run = |vals: &[f64]| -> (f64, Vec<f64>) {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::from_vec(2, 2, vals.to_vec()));
            let sx = tape.spmm(s.clone(), x); // 3x2
            let t = tape.tanh(sx);
            let a = tape.narrow(t, 0, 1);
            let b = tape.narrow(t, 1, 1);
            let h = tape.hadamard(a, b);
            let ab = tape.abs(h);
            let r = tape.relu(ab);
            let loss = tape.masked_mse(r, target.clone(), mask.clone());
            let grads = tape.backward(loss).unwrap();
            (
                tape.value(loss).data[0],
                grads.get(x).unwrap().data.clone(),
            )
        };
        let (_, analytic) = run(&x0);
        fd_check(|v| run(v).0, &x0, &analytic, 1e-4);
    }

    #[test]
    fn bce_logits_gradient_matches_finite_differences() {
        let labels = Rc::new(Tensor::from_vec(3, 1, vec![1.0, 0.0, 1.0]));
        let mask = Rc::new(vec![1.0, 1.0, 0.0]);
        let z0 = vec![0.3, -1.5, 2.0];
        let run = |vals: &[f64]| -> (f64, Vec<f64>) {
            let mut tape = Tape::new();
            let z = tape.leaf(Tensor::from_vec(3, 1, vals.to_vec()));
            let loss = tape.masked_bce_logits(z, labels.clone(), mask.clone());
            let grads = tape.backward(loss).unwrap();
            (
                tape.value(loss).data[0],
                grads.get(z).unwrap().data.clone(),
            )
        };
        let (_, analytic) = run(&z0);
        fd_check(|v| run(v).0, &z0, &analytic, 1e-4);
        // masked-out row gets zero gradient
        assert_eq!(analytic[2], 0.0);
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(2, 1));
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(f64::NAN));
        assert!(matches!(tape.backward(x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn hcat_narrow_roundtrip_gradients() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::from_vec(2, 1, vec![1.0, 2.0]));
        let b = tape.leaf(Tensor::from_vec(2, 1, vec![3.0, 4.0]));
        let cat = tape.hcat(a, b);
        let right = tape.narrow(cat, 1, 1);
        let target = Rc::new(Tensor::zeros(2, 1));
        let mask = Rc::new(vec![1.0, 1.0]);
        let loss = tape.masked_mse(right, target, mask);
        let grads = tape.backward(loss).unwrap();
        // only b feeds the loss; a sees a zero gradient through the concat
        let ga = grads.get(a).unwrap();
        assert!(ga.data.iter().all(|&v| v == 0.0));
        let gb = grads.get(b).unwrap();
        assert!((gb.data[0] - 3.0).abs() < 1e-12);
        assert!((gb.data[1] - 4.0).abs() < 1e-12);
    }
}
