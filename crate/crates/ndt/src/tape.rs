//! Define-by-run gradient tape.
//!
//! Nodes are appended in topological order (an op's inputs always precede
//! it), so the backward sweep is a single reverse pass that visits each
//! node exactly once. A tape is single-threaded; independent tapes may run
//! on independent threads.

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::{NdtError, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op<S> {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    /// alpha * x + beta, element-wise.
    Affine(Var, S, S),
    MatMul(Var, Var),
    /// [n,m] + [m], broadcast over rows.
    BiasAdd(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    ConcatCols(Var, Var),
    Conv1d {
        input: Var,
        kernel: Var,
        stride: usize,
    },
    /// Global max over time rows `0..valid`; `argmax` holds the winning row
    /// per channel (first occurrence on ties).
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    Embedding {
        table: Var,
        indices: Vec<usize>,
    },
    GatherRows {
        input: Var,
        rows: Vec<usize>,
    },
    StackRows(Vec<Var>),
    Reshape(Var),
    /// Mean binary cross-entropy on logits against constant labels.
    LogisticLossMean {
        logits: Var,
        labels: Vec<S>,
    },
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

/// Gradients of one backward pass, indexed by [`Var`].
pub struct Grads<S> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Grads<S> {
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Introduces a leaf node (input or parameter).
    pub fn input(&mut self, value: Tensor<S>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("add", ta.shape(), tb.shape()));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data().iter())
            .map(|(&x, &y)| x + y)
            .collect();
        let value = Tensor::from_vec(ta.shape(), data).unwrap();
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("mul", ta.shape(), tb.shape()));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data().iter())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::from_vec(ta.shape(), data).unwrap();
        Ok(self.push(value, Op::Mul(a, b)))
    }

    /// `alpha * x + beta`, element-wise. Covers negation (`-1, 0`) and
    /// one-minus (`-1, 1`).
    pub fn affine(&mut self, a: Var, alpha: f64, beta: f64) -> Var {
        let (al, be) = (S::from_f64(alpha), S::from_f64(beta));
        let value = self.value(a).map(|x| al * x + be);
        self.push(value, Op::Affine(a, al, be))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let nb = self.affine(b, -1.0, 0.0);
        self.add(a, nb)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(shape_err("matmul", ta.shape(), tb.shape()));
        }
        let (n, k, m) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![S::zero(); n * m];
        matmul_into(ta.data(), tb.data(), &mut out, n, k, m, false, false);
        let value = Tensor::from_vec(&[n, m], out).unwrap();
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn bias_add(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        if ta.rank() != 2 || tb.rank() != 1 || ta.shape()[1] != tb.shape()[0] {
            return Err(shape_err("bias_add", ta.shape(), tb.shape()));
        }
        let m = tb.shape()[0];
        let mut data = ta.data().to_vec();
        for row in data.chunks_mut(m) {
            for (x, b) in row.iter_mut().zip(tb.data()) {
                *x = *x + *b;
            }
        }
        let value = Tensor::from_vec(ta.shape(), data).unwrap();
        Ok(self.push(value, Op::BiasAdd(a, bias)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| if x > S::zero() { x } else { S::zero() });
        self.push(value, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid_scalar);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.tanh());
        self.push(value, Op::Tanh(a))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[0] != tb.shape()[0] {
            return Err(shape_err("concat_cols", ta.shape(), tb.shape()));
        }
        let (n, p, q) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut data = Vec::with_capacity(n * (p + q));
        for i in 0..n {
            data.extend_from_slice(ta.row(i));
            data.extend_from_slice(tb.row(i));
        }
        let value = Tensor::from_vec(&[n, p + q], data).unwrap();
        Ok(self.push(value, Op::ConcatCols(a, b)))
    }

    /// Valid 1-D convolution: input `[time, in_ch]`, kernel
    /// `[width, in_ch, out_ch]`, output `[out_time, out_ch]` with
    /// `out_time = (time - width) / stride + 1`.
    pub fn conv1d(&mut self, input: Var, kernel: Var, stride: usize) -> Result<Var> {
        let (ti, tk) = (self.value(input), self.value(kernel));
        if ti.rank() != 2 || tk.rank() != 3 || ti.shape()[1] != tk.shape()[1] {
            return Err(shape_err("conv1d", ti.shape(), tk.shape()));
        }
        if stride == 0 {
            return Err(NdtError::InvalidShape {
                op: "conv1d stride 0",
                shape: vec![],
            });
        }
        let (time, in_ch) = (ti.shape()[0], ti.shape()[1]);
        let (width, out_ch) = (tk.shape()[0], tk.shape()[2]);
        if time < width {
            return Err(NdtError::SequenceTooShort { time, width });
        }
        let out_time = (time - width) / stride + 1;
        let mut out = vec![S::zero(); out_time * out_ch];
        conv1d_forward(
            ti.data(),
            tk.data(),
            &mut out,
            time,
            in_ch,
            width,
            out_ch,
            stride,
        );
        let value = Tensor::from_vec(&[out_time, out_ch], out).unwrap();
        Ok(self.push(value, Op::Conv1d { input, kernel, stride }))
    }

    /// Per-channel max over time rows `0..valid`. The gradient flows only to
    /// the argmax position; ties break to the earliest time index.
    pub fn global_max_pool(&mut self, input: Var, valid: usize) -> Result<Var> {
        let ti = self.value(input);
        if ti.rank() != 2 {
            return Err(shape_err("global_max_pool", ti.shape(), &[]));
        }
        let (time, ch) = (ti.shape()[0], ti.shape()[1]);
        if valid == 0 || valid > time {
            return Err(NdtError::EmptyTime);
        }
        let mut best = ti.row(0).to_vec();
        let mut argmax = vec![0usize; ch];
        for t in 1..valid {
            for (c, &x) in ti.row(t).iter().enumerate() {
                if x > best[c] {
                    best[c] = x;
                    argmax[c] = t;
                }
            }
        }
        let value = Tensor::from_vec(&[ch], best).unwrap();
        Ok(self.push(value, Op::MaxPool { input, argmax }))
    }

    /// Row lookup into `table` `[vocab, dim]` producing `[indices.len(), dim]`.
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let tt = self.value(table);
        if tt.rank() != 2 {
            return Err(shape_err("embedding", tt.shape(), &[]));
        }
        let (vocab, dim) = (tt.shape()[0], tt.shape()[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= vocab) {
            return Err(NdtError::IndexOutOfRange { index: bad, limit: vocab });
        }
        let mut data = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            data.extend_from_slice(tt.row(i));
        }
        let value = Tensor::from_vec(&[indices.len(), dim], data).unwrap();
        Ok(self.push(
            value,
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    pub fn gather_rows(&mut self, input: Var, rows: &[usize]) -> Result<Var> {
        let ti = self.value(input);
        if ti.rank() != 2 {
            return Err(shape_err("gather_rows", ti.shape(), &[]));
        }
        let (n, dim) = (ti.shape()[0], ti.shape()[1]);
        if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
            return Err(NdtError::IndexOutOfRange { index: bad, limit: n });
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for &i in rows {
            data.extend_from_slice(ti.row(i));
        }
        let value = Tensor::from_vec(&[rows.len(), dim], data).unwrap();
        Ok(self.push(
            value,
            Op::GatherRows {
                input,
                rows: rows.to_vec(),
            },
        ))
    }

    /// Stacks rank-1 vars of equal length into a `[k, dim]` matrix.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(NdtError::InvalidShape {
                op: "stack_rows",
                shape: vec![0],
            });
        }
        let dim = self.value(parts[0]).len();
        let mut data = Vec::with_capacity(parts.len() * dim);
        for &p in parts {
            let tp = self.value(p);
            if tp.rank() != 1 || tp.len() != dim {
                return Err(shape_err("stack_rows", tp.shape(), &[dim]));
            }
            data.extend_from_slice(tp.data());
        }
        let value = Tensor::from_vec(&[parts.len(), dim], data).unwrap();
        Ok(self.push(value, Op::StackRows(parts.to_vec())))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        let n: usize = shape.iter().product();
        if n != ta.len() {
            return Err(shape_err("reshape", ta.shape(), shape));
        }
        let value = Tensor::from_vec(shape, ta.data().to_vec()).unwrap();
        Ok(self.push(value, Op::Reshape(a)))
    }

    /// Mean binary cross-entropy over logits (rank-1) against 0/1 labels,
    /// computed in the numerically stable max/log1p form.
    pub fn logistic_loss_mean(&mut self, logits: Var, labels: &[S]) -> Result<Var> {
        let tl = self.value(logits);
        if tl.rank() != 1 || tl.len() != labels.len() || labels.is_empty() {
            return Err(shape_err("logistic_loss_mean", tl.shape(), &[labels.len()]));
        }
        let mut total = S::zero();
        for (&z, &y) in tl.data().iter().zip(labels.iter()) {
            let pos = if z > S::zero() { z } else { S::zero() };
            total = total + pos - z * y + (S::one() + (-z.abs()).exp()).ln();
        }
        let mean = total / S::from_f64(labels.len() as f64);
        let value = Tensor::scalar(mean);
        Ok(self.push(
            value,
            Op::LogisticLossMean {
                logits,
                labels: labels.to_vec(),
            },
        ))
    }

    /// Reverse sweep from a scalar node. Returns gradients for every node;
    /// each node is visited exactly once.
    pub fn backward(&mut self, loss: Var) -> Result<Grads<S>> {
        if self.value(loss).len() != 1 {
            return Err(NdtError::InvalidShape {
                op: "backward (loss must be scalar)",
                shape: self.value(loss).shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor<S>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::from_vec(
            self.value(loss).shape(),
            vec![S::one()],
        )
        .unwrap());

        for i in (0..=loss.0).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            self.accumulate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Grads { grads })
    }

    fn accumulate(&self, i: usize, g: &Tensor<S>, grads: &mut [Option<Tensor<S>>]) {
        let node = &self.nodes[i];
        let mut bump = |v: Var, delta: Tensor<S>| {
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                bump(*a, g.clone());
                bump(*b, g.clone());
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let da = ew(g, tb, |x, y| x * y);
                let db = ew(g, ta, |x, y| x * y);
                bump(*a, da);
                bump(*b, db);
            }
            Op::Affine(a, alpha, _) => {
                let al = *alpha;
                bump(*a, g.map(|x| x * al));
            }
            Op::MatMul(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (n, k, m) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                // da = g . b^T
                let mut da = vec![S::zero(); n * k];
                matmul_into(g.data(), tb.data(), &mut da, n, m, k, false, true);
                // db = a^T . g
                let mut db = vec![S::zero(); k * m];
                matmul_into(ta.data(), g.data(), &mut db, k, n, m, true, false);
                bump(*a, Tensor::from_vec(&[n, k], da).unwrap());
                bump(*b, Tensor::from_vec(&[k, m], db).unwrap());
            }
            Op::BiasAdd(a, bias) => {
                let m = self.nodes[bias.0].value.len();
                let mut db = vec![S::zero(); m];
                for row in g.data().chunks(m) {
                    for (acc, &x) in db.iter_mut().zip(row) {
                        *acc = *acc + x;
                    }
                }
                bump(*a, g.clone());
                bump(*bias, Tensor::from_vec(&[m], db).unwrap());
            }
            Op::Relu(a) => {
                let ta = &self.nodes[a.0].value;
                let da = ew(g, ta, |gx, x| if x > S::zero() { gx } else { S::zero() });
                bump(*a, da);
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                let da = ew(g, y, |gx, yx| gx * yx * (S::one() - yx));
                bump(*a, da);
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let da = ew(g, y, |gx, yx| gx * (S::one() - yx * yx));
                bump(*a, da);
            }
            Op::ConcatCols(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (n, p, q) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                let mut da = Vec::with_capacity(n * p);
                let mut db = Vec::with_capacity(n * q);
                for i in 0..n {
                    let row = g.row(i);
                    da.extend_from_slice(&row[..p]);
                    db.extend_from_slice(&row[p..]);
                }
                bump(*a, Tensor::from_vec(&[n, p], da).unwrap());
                bump(*b, Tensor::from_vec(&[n, q], db).unwrap());
            }
            Op::Conv1d { input, kernel, stride } => {
                let (ti, tk) = (&self.nodes[input.0].value, &self.nodes[kernel.0].value);
                let (time, in_ch) = (ti.shape()[0], ti.shape()[1]);
                let (width, out_ch) = (tk.shape()[0], tk.shape()[2]);
                let out_time = g.shape()[0];
                let mut din = vec![S::zero(); time * in_ch];
                let mut dk = vec![S::zero(); width * in_ch * out_ch];
                for t in 0..out_time {
                    let grow = g.row(t);
                    for w in 0..width {
                        let in_row = (t * stride + w) * in_ch;
                        for ic in 0..in_ch {
                            let x = ti.data()[in_row + ic];
                            let kbase = (w * in_ch + ic) * out_ch;
                            let mut acc = S::zero();
                            for (o, &go) in grow.iter().enumerate() {
                                acc = acc + go * tk.data()[kbase + o];
                                dk[kbase + o] = dk[kbase + o] + go * x;
                            }
                            din[in_row + ic] = din[in_row + ic] + acc;
                        }
                    }
                }
                bump(*input, Tensor::from_vec(&[time, in_ch], din).unwrap());
                bump(*kernel, Tensor::from_vec(&[width, in_ch, out_ch], dk).unwrap());
            }
            Op::MaxPool { input, argmax } => {
                let ti = &self.nodes[input.0].value;
                let (time, ch) = (ti.shape()[0], ti.shape()[1]);
                let mut din = vec![S::zero(); time * ch];
                for (c, (&t, &gx)) in argmax.iter().zip(g.data()).enumerate() {
                    din[t * ch + c] = gx;
                }
                bump(*input, Tensor::from_vec(&[time, ch], din).unwrap());
            }
            Op::Embedding { table, indices } => {
                let tt = &self.nodes[table.0].value;
                let (vocab, dim) = (tt.shape()[0], tt.shape()[1]);
                let mut dt = vec![S::zero(); vocab * dim];
                for (i, &idx) in indices.iter().enumerate() {
                    let grow = g.row(i);
                    let base = idx * dim;
                    for (d, &gx) in grow.iter().enumerate() {
                        dt[base + d] = dt[base + d] + gx;
                    }
                }
                bump(*table, Tensor::from_vec(&[vocab, dim], dt).unwrap());
            }
            Op::GatherRows { input, rows } => {
                let ti = &self.nodes[input.0].value;
                let (n, dim) = (ti.shape()[0], ti.shape()[1]);
                let mut din = vec![S::zero(); n * dim];
                for (i, &r) in rows.iter().enumerate() {
                    let grow = g.row(i);
                    let base = r * dim;
                    for (d, &gx) in grow.iter().enumerate() {
                        din[base + d] = din[base + d] + gx;
                    }
                }
                bump(*input, Tensor::from_vec(&[n, dim], din).unwrap());
            }
            Op::StackRows(parts) => {
                for (i, &p) in parts.iter().enumerate() {
                    let dim = self.nodes[p.0].value.len();
                    bump(p, Tensor::from_vec(&[dim], g.row(i).to_vec()).unwrap());
                }
            }
            Op::Reshape(a) => {
                let ta_shape = self.nodes[a.0].value.shape().to_vec();
                bump(*a, Tensor::from_vec(&ta_shape, g.data().to_vec()).unwrap());
            }
            Op::LogisticLossMean { logits, labels } => {
                let tz = &self.nodes[logits.0].value;
                let scale = g.item() / S::from_f64(labels.len() as f64);
                let dz: Vec<S> = tz
                    .data()
                    .iter()
                    .zip(labels.iter())
                    .map(|(&z, &y)| scale * (sigmoid_scalar(z) - y))
                    .collect();
                bump(*logits, Tensor::from_vec(&[labels.len()], dz).unwrap());
            }
        }
    }
}

fn sigmoid_scalar<S: Scalar>(x: S) -> S {
    // Split on sign to avoid exp overflow.
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

fn ew<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, f: impl Fn(S, S) -> S) -> Tensor<S> {
    debug_assert_eq!(a.len(), b.len());
    let data = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.shape(), data).unwrap()
}

fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> NdtError {
    NdtError::ShapeMismatch {
        op,
        detail: format!("{:?} vs {:?}", a, b),
    }
}

/// `out[n,m] += opA(a) . opB(b)` where transposition is handled by index
/// swizzling. `a` is `[n,k]` after transposition, `b` is `[k,m]`.
fn matmul_into<S: Scalar>(
    a: &[S],
    b: &[S],
    out: &mut [S],
    n: usize,
    k: usize,
    m: usize,
    trans_a: bool,
    trans_b: bool,
) {
    for i in 0..n {
        let orow = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let av = if trans_a { a[p * n + i] } else { a[i * k + p] };
            if av == S::zero() {
                continue;
            }
            if trans_b {
                for (j, o) in orow.iter_mut().enumerate() {
                    *o = *o + av * b[j * k + p];
                }
            } else {
                let brow = &b[p * m..(p + 1) * m];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o = *o + av * bv;
                }
            }
        }
    }
}

fn conv1d_forward<S: Scalar>(
    input: &[S],
    kernel: &[S],
    out: &mut [S],
    time: usize,
    in_ch: usize,
    width: usize,
    out_ch: usize,
    stride: usize,
) {
    let out_time = (time - width) / stride + 1;
    for t in 0..out_time {
        let orow = &mut out[t * out_ch..(t + 1) * out_ch];
        for w in 0..width {
            let irow = &input[(t * stride + w) * in_ch..(t * stride + w + 1) * in_ch];
            let kbase = w * in_ch * out_ch;
            for (ic, &x) in irow.iter().enumerate() {
                if x == S::zero() {
                    continue;
                }
                let krow = &kernel[kbase + ic * out_ch..kbase + (ic + 1) * out_ch];
                for (o, &kv) in orow.iter_mut().zip(krow) {
                    *o = *o + x * kv;
                }
            }
        }
    }
}
