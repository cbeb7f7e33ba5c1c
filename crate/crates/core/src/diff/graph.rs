use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::param::{ParamId, ParamStore};
use super::tensor::{matmul_into, Tensor};
use super::DiffError;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param,
    Detach,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    MulCol(Var, Var),
    MatMul(Var, Var),
    Concat(Vec<Var>, usize),
    Slice(Var, usize, usize),
    SumAxis(Var, usize),
    MeanAxis(Var, usize),
    SumAll(Var),
    Softmax(Var, usize),
    LogSoftmax(Var, usize),
    SegmentSoftmax(Var, Arc<[usize]>),
    Silu(Var),
    Relu(Var),
    Exp(Var),
    Sin(Var),
    Cos(Var),
    Sqrt(Var),
    Recip(Var),
    Normalize(Var, usize),
    NormLast(Var),
    Cross3(Var, Var),
    Dot3(Var, Var),
    Gather(Var, Arc<[usize]>),
    ScatterAdd(Var, Arc<[usize]>),
    Reshape(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// A computation record. Nodes are appended in evaluation order, so the
/// record is acyclic by construction and reverse index order is a valid
/// topological order for the backward sweep.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    params: Vec<Option<Var>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), DiffError> {
    if a.shape() != b.shape() {
        return Err(DiffError::shapes(op, a.shape(), b.shape()));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Leaf that takes part in differentiation.
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Leaf bound to a stored parameter. Repeated calls with the same id
    /// return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(Some(v)) = self.params.get(id.index()) {
            return *v;
        }
        let value = store.get(id).value.clone();
        let v = self.push(value, Op::Param, true);
        if self.params.len() <= id.index() {
            self.params.resize(id.index() + 1, None);
        }
        self.params[id.index()] = Some(v);
        v
    }

    /// Makes later `param(store, id)` calls return `x` instead of the stored
    /// value. Lets gradient checks drive a parameter from outside.
    pub fn bind_param(&mut self, id: ParamId, x: Var) {
        if self.params.len() <= id.index() {
            self.params.resize(id.index() + 1, None);
        }
        self.params[id.index()] = Some(x);
    }

    /// Copy of `x` that blocks gradient flow to everything upstream.
    pub fn detach(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.clone();
        self.push(value, Op::Detach, false)
    }

    pub fn is_detached(&self, x: Var) -> bool {
        matches!(self.nodes[x.0].op, Op::Detach)
    }

    pub fn value(&self, x: Var) -> &Tensor {
        &self.nodes[x.0].value
    }

    pub fn requires_grad(&self, x: Var) -> bool {
        self.rg(x)
    }

    /// Gradient of the last backward root with respect to `x`; zeros when
    /// no gradient reached it.
    pub fn grad(&self, x: Var) -> Tensor {
        match &self.grads[x.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(self.nodes[x.0].value.shape()),
        }
    }

    fn binary(&mut self, a: Var, b: Var, value: Tensor, op: Op) -> Var {
        let rg = self.rg(a) || self.rg(b);
        self.push(value, op, rg)
    }

    fn unary(&mut self, a: Var, value: Tensor, op: Op) -> Var {
        let rg = self.rg(a);
        self.push(value, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("add", va, vb)?;
        let out = va.zip(vb, |x, y| x + y);
        Ok(self.binary(a, b, out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("sub", va, vb)?;
        let out = va.zip(vb, |x, y| x - y);
        Ok(self.binary(a, b, out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("mul", va, vb)?;
        let out = va.zip(vb, |x, y| x * y);
        Ok(self.binary(a, b, out, Op::Mul(a, b)))
    }

    /// Scalar broadcast multiply.
    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x * s);
        self.unary(a, out, Op::Scale(a, s))
    }

    /// Scalar broadcast add.
    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x + s);
        self.unary(a, out, Op::AddScalar(a))
    }

    /// Adds the vector `b` (length = last dim of `x`) to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var, DiffError> {
        let (vx, vb) = (self.value(x), self.value(b));
        let w = vx.last_dim();
        if vb.len() != w || vx.rank() == 0 {
            return Err(DiffError::shapes("add_row", vx.shape(), vb.shape()));
        }
        let mut out = vx.clone();
        for chunk in out.data_mut().chunks_mut(w) {
            for (o, bv) in chunk.iter_mut().zip(vb.data()) {
                *o += bv;
            }
        }
        Ok(self.binary(x, b, out, Op::AddRow(x, b)))
    }

    /// Multiplies every row of `x` elementwise by the vector `w`.
    pub fn mul_row(&mut self, x: Var, w: Var) -> Result<Var, DiffError> {
        let (vx, vw) = (self.value(x), self.value(w));
        let n = vx.last_dim();
        if vw.len() != n || vx.rank() == 0 {
            return Err(DiffError::shapes("mul_row", vx.shape(), vw.shape()));
        }
        let mut out = vx.clone();
        for chunk in out.data_mut().chunks_mut(n) {
            for (o, wv) in chunk.iter_mut().zip(vw.data()) {
                *o *= wv;
            }
        }
        Ok(self.binary(x, w, out, Op::MulRow(x, w)))
    }

    /// Multiplies row `r` of `x` by the scalar `c[r]`.
    pub fn mul_col(&mut self, x: Var, c: Var) -> Result<Var, DiffError> {
        let (vx, vc) = (self.value(x), self.value(c));
        if vx.rank() == 0 || vc.len() != vx.rows() {
            return Err(DiffError::shapes("mul_col", vx.shape(), vc.shape()));
        }
        let w = vx.row_len();
        let mut out = vx.clone();
        for (chunk, cv) in out.data_mut().chunks_mut(w).zip(vc.data()) {
            for o in chunk {
                *o *= cv;
            }
        }
        Ok(self.binary(x, c, out, Op::MulCol(x, c)))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rank() != 2 || vb.rank() != 2 || va.shape()[1] != vb.shape()[0] {
            return Err(DiffError::shapes("matmul", va.shape(), vb.shape()));
        }
        let (m, k, n) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(va.data(), vb.data(), &mut out, m, k, n);
        Ok(self.binary(a, b, Tensor::matrix(m, n, out), Op::MatMul(a, b)))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, DiffError> {
        let first = self.value(parts[0]).shape().to_vec();
        if axis >= first.len() {
            return Err(DiffError::Axis {
                op: "concat",
                axis,
                shape: first,
            });
        }
        let mut total = 0;
        for &p in parts {
            let s = self.value(p).shape();
            let compatible = s.len() == first.len()
                && s.iter()
                    .zip(&first)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(DiffError::shapes("concat", &first, s));
            }
            total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = total;
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let v = self.value(p);
                let span = v.shape()[axis] * inner;
                data.extend_from_slice(&v.data()[o * span..(o + 1) * span]);
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Tensor::new(&shape, data), Op::Concat(parts.to_vec(), axis), rg))
    }

    /// Elements `start..end` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, end: usize) -> Result<Var, DiffError> {
        let v = self.value(x);
        if axis >= v.rank() || start > end || end > v.shape()[axis] {
            return Err(DiffError::Axis {
                op: "slice",
                axis,
                shape: v.shape().to_vec(),
            });
        }
        let (outer, len, inner) = v.split_axis(axis);
        let width = end - start;
        let mut data = Vec::with_capacity(outer * width * inner);
        for o in 0..outer {
            let base = o * len * inner;
            data.extend_from_slice(&v.data()[base + start * inner..base + end * inner]);
        }
        let mut shape = v.shape().to_vec();
        shape[axis] = width;
        Ok(self.unary(x, Tensor::new(&shape, data), Op::Slice(x, axis, start)))
    }

    fn reduce_axis(&self, x: Var, axis: usize, op: &'static str) -> Result<(Tensor, usize), DiffError> {
        let v = self.value(x);
        if axis >= v.rank() {
            return Err(DiffError::Axis {
                op,
                axis,
                shape: v.shape().to_vec(),
            });
        }
        let (outer, len, inner) = v.split_axis(axis);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for l in 0..len {
                let src = &v.data()[(o * len + l) * inner..(o * len + l + 1) * inner];
                for (d, s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        let mut shape = v.shape().to_vec();
        shape.remove(axis);
        Ok((Tensor::new(&shape, out), len))
    }

    /// Sum over `axis`, which is removed from the shape.
    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var, DiffError> {
        let (out, _) = self.reduce_axis(x, axis, "sum_axis")?;
        Ok(self.unary(x, out, Op::SumAxis(x, axis)))
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var, DiffError> {
        let (out, len) = self.reduce_axis(x, axis, "mean_axis")?;
        let out = out.map(|s| s / len as f64);
        Ok(self.unary(x, out, Op::MeanAxis(x, axis)))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.unary(x, Tensor::scalar(s), Op::SumAll(x))
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.value(x).len().max(1);
        let s = self.sum_all(x);
        self.scale(s, 1.0 / n as f64)
    }

    fn axis_check(&self, x: Var, axis: usize, op: &'static str) -> Result<(), DiffError> {
        let v = self.value(x);
        if axis >= v.rank() {
            return Err(DiffError::Axis {
                op,
                axis,
                shape: v.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var, DiffError> {
        self.axis_check(x, axis, "softmax")?;
        let out = softmax_along(self.value(x), axis, false);
        Ok(self.unary(x, out, Op::Softmax(x, axis)))
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var, DiffError> {
        self.axis_check(x, axis, "log_softmax")?;
        let out = softmax_along(self.value(x), axis, true);
        Ok(self.unary(x, out, Op::LogSoftmax(x, axis)))
    }

    /// Softmax of the scores `x` (one per row) within each group of rows
    /// sharing a segment id.
    pub fn segment_softmax(&mut self, x: Var, segments: Arc<[usize]>) -> Result<Var, DiffError> {
        let v = self.value(x);
        if v.len() != segments.len() {
            return Err(DiffError::Index {
                op: "segment_softmax",
                len: segments.len(),
                rows: v.len(),
            });
        }
        let n_seg = segments.iter().copied().max().map_or(0, |m| m + 1);
        let mut max = vec![f64::NEG_INFINITY; n_seg];
        for (&s, &val) in segments.iter().zip(v.data()) {
            max[s] = max[s].max(val);
        }
        let mut data: Vec<f64> = segments
            .iter()
            .zip(v.data())
            .map(|(&s, &val)| libm::exp(val - max[s]))
            .collect();
        let mut sum = vec![0.0; n_seg];
        for (&s, &e) in segments.iter().zip(&data) {
            sum[s] += e;
        }
        for (&s, e) in segments.iter().zip(data.iter_mut()) {
            *e /= sum[s];
        }
        let out = Tensor::new(v.shape(), data);
        Ok(self.unary(x, out, Op::SegmentSoftmax(x, segments)))
    }

    pub fn silu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v * sigmoid(v));
        self.unary(x, out, Op::Silu(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.max(0.0));
        self.unary(x, out, Op::Relu(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let out = self.value(x).map(libm::exp);
        self.unary(x, out, Op::Exp(x))
    }

    pub fn sin(&mut self, x: Var) -> Var {
        let out = self.value(x).map(libm::sin);
        self.unary(x, out, Op::Sin(x))
    }

    pub fn cos(&mut self, x: Var) -> Var {
        let out = self.value(x).map(libm::cos);
        self.unary(x, out, Op::Cos(x))
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        let out = self.value(x).map(libm::sqrt);
        self.unary(x, out, Op::Sqrt(x))
    }

    pub fn recip(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| 1.0 / v);
        self.unary(x, out, Op::Recip(x))
    }

    /// Zero-mean, unit-variance normalization along `axis` with the
    /// variance offset by `NORM_EPS`. Axis 0 of a `[nodes, channels]`
    /// array is batch normalization; the last axis is layer normalization.
    pub fn normalize(&mut self, x: Var, axis: usize) -> Result<Var, DiffError> {
        self.axis_check(x, axis, "normalize")?;
        let v = self.value(x);
        let (outer, len, inner) = v.split_axis(axis);
        let mut out = v.clone();
        let d = out.data_mut();
        for o in 0..outer {
            for i in 0..inner {
                let idx = |l: usize| (o * len + l) * inner + i;
                let mean = (0..len).map(|l| d[idx(l)]).sum::<f64>() / len as f64;
                let var = (0..len).map(|l| { let z = d[idx(l)] - mean; z * z }).sum::<f64>() / len as f64;
                let inv = 1.0 / libm::sqrt(var + NORM_EPS);
                for l in 0..len {
                    d[idx(l)] = (d[idx(l)] - mean) * inv;
                }
            }
        }
        Ok(self.unary(x, out, Op::Normalize(x, axis)))
    }

    /// Layer normalization over the last axis (no affine part).
    pub fn layer_norm(&mut self, x: Var) -> Result<Var, DiffError> {
        let axis = self.value(x).rank().saturating_sub(1);
        self.normalize(x, axis)
    }

    /// Euclidean norm over the last axis; the last axis is kept with size 1.
    pub fn norm_last(&mut self, x: Var) -> Result<Var, DiffError> {
        let v = self.value(x);
        if v.rank() == 0 {
            return Err(DiffError::Axis {
                op: "norm_last",
                axis: 0,
                shape: Vec::new(),
            });
        }
        let w = v.last_dim();
        let data: Vec<f64> = v
            .data()
            .chunks(w)
            .map(|c| libm::sqrt(c.iter().map(|a| a * a).sum()))
            .collect();
        let mut shape = v.shape().to_vec();
        *shape.last_mut().unwrap() = 1;
        Ok(self.unary(x, Tensor::new(&shape, data), Op::NormLast(x)))
    }

    /// Row-wise cross product of `[.., 3]` arrays.
    pub fn cross3(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() || va.last_dim() != 3 || va.rank() == 0 {
            return Err(DiffError::shapes("cross3", va.shape(), vb.shape()));
        }
        let mut data = Vec::with_capacity(va.len());
        for (x, y) in va.data().chunks(3).zip(vb.data().chunks(3)) {
            data.extend_from_slice(&cross(x, y));
        }
        let out = Tensor::new(va.shape(), data);
        Ok(self.binary(a, b, out, Op::Cross3(a, b)))
    }

    /// Row-wise dot product of `[.., 3]` arrays; the last axis becomes 1.
    pub fn dot3(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() || va.last_dim() != 3 || va.rank() == 0 {
            return Err(DiffError::shapes("dot3", va.shape(), vb.shape()));
        }
        let data: Vec<f64> = va
            .data()
            .chunks(3)
            .zip(vb.data().chunks(3))
            .map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
            .collect();
        let mut shape = va.shape().to_vec();
        *shape.last_mut().unwrap() = 1;
        Ok(self.binary(a, b, Tensor::new(&shape, data), Op::Dot3(a, b)))
    }

    /// Row `r` of the output is row `index[r]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: Arc<[usize]>) -> Result<Var, DiffError> {
        let v = self.value(x);
        let rows = v.rows();
        if v.rank() == 0 || index.iter().any(|&i| i >= rows) {
            return Err(DiffError::Index {
                op: "gather_rows",
                len: index.len(),
                rows,
            });
        }
        let w = v.row_len();
        let mut data = Vec::with_capacity(index.len() * w);
        for &i in index.iter() {
            data.extend_from_slice(v.row(i));
        }
        let mut shape = v.shape().to_vec();
        shape[0] = index.len();
        Ok(self.unary(x, Tensor::new(&shape, data), Op::Gather(x, index)))
    }

    /// Sums row `r` of `x` into output row `index[r]`; output has `rows` rows.
    pub fn scatter_add_rows(&mut self, x: Var, index: Arc<[usize]>, rows: usize) -> Result<Var, DiffError> {
        let v = self.value(x);
        if v.rank() == 0 || index.len() != v.rows() || index.iter().any(|&i| i >= rows) {
            return Err(DiffError::Index {
                op: "scatter_add_rows",
                len: index.len(),
                rows: v.rows(),
            });
        }
        let w = v.row_len();
        let mut data = vec![0.0; rows * w];
        for (r, &i) in index.iter().enumerate() {
            for (d, s) in data[i * w..(i + 1) * w].iter_mut().zip(v.row(r)) {
                *d += s;
            }
        }
        let mut shape = v.shape().to_vec();
        shape[0] = rows;
        Ok(self.unary(x, Tensor::new(&shape, data), Op::ScatterAdd(x, index)))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, DiffError> {
        let v = self.value(x);
        if shape.iter().product::<usize>() != v.len() || shape.len() > 3 {
            return Err(DiffError::shapes("reshape", v.shape(), shape));
        }
        let out = v.clone().reshaped(shape);
        Ok(self.unary(x, out, Op::Reshape(x)))
    }

    /// Reverse sweep from a scalar root. Gradients from any earlier sweep
    /// are discarded.
    pub fn backward(&mut self, root: Var) -> Result<(), DiffError> {
        let rv = self.value(root);
        if rv.len() != 1 {
            return Err(DiffError::NonScalarRoot(rv.shape().to_vec()));
        }
        let root_shape = rv.shape().to_vec();
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[root.0] = Some(Tensor::full(&root_shape, 1.0));
        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &g);
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn acc(&mut self, v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn propagate(&mut self, i: usize, g: &Tensor) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf | Op::Param | Op::Detach => {}
            Op::Add(a, b) => {
                self.acc(a, g.clone());
                self.acc(b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(a, g.clone());
                self.acc(b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let ga = g.zip(self.val(b), |x, y| x * y);
                let gb = g.zip(self.val(a), |x, y| x * y);
                self.acc(a, ga);
                self.acc(b, gb);
            }
            Op::Scale(a, s) => self.acc(a, g.map(|x| x * s)),
            Op::AddScalar(a) => self.acc(a, g.clone()),
            Op::AddRow(x, b) => {
                let w = g.last_dim();
                let mut gb = vec![0.0; w];
                for chunk in g.data().chunks(w) {
                    for (s, c) in gb.iter_mut().zip(chunk) {
                        *s += c;
                    }
                }
                let shape = self.val(b).shape().to_vec();
                self.acc(x, g.clone());
                self.acc(b, Tensor::new(&shape, gb));
            }
            Op::MulRow(x, w) => {
                let n = g.last_dim();
                let (vx, vw) = (self.val(x), self.val(w));
                let mut gx = g.clone();
                let mut gw = vec![0.0; n];
                for ((gc, xc), gxc) in g
                    .data()
                    .chunks(n)
                    .zip(vx.data().chunks(n))
                    .zip(gx.data_mut().chunks_mut(n))
                {
                    for j in 0..n {
                        gw[j] += gc[j] * xc[j];
                        gxc[j] *= vw.data()[j];
                    }
                }
                let shape = vw.shape().to_vec();
                self.acc(x, gx);
                self.acc(w, Tensor::new(&shape, gw));
            }
            Op::MulCol(x, c) => {
                let (vx, vc) = (self.val(x), self.val(c));
                let w = vx.row_len();
                let mut gx = g.clone();
                let mut gc = vec![0.0; vc.len()];
                for (r, chunk) in gx.data_mut().chunks_mut(w).enumerate() {
                    let xr = vx.row(r);
                    gc[r] = g.row(r).iter().zip(xr).map(|(a, b)| a * b).sum();
                    for o in chunk.iter_mut() {
                        *o *= vc.data()[r];
                    }
                }
                let shape = vc.shape().to_vec();
                self.acc(x, gx);
                self.acc(c, Tensor::new(&shape, gc));
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.val(a), self.val(b));
                let (m, k, n) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
                let ga = if self.rg(a) {
                    // g [m,n] x b^T [n,k]
                    let mut out = vec![0.0; m * k];
                    for r in 0..m {
                        let grow = &g.data()[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = &vb.data()[p * n..(p + 1) * n];
                            out[r * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    Some(Tensor::matrix(m, k, out))
                } else {
                    None
                };
                let gb = if self.rg(b) {
                    // a^T [k,m] x g [m,n]
                    let mut out = vec![0.0; k * n];
                    for r in 0..m {
                        let grow = &g.data()[r * n..(r + 1) * n];
                        for p in 0..k {
                            let av = va.data()[r * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (o, gv) in out[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *o += av * gv;
                            }
                        }
                    }
                    Some(Tensor::matrix(k, n, out))
                } else {
                    None
                };
                if let Some(ga) = ga {
                    self.acc(a, ga);
                }
                if let Some(gb) = gb {
                    self.acc(b, gb);
                }
            }
            Op::Concat(parts, axis) => {
                let shape = g.shape().to_vec();
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let total = shape[axis];
                let mut offset = 0;
                for p in parts {
                    let ps = self.val(p).shape().to_vec();
                    let len = ps[axis];
                    if self.rg(p) {
                        let mut data = Vec::with_capacity(outer * len * inner);
                        for o in 0..outer {
                            let base = (o * total + offset) * inner;
                            data.extend_from_slice(&g.data()[base..base + len * inner]);
                        }
                        self.acc(p, Tensor::new(&ps, data));
                    }
                    offset += len;
                }
            }
            Op::Slice(x, axis, start) => {
                let vs = self.val(x).shape().to_vec();
                let (outer, len, inner) = self.val(x).split_axis(axis);
                let width = g.shape()[axis];
                let mut data = vec![0.0; outer * len * inner];
                for o in 0..outer {
                    let dst = (o * len + start) * inner;
                    let src = o * width * inner;
                    data[dst..dst + width * inner].copy_from_slice(&g.data()[src..src + width * inner]);
                }
                self.acc(x, Tensor::new(&vs, data));
            }
            Op::SumAxis(x, axis) | Op::MeanAxis(x, axis) => {
                let vs = self.val(x).shape().to_vec();
                let (outer, len, inner) = self.val(x).split_axis(axis);
                let f = if matches!(self.nodes[i].op, Op::MeanAxis(..)) {
                    1.0 / len as f64
                } else {
                    1.0
                };
                let mut data = vec![0.0; outer * len * inner];
                for o in 0..outer {
                    for l in 0..len {
                        for j in 0..inner {
                            data[(o * len + l) * inner + j] = g.data()[o * inner + j] * f;
                        }
                    }
                }
                self.acc(x, Tensor::new(&vs, data));
            }
            Op::SumAll(x) => {
                let vs = self.val(x).shape().to_vec();
                self.acc(x, Tensor::full(&vs, g.item()));
            }
            Op::Softmax(x, axis) => {
                let y = &self.nodes[i].value;
                let (outer, len, inner) = y.split_axis(axis);
                let mut gx = vec![0.0; y.len()];
                for o in 0..outer {
                    for j in 0..inner {
                        let idx = |l: usize| (o * len + l) * inner + j;
                        let dot: f64 = (0..len).map(|l| g.data()[idx(l)] * y.data()[idx(l)]).sum();
                        for l in 0..len {
                            gx[idx(l)] = y.data()[idx(l)] * (g.data()[idx(l)] - dot);
                        }
                    }
                }
                let shape = y.shape().to_vec();
                self.acc(x, Tensor::new(&shape, gx));
            }
            Op::LogSoftmax(x, axis) => {
                let y = &self.nodes[i].value;
                let (outer, len, inner) = y.split_axis(axis);
                let mut gx = vec![0.0; y.len()];
                for o in 0..outer {
                    for j in 0..inner {
                        let idx = |l: usize| (o * len + l) * inner + j;
                        let gsum: f64 = (0..len).map(|l| g.data()[idx(l)]).sum();
                        for l in 0..len {
                            gx[idx(l)] = g.data()[idx(l)] - libm::exp(y.data()[idx(l)]) * gsum;
                        }
                    }
                }
                let shape = y.shape().to_vec();
                self.acc(x, Tensor::new(&shape, gx));
            }
            Op::SegmentSoftmax(x, seg) => {
                let y = &self.nodes[i].value;
                let n_seg = seg.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; n_seg];
                for ((&s, gv), yv) in seg.iter().zip(g.data()).zip(y.data()) {
                    dot[s] += gv * yv;
                }
                let gx: Vec<f64> = seg
                    .iter()
                    .zip(g.data())
                    .zip(y.data())
                    .map(|((&s, gv), yv)| yv * (gv - dot[s]))
                    .collect();
                let shape = y.shape().to_vec();
                self.acc(x, Tensor::new(&shape, gx));
            }
            Op::Silu(x) => {
                let gx = g.zip(self.val(x), |gv, xv| {
                    let s = sigmoid(xv);
                    gv * s * (1.0 + xv * (1.0 - s))
                });
                self.acc(x, gx);
            }
            Op::Relu(x) => {
                let gx = g.zip(self.val(x), |gv, xv| if xv > 0.0 { gv } else { 0.0 });
                self.acc(x, gx);
            }
            Op::Exp(x) => {
                let gx = g.zip(&self.nodes[i].value, |gv, yv| gv * yv);
                self.acc(x, gx);
            }
            Op::Sin(x) => {
                let gx = g.zip(self.val(x), |gv, xv| gv * libm::cos(xv));
                self.acc(x, gx);
            }
            Op::Cos(x) => {
                let gx = g.zip(self.val(x), |gv, xv| -gv * libm::sin(xv));
                self.acc(x, gx);
            }
            Op::Sqrt(x) => {
                let gx = g.zip(&self.nodes[i].value, |gv, yv| gv / (2.0 * yv));
                self.acc(x, gx);
            }
            Op::Recip(x) => {
                let gx = g.zip(&self.nodes[i].value, |gv, yv| -gv * yv * yv);
                self.acc(x, gx);
            }
            Op::Normalize(x, axis) => {
                let y = &self.nodes[i].value;
                let vx = self.val(x);
                let (outer, len, inner) = y.split_axis(axis);
                let mut gx = vec![0.0; y.len()];
                for o in 0..outer {
                    for j in 0..inner {
                        let idx = |l: usize| (o * len + l) * inner + j;
                        let mean = (0..len).map(|l| vx.data()[idx(l)]).sum::<f64>() / len as f64;
                        let var = (0..len)
                            .map(|l| { let z = vx.data()[idx(l)] - mean; z * z })
                            .sum::<f64>()
                            / len as f64;
                        let inv = 1.0 / libm::sqrt(var + NORM_EPS);
                        let gm = (0..len).map(|l| g.data()[idx(l)]).sum::<f64>() / len as f64;
                        let gy = (0..len)
                            .map(|l| g.data()[idx(l)] * y.data()[idx(l)])
                            .sum::<f64>()
                            / len as f64;
                        for l in 0..len {
                            gx[idx(l)] = inv * (g.data()[idx(l)] - gm - y.data()[idx(l)] * gy);
                        }
                    }
                }
                let shape = y.shape().to_vec();
                self.acc(x, Tensor::new(&shape, gx));
            }
            Op::NormLast(x) => {
                let vx = self.val(x);
                let y = &self.nodes[i].value;
                let w = vx.last_dim();
                let mut gx = vec![0.0; vx.len()];
                for (r, chunk) in gx.chunks_mut(w).enumerate() {
                    let n = y.data()[r];
                    if n > 0.0 {
                        let f = g.data()[r] / n;
                        for (o, xv) in chunk.iter_mut().zip(&vx.data()[r * w..(r + 1) * w]) {
                            *o = f * xv;
                        }
                    }
                }
                let shape = vx.shape().to_vec();
                self.acc(x, Tensor::new(&shape, gx));
            }
            Op::Cross3(a, b) => {
                let (va, vb) = (self.val(a), self.val(b));
                let mut ga = Vec::with_capacity(va.len());
                let mut gb = Vec::with_capacity(va.len());
                for ((x, y), gg) in va.data().chunks(3).zip(vb.data().chunks(3)).zip(g.data().chunks(3)) {
                    ga.extend_from_slice(&cross(y, gg));
                    gb.extend_from_slice(&cross(gg, x));
                }
                let shape = va.shape().to_vec();
                self.acc(a, Tensor::new(&shape, ga));
                self.acc(b, Tensor::new(&shape, gb));
            }
            Op::Dot3(a, b) => {
                let (va, vb) = (self.val(a), self.val(b));
                let mut ga = Vec::with_capacity(va.len());
                let mut gb = Vec::with_capacity(va.len());
                for ((x, y), &gg) in va.data().chunks(3).zip(vb.data().chunks(3)).zip(g.data()) {
                    ga.extend(y.iter().map(|v| v * gg));
                    gb.extend(x.iter().map(|v| v * gg));
                }
                let shape = va.shape().to_vec();
                self.acc(a, Tensor::new(&shape, ga));
                self.acc(b, Tensor::new(&shape, gb));
            }
            Op::Gather(x, index) => {
                let vs = self.val(x).shape().to_vec();
                let w = g.row_len();
                let mut data = vec![0.0; vs.iter().product()];
                for (r, &src) in index.iter().enumerate() {
                    for (d, s) in data[src * w..(src + 1) * w].iter_mut().zip(g.row(r)) {
                        *d += s;
                    }
                }
                self.acc(x, Tensor::new(&vs, data));
            }
            Op::ScatterAdd(x, index) => {
                let vs = self.val(x).shape().to_vec();
                let mut data = Vec::with_capacity(vs.iter().product());
                for &dst in index.iter() {
                    data.extend_from_slice(g.row(dst));
                }
                self.acc(x, Tensor::new(&vs, data));
            }
            Op::Reshape(x) => {
                let vs = self.val(x).shape().to_vec();
                self.acc(x, g.clone().reshaped(&vs));
            }
        }
    }

    /// Adds the gradient of every parameter leaf into the store.
    pub fn accumulate_param_grads(&self, store: &mut ParamStore) {
        for (idx, slot) in self.params.iter().enumerate() {
            let Some(v) = slot else { continue };
            if let Some(g) = &self.grads[v.0] {
                store.get_mut(ParamId::from_index(idx)).grad.add_assign(g);
            }
        }
    }
}

/// Variance offset used by [`Graph::normalize`].
pub const NORM_EPS: f64 = 1e-5;

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn softmax_along(v: &Tensor, axis: usize, log: bool) -> Tensor {
    let (outer, len, inner) = v.split_axis(axis);
    let mut out = v.clone();
    let d = out.data_mut();
    for o in 0..outer {
        for j in 0..inner {
            let idx = |l: usize| (o * len + l) * inner + j;
            let max = (0..len).map(|l| d[idx(l)]).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = (0..len).map(|l| libm::exp(d[idx(l)] - max)).sum();
            let lse = max + libm::log(sum);
            for l in 0..len {
                d[idx(l)] = if log {
                    d[idx(l)] - lse
                } else {
                    libm::exp(d[idx(l)] - lse)
                };
            }
        }
    }
    out
}
