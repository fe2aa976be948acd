//! Recorded computation graph ("tape") with reverse-mode differentiation.
//!
//! Operations are pushed onto the tape and evaluated eagerly; the node list
//! is therefore already in topological order, and [`Tape::backward`] is one
//! sweep over the nodes in exact reverse construction order. Replaying the
//! forward pass from the recorded leaves reuses the same evaluation routine
//! as construction, so replayed values reproduce the originals bitwise.
//!
//! The operation set is deliberately small: dense layers, the pointwise
//! nonlinearities the models need, column concatenation/slicing for input
//! partitioning and attention, row-wise softmax with temperature, and the
//! scalar reductions used by the objectives.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::tensor::{Shape, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

impl NodeId {
    /// Position of the node in construction order.
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    /// Leaf holding data that is not differentiated against (still receives
    /// a gradient so input sensitivities can be inspected).
    Input,
    /// Leaf registered as a trainable parameter.
    Param,
    /// `y = x W^T + b` with `w: [out, in]`, `b: [out]`, `x: [rows, in]`.
    Linear { w: NodeId, b: NodeId, x: NodeId },
    Relu { x: NodeId },
    Sigmoid { x: NodeId },
    /// `y = 1 - x`, the complement of a weight in a two-way convex blend.
    OneMinus { x: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    /// Elementwise (Hadamard) product of same-shape tensors.
    Mul { a: NodeId, b: NodeId },
    /// `[r, ca] ++ [r, cb] -> [r, ca + cb]` along the feature axis.
    ConcatCols { a: NodeId, b: NodeId },
    /// Columns `start .. start + len` of `x`.
    SliceCols { x: NodeId, start: usize, len: usize },
    /// Row-wise `softmax(x / temperature)`.
    SoftmaxRows { x: NodeId, temperature: f64 },
    /// Row-wise inner product: `[r, d] x [r, d] -> [r, 1]`.
    RowDot { a: NodeId, b: NodeId },
    /// Multiplication by a compile-time constant.
    Scale { x: NodeId, factor: f64 },
    /// Broadcast a `[r, 1]` column over the features of a `[r, d]` tensor.
    ColMul { scale: NodeId, x: NodeId },
    Abs { x: NodeId },
    Square { x: NodeId },
    /// Mean over all elements, producing a scalar (shape `[1]`).
    MeanAll { x: NodeId },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients of one scalar root with respect to every tape node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    /// Gradient tensor at `id`; same shape as the node's value.
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.grads[id.0]
    }
}

/// The recorded graph. One tape per forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parameter leaves in registration order. Model forward passes bind
    /// their parameters in declaration order, so this sequence lines up with
    /// `Model::for_each_param`.
    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    /// Recorded value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    /// Leaf carrying non-trainable data (inputs, targets, constants).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value)
    }

    /// Leaf carrying a trainable parameter; the tensor is copied onto the
    /// tape so the owning model stays borrowable during the pass.
    pub fn param(&mut self, value: &Tensor) -> NodeId {
        let id = self.push(Op::Param, value.clone());
        self.params.push(id);
        id
    }

    /// `x W^T + b`. Weights are `[out, in]` row-major, bias is `[out]`, and
    /// `x` is `[rows, in]` (or a rank-1 `[in]` treated as one row).
    pub fn linear(&mut self, w: NodeId, b: NodeId, x: NodeId) -> Result<NodeId> {
        let (ws, bs, xs) = (self.shape_of(w), self.shape_of(b), self.shape_of(x));
        let (out_dim, in_dim) = match ws {
            Shape::Matrix { rows, cols } => (rows, cols),
            other => {
                return Err(Error::DimensionMismatch {
                    op: "linear",
                    expected: Shape::Matrix { rows: 0, cols: 0 },
                    actual: other,
                })
            }
        };
        if bs != Shape::Vector(out_dim) {
            return Err(Error::DimensionMismatch {
                op: "linear",
                expected: Shape::Vector(out_dim),
                actual: bs,
            });
        }
        if xs.cols() != in_dim {
            return Err(Error::DimensionMismatch {
                op: "linear",
                expected: xs.with_cols(in_dim),
                actual: xs,
            });
        }
        let op = Op::Linear { w, b, x };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let op = Op::Relu { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let op = Op::Sigmoid { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    pub fn one_minus(&mut self, x: NodeId) -> NodeId {
        let op = Op::OneMinus { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let op = Op::Add { a, b };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let op = Op::Sub { a, b };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let op = Op::Mul { a, b };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.shape_of(a), self.shape_of(b));
        let compatible = match (sa, sb) {
            (Shape::Vector(_), Shape::Vector(_)) => true,
            (Shape::Matrix { rows: ra, .. }, Shape::Matrix { rows: rb, .. }) => ra == rb,
            _ => false,
        };
        if !compatible {
            return Err(Error::DimensionMismatch {
                op: "concat_cols",
                expected: sa,
                actual: sb,
            });
        }
        let op = Op::ConcatCols { a, b };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let xs = self.shape_of(x);
        if len == 0 || start + len > xs.cols() {
            return Err(Error::DimensionMismatch {
                op: "slice_cols",
                expected: xs.with_cols(start + len),
                actual: xs,
            });
        }
        let op = Op::SliceCols { x, start, len };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    /// Row-wise `softmax(x / temperature)`; `temperature` must be positive.
    pub fn softmax_rows(&mut self, x: NodeId, temperature: f64) -> Result<NodeId> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidParameter {
                what: "softmax temperature",
                value: temperature,
            });
        }
        let op = Op::SoftmaxRows { x, temperature };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("row_dot", a, b)?;
        let op = Op::RowDot { a, b };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let op = Op::Scale { x, factor };
        let value = self.eval(&op);
        self.push(op, value)
    }

    /// Broadcast-multiply each row of `x` by the matching entry of the
    /// single-column tensor `scale`.
    pub fn col_mul(&mut self, scale: NodeId, x: NodeId) -> Result<NodeId> {
        let (ss, xs) = (self.shape_of(scale), self.shape_of(x));
        if ss.cols() != 1 || ss.rows() != xs.rows() {
            return Err(Error::DimensionMismatch {
                op: "col_mul",
                expected: xs.with_cols(1),
                actual: ss,
            });
        }
        let op = Op::ColMul { scale, x };
        let value = self.eval(&op);
        Ok(self.push(op, value))
    }

    pub fn abs(&mut self, x: NodeId) -> NodeId {
        let op = Op::Abs { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        let op = Op::Square { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    /// Mean over every element; the resulting scalar is the usual loss root.
    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        let op = Op::MeanAll { x };
        let value = self.eval(&op);
        self.push(op, value)
    }

    fn shape_of(&self, id: NodeId) -> Shape {
        self.nodes[id.0].value.shape()
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (sa, sb) = (self.shape_of(a), self.shape_of(b));
        if sa != sb {
            return Err(Error::DimensionMismatch {
                op,
                expected: sa,
                actual: sb,
            });
        }
        Ok(())
    }

    /// Evaluate `op` against the values already on the tape. Shared between
    /// construction and [`Tape::replay`], which is what makes replay
    /// bit-exact by construction.
    fn eval(&self, op: &Op) -> Tensor {
        match *op {
            Op::Input | Op::Param => unreachable!("leaves carry their own values"),
            Op::Linear { w, b, x } => {
                let (w, b, x) = (self.value(w), self.value(b), self.value(x));
                let (rows, out_dim) = (x.rows(), w.rows());
                let mut out = Tensor::zeros(x.shape().with_cols(out_dim));
                for r in 0..rows {
                    let xr = x.row(r);
                    let or = out.row_mut(r);
                    for (o, out_v) in or.iter_mut().enumerate() {
                        let wr = w.row(o);
                        let mut acc = b.as_slice()[o];
                        for (xv, wv) in xr.iter().zip(wr) {
                            acc += xv * wv;
                        }
                        *out_v = acc;
                    }
                }
                out
            }
            Op::Relu { x } => self.map_unary(x, |v| v.max(0.0)),
            Op::Sigmoid { x } => self.map_unary(x, |v| 1.0 / (1.0 + fmath::exp(-v))),
            Op::OneMinus { x } => self.map_unary(x, |v| 1.0 - v),
            Op::Add { a, b } => self.zip_binary(a, b, |x, y| x + y),
            Op::Sub { a, b } => self.zip_binary(a, b, |x, y| x - y),
            Op::Mul { a, b } => self.zip_binary(a, b, |x, y| x * y),
            Op::ConcatCols { a, b } => {
                let (a, b) = (self.value(a), self.value(b));
                let (rows, ca, cb) = (a.rows(), a.cols(), b.cols());
                let mut out = Tensor::zeros(a.shape().with_cols(ca + cb));
                for r in 0..rows {
                    let or = out.row_mut(r);
                    or[..ca].copy_from_slice(a.row(r));
                    or[ca..].copy_from_slice(b.row(r));
                }
                out
            }
            Op::SliceCols { x, start, len } => {
                let x = self.value(x);
                let mut out = Tensor::zeros(x.shape().with_cols(len));
                for r in 0..x.rows() {
                    out.row_mut(r).copy_from_slice(&x.row(r)[start..start + len]);
                }
                out
            }
            Op::SoftmaxRows { x, temperature } => {
                let x = self.value(x);
                let mut out = Tensor::zeros(x.shape());
                for r in 0..x.rows() {
                    let xr = x.row(r);
                    let or = out.row_mut(r);
                    // Max-shifted for stability; the shift cancels exactly.
                    let max = xr.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    let mut sum = 0.0;
                    for (ov, &xv) in or.iter_mut().zip(xr) {
                        *ov = fmath::exp((xv - max) / temperature);
                        sum += *ov;
                    }
                    for ov in or.iter_mut() {
                        *ov /= sum;
                    }
                }
                out
            }
            Op::RowDot { a, b } => {
                let (a, b) = (self.value(a), self.value(b));
                let mut out = Tensor::zeros(a.shape().with_cols(1));
                for r in 0..a.rows() {
                    let dot = a.row(r).iter().zip(b.row(r)).map(|(x, y)| x * y).sum();
                    out.row_mut(r)[0] = dot;
                }
                out
            }
            Op::Scale { x, factor } => self.map_unary(x, |v| v * factor),
            Op::ColMul { scale, x } => {
                let (s, x) = (self.value(scale), self.value(x));
                let mut out = Tensor::zeros(x.shape());
                for r in 0..x.rows() {
                    let sv = s.row(r)[0];
                    for (ov, &xv) in out.row_mut(r).iter_mut().zip(x.row(r)) {
                        *ov = sv * xv;
                    }
                }
                out
            }
            Op::Abs { x } => self.map_unary(x, f64::abs),
            Op::Square { x } => self.map_unary(x, |v| v * v),
            Op::MeanAll { x } => {
                let x = self.value(x);
                let sum: f64 = x.as_slice().iter().sum();
                Tensor::vector(vec![sum / x.len() as f64])
            }
        }
    }

    fn map_unary(&self, x: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let x = self.value(x);
        let mut out = Tensor::zeros(x.shape());
        for (ov, &xv) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *ov = f(xv);
        }
        out
    }

    fn zip_binary(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (a, b) = (self.value(a), self.value(b));
        let mut out = Tensor::zeros(a.shape());
        for ((ov, &av), &bv) in out
            .as_mut_slice()
            .iter_mut()
            .zip(a.as_slice())
            .zip(b.as_slice())
        {
            *ov = f(av, bv);
        }
        out
    }

    /// Distance of the recorded pass to the nearest activation boundary:
    /// the minimum `|v|` over every input element of a ReLU or `|x|` node
    /// (infinite when the graph has no kinked operations). A small margin
    /// means a nearby parameter or input perturbation can switch an
    /// activation pattern — useful when validating gradients by finite
    /// differences, which assume local smoothness.
    pub fn kink_margin(&self) -> f64 {
        let mut margin = f64::INFINITY;
        for node in &self.nodes {
            if let Op::Relu { x } | Op::Abs { x } = node.op {
                for &v in self.value(x).as_slice() {
                    margin = margin.min(v.abs());
                }
            }
        }
        margin
    }

    /// Recompute every node from the recorded leaves. Returns the recomputed
    /// values in construction order; they are bitwise identical to the
    /// stored ones because the same evaluation path runs on the same inputs.
    pub fn replay(&self) -> Vec<Tensor> {
        let mut replayed = Tape::new();
        for node in &self.nodes {
            match node.op {
                Op::Input | Op::Param => {
                    replayed.push(node.op.clone(), node.value.clone());
                }
                ref op => {
                    let value = replayed.eval(op);
                    replayed.push(op.clone(), value);
                }
            }
        }
        replayed.nodes.into_iter().map(|n| n.value).collect()
    }

    /// Reverse-mode sweep seeding `d root / d root = 1`. The root must hold
    /// exactly one element. Nodes are visited in exact reverse construction
    /// order (a valid reverse topological order, since operations may only
    /// reference earlier nodes); subgradients at ReLU/|x| kinks are 0.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let root_value = self.value(root);
        if root_value.len() != 1 {
            return Err(Error::NonScalarRoot {
                elements: root_value.len(),
            });
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.shape()))
            .collect();
        grads[root.0].as_mut_slice()[0] = 1.0;

        for idx in (0..=root.0).rev() {
            let g = grads[idx].clone();
            if g.as_slice().iter().all(|&v| v == 0.0) {
                continue;
            }
            match self.nodes[idx].op {
                Op::Input | Op::Param => {}
                Op::Linear { w, b, x } => {
                    let (wv, xv) = (self.value(w), self.value(x));
                    let (rows, out_dim) = (xv.rows(), wv.rows());
                    {
                        let gb = grads[b.0].as_mut_slice();
                        for r in 0..rows {
                            for (gbo, &gv) in gb.iter_mut().zip(g.row(r)) {
                                *gbo += gv;
                            }
                        }
                    }
                    {
                        let gw = &mut grads[w.0];
                        for r in 0..rows {
                            let xr = xv.row(r);
                            let gr = g.row(r);
                            for (o, &gv) in gr.iter().enumerate() {
                                if gv != 0.0 {
                                    for (gwv, &xvv) in gw.row_mut(o).iter_mut().zip(xr) {
                                        *gwv += gv * xvv;
                                    }
                                }
                            }
                        }
                    }
                    {
                        let gx = &mut grads[x.0];
                        for r in 0..rows {
                            let gr = g.row(r);
                            let gxr = gx.row_mut(r);
                            for o in 0..out_dim {
                                let gv = gr[o];
                                if gv != 0.0 {
                                    for (gxv, &wvv) in gxr.iter_mut().zip(wv.row(o)) {
                                        *gxv += gv * wvv;
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Relu { x } => {
                    let xv = self.value(x);
                    let gx = grads[x.0].as_mut_slice();
                    for ((gxv, &xvv), &gv) in gx.iter_mut().zip(xv.as_slice()).zip(g.as_slice()) {
                        if xvv > 0.0 {
                            *gxv += gv;
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    let yv = &self.nodes[idx].value;
                    let gx = grads[x.0].as_mut_slice();
                    for ((gxv, &yvv), &gv) in gx.iter_mut().zip(yv.as_slice()).zip(g.as_slice()) {
                        *gxv += yvv * (1.0 - yvv) * gv;
                    }
                }
                Op::OneMinus { x } => {
                    let gx = grads[x.0].as_mut_slice();
                    for (gxv, &gv) in gx.iter_mut().zip(g.as_slice()) {
                        *gxv -= gv;
                    }
                }
                Op::Add { a, b } => {
                    for id in [a, b] {
                        let ga = grads[id.0].as_mut_slice();
                        for (gav, &gv) in ga.iter_mut().zip(g.as_slice()) {
                            *gav += gv;
                        }
                    }
                }
                Op::Sub { a, b } => {
                    {
                        let ga = grads[a.0].as_mut_slice();
                        for (gav, &gv) in ga.iter_mut().zip(g.as_slice()) {
                            *gav += gv;
                        }
                    }
                    let gb = grads[b.0].as_mut_slice();
                    for (gbv, &gv) in gb.iter_mut().zip(g.as_slice()) {
                        *gbv -= gv;
                    }
                }
                Op::Mul { a, b } => {
                    {
                        let bv = self.value(b).as_slice().to_vec();
                        let ga = grads[a.0].as_mut_slice();
                        for ((gav, bvv), &gv) in ga.iter_mut().zip(bv).zip(g.as_slice()) {
                            *gav += bvv * gv;
                        }
                    }
                    let av = self.value(a).as_slice().to_vec();
                    let gb = grads[b.0].as_mut_slice();
                    for ((gbv, avv), &gv) in gb.iter_mut().zip(av).zip(g.as_slice()) {
                        *gbv += avv * gv;
                    }
                }
                Op::ConcatCols { a, b } => {
                    let ca = self.value(a).cols();
                    let rows = g.rows();
                    {
                        let ga = &mut grads[a.0];
                        for r in 0..rows {
                            for (gav, &gv) in ga.row_mut(r).iter_mut().zip(&g.row(r)[..ca]) {
                                *gav += gv;
                            }
                        }
                    }
                    let gb = &mut grads[b.0];
                    for r in 0..rows {
                        for (gbv, &gv) in gb.row_mut(r).iter_mut().zip(&g.row(r)[ca..]) {
                            *gbv += gv;
                        }
                    }
                }
                Op::SliceCols { x, start, len } => {
                    let gx = &mut grads[x.0];
                    for r in 0..g.rows() {
                        let gxr = &mut gx.row_mut(r)[start..start + len];
                        for (gxv, &gv) in gxr.iter_mut().zip(g.row(r)) {
                            *gxv += gv;
                        }
                    }
                }
                Op::SoftmaxRows { x, temperature } => {
                    let yv = &self.nodes[idx].value;
                    let gx = &mut grads[x.0];
                    for r in 0..yv.rows() {
                        let yr = yv.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(y, gv)| y * gv).sum();
                        for ((gxv, &yvv), &gv) in
                            gx.row_mut(r).iter_mut().zip(yr).zip(gr)
                        {
                            *gxv += yvv * (gv - dot) / temperature;
                        }
                    }
                }
                Op::RowDot { a, b } => {
                    {
                        let bv = self.value(b).as_slice().to_vec();
                        let ga = &mut grads[a.0];
                        for r in 0..ga.rows() {
                            let gv = g.row(r)[0];
                            let cols = ga.cols();
                            for (gav, bvv) in
                                ga.row_mut(r).iter_mut().zip(&bv[r * cols..(r + 1) * cols])
                            {
                                *gav += gv * bvv;
                            }
                        }
                    }
                    let av = self.value(a).as_slice().to_vec();
                    let gb = &mut grads[b.0];
                    for r in 0..gb.rows() {
                        let gv = g.row(r)[0];
                        let cols = gb.cols();
                        for (gbv, avv) in
                            gb.row_mut(r).iter_mut().zip(&av[r * cols..(r + 1) * cols])
                        {
                            *gbv += gv * avv;
                        }
                    }
                }
                Op::Scale { x, factor } => {
                    let gx = grads[x.0].as_mut_slice();
                    for (gxv, &gv) in gx.iter_mut().zip(g.as_slice()) {
                        *gxv += factor * gv;
                    }
                }
                Op::ColMul { scale, x } => {
                    {
                        let xv = self.value(x).as_slice().to_vec();
                        let gs = &mut grads[scale.0];
                        let cols = self.value(x).cols();
                        for r in 0..gs.rows() {
                            let acc: f64 = g
                                .row(r)
                                .iter()
                                .zip(&xv[r * cols..(r + 1) * cols])
                                .map(|(gv, xvv)| gv * xvv)
                                .sum();
                            gs.row_mut(r)[0] += acc;
                        }
                    }
                    let sv = self.value(scale).as_slice().to_vec();
                    let gx = &mut grads[x.0];
                    for r in 0..gx.rows() {
                        let s = sv[r];
                        for (gxv, &gv) in gx.row_mut(r).iter_mut().zip(g.row(r)) {
                            *gxv += s * gv;
                        }
                    }
                }
                Op::Abs { x } => {
                    let xv = self.value(x);
                    let gx = grads[x.0].as_mut_slice();
                    for ((gxv, &xvv), &gv) in gx.iter_mut().zip(xv.as_slice()).zip(g.as_slice()) {
                        // Subgradient 0 at the kink.
                        if xvv > 0.0 {
                            *gxv += gv;
                        } else if xvv < 0.0 {
                            *gxv -= gv;
                        }
                    }
                }
                Op::Square { x } => {
                    let xv = self.value(x);
                    let gx = grads[x.0].as_mut_slice();
                    for ((gxv, &xvv), &gv) in gx.iter_mut().zip(xv.as_slice()).zip(g.as_slice()) {
                        *gxv += 2.0 * xvv * gv;
                    }
                }
                Op::MeanAll { x } => {
                    let n = self.value(x).len() as f64;
                    let gv = g.as_slice()[0] / n;
                    let gx = grads[x.0].as_mut_slice();
                    for gxv in gx.iter_mut() {
                        *gxv += gv;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}
