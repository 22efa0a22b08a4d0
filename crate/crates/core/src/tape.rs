//! Reverse-mode automatic differentiation on a flat tape of vector-valued
//! nodes.
//!
//! The recurrent network unrolls over dozens of days per update, so the tape
//! works on whole vectors (gate activations, windows, quantile heads) rather
//! than scalars: one node per operation keeps the graph small and the backward
//! sweep cache-friendly. Node values live in a single arena that is reused
//! between updates, so steady-state training allocates almost nothing.
//!
//! Every operation has a closed-form adjoint. The only non-smooth op, the
//! pinball loss, uses the zero element of its subgradient at the kink.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major matrix; vectors are `rows x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Column vector from raw data.
    pub fn vector(data: Vec<f64>) -> Self {
        Tensor { rows: data.len(), cols: 1, data }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![v] }
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

    /// Elementwise check that every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Handle to a named parameter tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Named collection of trainable tensors. Insertion order is stable and is the
/// order gradients, optimizer state and checkpoints use.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor under `name`. Panics on duplicate names: parameter
    /// names double as checkpoint keys and must be unique.
    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name '{name}'"
        );
        let id = self.tensors.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor);
        ParamId(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }
}

/// Gradient accumulator shaped like a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct GradStore {
    tensors: Vec<Tensor>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamStore) -> Self {
        GradStore {
            tensors: params
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.rows, t.cols))
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.tensors.iter_mut()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    /// Constant leaf; no gradient flows into it.
    Leaf,
    /// Leaf bound to a parameter tensor (flattened row-major).
    Param(ParamId),
    /// `W x (+ b)` with `W` and optional `b` taken from the parameter store.
    Affine { w: ParamId, b: Option<ParamId>, x: NodeId },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// `a * x + b` with scalar constants; only the slope matters to the
    /// adjoint, so the offset is not carried on the graph.
    AxPlusB { x: NodeId, a: f64 },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Concat(Vec<NodeId>),
    Slice { x: NodeId, start: usize },
    /// Length-1 node replicated to a longer vector.
    Broadcast(NodeId),
    /// Arithmetic mean reduced to a length-1 node.
    Mean(NodeId),
    /// Mean pinball loss `mean((x - y) * (q - [x < y]))` over the components
    /// of `target` x and prediction y; length-1 output.
    PinballMean { target: NodeId, pred: NodeId, q: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    off: usize,
    len: usize,
}

/// Append-only computation graph. Build with the op methods, read values with
/// [`Tape::value`], differentiate with [`Tape::backward`], and reuse via
/// [`Tape::clear`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    values: Vec<f64>,
    adjoint: Vec<f64>,
    reached: Vec<bool>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all nodes but keeps allocations for reuse.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.values.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id.0];
        &self.values[n.off..n.off + n.len]
    }

    pub fn scalar_value(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        debug_assert_eq!(v.len(), 1, "scalar_value on a non-scalar node");
        v[0]
    }

    pub fn len_of(&self, id: NodeId) -> usize {
        self.nodes[id.0].len
    }

    fn push(&mut self, op: Op, len: usize) -> NodeId {
        let off = self.values.len();
        self.values.resize(off + len, 0.0);
        self.nodes.push(Node { op, off, len });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constv(&mut self, vals: &[f64]) -> NodeId {
        let id = self.push(Op::Leaf, vals.len());
        let n = &self.nodes[id.0];
        self.values[n.off..n.off + n.len].copy_from_slice(vals);
        id
    }

    pub fn const_scalar(&mut self, v: f64) -> NodeId {
        self.constv(&[v])
    }

    /// Zero constant of the given length (fresh recurrent state).
    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.push(Op::Leaf, len)
    }

    /// Leaf view of a parameter tensor, flattened row-major.
    pub fn param(&mut self, params: &ParamStore, id: ParamId) -> NodeId {
        let t = params.get(id);
        let node = self.push(Op::Param(id), t.len());
        let n = &self.nodes[node.0];
        self.values[n.off..n.off + n.len].copy_from_slice(&t.data);
        node
    }

    /// `W x + b`. `x` must have length `W.cols`; the result has length
    /// `W.rows`, as does `b` when present.
    pub fn affine(
        &mut self,
        params: &ParamStore,
        w: ParamId,
        b: Option<ParamId>,
        x: NodeId,
    ) -> NodeId {
        let wt = params.get(w);
        assert_eq!(
            self.nodes[x.0].len,
            wt.cols,
            "affine: input length does not match '{}' columns",
            params.name(w)
        );
        if let Some(bid) = b {
            assert_eq!(
                params.get(bid).len(),
                wt.rows,
                "affine: bias length does not match '{}' rows",
                params.name(w)
            );
        }
        let (rows, cols) = (wt.rows, wt.cols);
        let out = self.push(Op::Affine { w, b, x }, rows);
        let xo = self.nodes[x.0].off;
        let oo = self.nodes[out.0].off;
        for r in 0..rows {
            let wrow = &wt.data[r * cols..(r + 1) * cols];
            let mut acc = match b {
                Some(bid) => params.get(bid).data[r],
                None => 0.0,
            };
            for (c, w) in wrow.iter().enumerate() {
                acc += w * self.values[xo + c];
            }
            self.values[oo + r] = acc;
        }
        out
    }

    fn binary(&mut self, a: NodeId, b: NodeId, op: Op, f: impl Fn(f64, f64) -> f64) -> NodeId {
        let len = self.nodes[a.0].len;
        assert_eq!(len, self.nodes[b.0].len, "elementwise op on mismatched lengths");
        let out = self.push(op, len);
        let (ao, bo, oo) = (self.nodes[a.0].off, self.nodes[b.0].off, self.nodes[out.0].off);
        for i in 0..len {
            self.values[oo + i] = f(self.values[ao + i], self.values[bo + i]);
        }
        out
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// `a * x + b` with scalar constants; covers scaling, offsets and
    /// complements like `1 - x`.
    pub fn axpb(&mut self, x: NodeId, a: f64, b: f64) -> NodeId {
        let len = self.nodes[x.0].len;
        let out = self.push(Op::AxPlusB { x, a }, len);
        let (xo, oo) = (self.nodes[x.0].off, self.nodes[out.0].off);
        for i in 0..len {
            self.values[oo + i] = a * self.values[xo + i] + b;
        }
        out
    }

    fn unary(&mut self, x: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let len = self.nodes[x.0].len;
        let out = self.push(op, len);
        let (xo, oo) = (self.nodes[x.0].off, self.nodes[out.0].off);
        for i in 0..len {
            self.values[oo + i] = f(self.values[xo + i]);
        }
        out
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Sigmoid(x), crate::math::sigmoid)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Tanh(x), crate::math::tanh)
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Exp(x), crate::math::exp)
    }

    pub fn ln(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Ln(x), crate::math::ln)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let len = parts.iter().map(|p| self.nodes[p.0].len).sum();
        let out = self.push(Op::Concat(parts.to_vec()), len);
        let mut oo = self.nodes[out.0].off;
        for p in parts {
            let (po, pl) = (self.nodes[p.0].off, self.nodes[p.0].len);
            self.values.copy_within(po..po + pl, oo);
            oo += pl;
        }
        out
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        assert!(
            start + len <= self.nodes[x.0].len,
            "slice [{start}, {}) out of a length-{} node",
            start + len,
            self.nodes[x.0].len
        );
        let out = self.push(Op::Slice { x, start }, len);
        let xo = self.nodes[x.0].off + start;
        let oo = self.nodes[out.0].off;
        self.values.copy_within(xo..xo + len, oo);
        out
    }

    /// Replicates a length-1 node to `len` components.
    pub fn broadcast(&mut self, x: NodeId, len: usize) -> NodeId {
        assert_eq!(self.nodes[x.0].len, 1, "broadcast source must be length 1");
        let out = self.push(Op::Broadcast(x), len);
        let v = self.values[self.nodes[x.0].off];
        let oo = self.nodes[out.0].off;
        for i in 0..len {
            self.values[oo + i] = v;
        }
        out
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let len = self.nodes[x.0].len;
        assert!(len > 0, "mean of an empty node");
        let out = self.push(Op::Mean(x), 1);
        let xo = self.nodes[x.0].off;
        let s: f64 = self.values[xo..xo + len].iter().sum();
        let oo = self.nodes[out.0].off;
        self.values[oo] = s / len as f64;
        out
    }

    /// Mean pinball (quantile) loss at quantile `q` between `target` and
    /// `pred` (equal lengths): `mean((x - y) * (q - [x < y]))`.
    pub fn pinball_mean(&mut self, target: NodeId, pred: NodeId, q: f64) -> NodeId {
        let len = self.nodes[target.0].len;
        assert_eq!(len, self.nodes[pred.0].len, "pinball on mismatched lengths");
        let out = self.push(Op::PinballMean { target, pred, q }, 1);
        let (to, po) = (self.nodes[target.0].off, self.nodes[pred.0].off);
        let mut acc = 0.0;
        for i in 0..len {
            let x = self.values[to + i];
            let y = self.values[po + i];
            let ind = if x < y { 1.0 } else { 0.0 };
            acc += (x - y) * (q - ind);
        }
        let oo = self.nodes[out.0].off;
        self.values[oo] = acc / len as f64;
        out
    }

    /// Reverse sweep from a length-1 `root`, accumulating parameter gradients
    /// into `grads`. `params` must be the same store the forward pass used,
    /// unmodified since.
    pub fn backward(&mut self, params: &ParamStore, root: NodeId, grads: &mut GradStore) {
        assert_eq!(self.nodes[root.0].len, 1, "backward root must be a scalar");
        self.adjoint.clear();
        self.adjoint.resize(self.values.len(), 0.0);
        self.reached.clear();
        self.reached.resize(self.nodes.len(), false);
        self.adjoint[self.nodes[root.0].off] = 1.0;
        self.reached[root.0] = true;

        for i in (0..=root.0).rev() {
            if !self.reached[i] {
                continue;
            }
            let (off, len) = (self.nodes[i].off, self.nodes[i].len);
            // The ops only reference earlier nodes, so reading the node's own
            // adjoint slice before touching its inputs' slices is safe.
            match self.nodes[i].op.clone() {
                Op::Leaf => {}
                Op::Param(pid) => {
                    let g = grads.get_mut(pid);
                    for k in 0..len {
                        g.data[k] += self.adjoint[off + k];
                    }
                }
                Op::Affine { w, b, x } => {
                    self.reached[x.0] = true;
                    let wt = params.get(w);
                    let (rows, cols) = (wt.rows, wt.cols);
                    let xo = self.nodes[x.0].off;
                    for r in 0..rows {
                        let gy = self.adjoint[off + r];
                        if gy == 0.0 {
                            continue;
                        }
                        let wg = grads.get_mut(w);
                        for c in 0..cols {
                            wg.data[r * cols + c] += gy * self.values[xo + c];
                        }
                        if let Some(bid) = b {
                            grads.get_mut(bid).data[r] += gy;
                        }
                        let wrow = &wt.data[r * cols..(r + 1) * cols];
                        for (c, w) in wrow.iter().enumerate() {
                            self.adjoint[xo + c] += gy * w;
                        }
                    }
                }
                Op::Add(a, b) => {
                    self.reached[a.0] = true;
                    self.reached[b.0] = true;
                    let (ao, bo) = (self.nodes[a.0].off, self.nodes[b.0].off);
                    for k in 0..len {
                        let g = self.adjoint[off + k];
                        self.adjoint[ao + k] += g;
                        self.adjoint[bo + k] += g;
                    }
                }
                Op::Sub(a, b) => {
                    self.reached[a.0] = true;
                    self.reached[b.0] = true;
                    let (ao, bo) = (self.nodes[a.0].off, self.nodes[b.0].off);
                    for k in 0..len {
                        let g = self.adjoint[off + k];
                        self.adjoint[ao + k] += g;
                        self.adjoint[bo + k] -= g;
                    }
                }
                Op::Mul(a, b) => {
                    self.reached[a.0] = true;
                    self.reached[b.0] = true;
                    let (ao, bo) = (self.nodes[a.0].off, self.nodes[b.0].off);
                    for k in 0..len {
                        let g = self.adjoint[off + k];
                        self.adjoint[ao + k] += g * self.values[bo + k];
                        self.adjoint[bo + k] += g * self.values[ao + k];
                    }
                }
                Op::AxPlusB { x, a } => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        self.adjoint[xo + k] += a * self.adjoint[off + k];
                    }
                }
                Op::Sigmoid(x) => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        let s = self.values[off + k];
                        self.adjoint[xo + k] += self.adjoint[off + k] * s * (1.0 - s);
                    }
                }
                Op::Tanh(x) => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        let t = self.values[off + k];
                        self.adjoint[xo + k] += self.adjoint[off + k] * (1.0 - t * t);
                    }
                }
                Op::Exp(x) => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        self.adjoint[xo + k] += self.adjoint[off + k] * self.values[off + k];
                    }
                }
                Op::Ln(x) => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        self.adjoint[xo + k] += self.adjoint[off + k] / self.values[xo + k];
                    }
                }
                Op::Concat(parts) => {
                    let mut pos = off;
                    for p in parts {
                        self.reached[p.0] = true;
                        let (po, pl) = (self.nodes[p.0].off, self.nodes[p.0].len);
                        for k in 0..pl {
                            self.adjoint[po + k] += self.adjoint[pos + k];
                        }
                        pos += pl;
                    }
                }
                Op::Slice { x, start } => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off + start;
                    for k in 0..len {
                        self.adjoint[xo + k] += self.adjoint[off + k];
                    }
                }
                Op::Broadcast(x) => {
                    self.reached[x.0] = true;
                    let xo = self.nodes[x.0].off;
                    for k in 0..len {
                        self.adjoint[xo] += self.adjoint[off + k];
                    }
                }
                Op::Mean(x) => {
                    self.reached[x.0] = true;
                    let (xo, xl) = (self.nodes[x.0].off, self.nodes[x.0].len);
                    let g = self.adjoint[off] / xl as f64;
                    for k in 0..xl {
                        self.adjoint[xo + k] += g;
                    }
                }
                Op::PinballMean { target, pred, q } => {
                    self.reached[target.0] = true;
                    self.reached[pred.0] = true;
                    let (to, po) = (self.nodes[target.0].off, self.nodes[pred.0].off);
                    let pl = self.nodes[pred.0].len;
                    let g = self.adjoint[off] / pl as f64;
                    for k in 0..pl {
                        let x = self.values[to + k];
                        let y = self.values[po + k];
                        // Subgradients are zero at the kink x == y.
                        if x > y {
                            self.adjoint[po + k] -= g * q;
                            self.adjoint[to + k] += g * q;
                        } else if x < y {
                            self.adjoint[po + k] += g * (1.0 - q);
                            self.adjoint[to + k] += g * (q - 1.0);
                        }
                    }
                }
            }
        }
    }
}
