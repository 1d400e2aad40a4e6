//! Reverse-mode automatic differentiation over a recorded op tape.
//!
//! A forward pass records ops on a [`Tape`]; [`Tape::backward`] replays them
//! in reverse, accumulating vector-Jacobian products. The op set is exactly
//! what the model needs: linear maps, rectifier, neighbor-mean aggregation,
//! column concatenation, the two fused BCE losses, and scalar plumbing for
//! the L2 penalty.

use std::rc::Rc;

use super::tensor::Tensor;
use super::SageError;

/// Probabilities are clamped to [EPS, 1-EPS] inside both BCE losses.
pub const BCE_EPS: f64 = 1e-7;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Handle to a tape entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Shared in-adjacency: `adj[v]` lists message sources of node v.
pub type AdjList = Vec<Vec<u32>>;

enum Op {
    Leaf,
    /// y = x . W^T + b with x:(n,in), W:(out,in), b:(out).
    Linear { x: Var, w: Var, b: Var },
    Relu { x: Var },
    /// out[v] = mean of x rows over adj[v]; zero row when adj[v] is empty.
    NeighborMean { x: Var, adj: Rc<AdjList> },
    ConcatCols { a: Var, b: Var },
    /// Mean over masked nodes of binary cross-entropy on logistic(logit).
    MaskedBce {
        logits: Var,
        labels: Rc<Vec<f64>>,
        mask: Rc<Vec<u32>>,
    },
    /// Mean BCE over node pairs scored by logistic(dot(emb_u, emb_v)).
    EdgeBce {
        emb: Var,
        pairs: Rc<Vec<(u32, u32)>>,
        labels: Rc<Vec<f64>>,
    },
    SumSquares { x: Var },
    Add { a: Var, b: Var },
    Scale { x: Var, factor: f64 },
}

/// Gradient buffers produced by a backward pass, indexed by [`Var`].
pub struct Gradients {
    inner: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.inner[v.0].as_deref()
    }

    /// Gradient of `v`, with "no flow" reported as exact zeros.
    pub fn dense(&self, v: Var, len: usize) -> Vec<f64> {
        match &self.inner[v.0] {
            Some(g) => g.clone(),
            None => vec![0.0; len],
        }
    }
}

/// Recorded forward computation.
#[derive(Default)]
pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, tensor: Tensor, op: Op) -> Result<Var, SageError> {
        if tensor.values().iter().any(|v| !v.is_finite()) {
            return Err(SageError::NonFinite(op_name(&op).into()));
        }
        self.values.push(tensor);
        self.ops.push(op);
        Ok(Var(self.values.len() - 1))
    }

    pub fn leaf(&mut self, tensor: Tensor) -> Result<Var, SageError> {
        self.push(tensor, Op::Leaf)
    }

    #[allow(clippy::needless_range_loop)] // explicit index kernels
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, SageError> {
        let (xs, ws, bs) = (self.value(x), self.value(w), self.value(b));
        let (n, d_in) = (xs.rows(), xs.cols());
        let (d_out, w_in) = (ws.rows(), ws.cols());
        if w_in != d_in || bs.len() != d_out {
            return Err(SageError::ShapeMismatch(format!(
                "linear: x ({n}x{d_in}) vs W ({d_out}x{w_in}) vs b ({})",
                bs.len()
            )));
        }
        let mut out = vec![0.0; n * d_out];
        for i in 0..n {
            let xi = xs.row(i);
            let oi = &mut out[i * d_out..(i + 1) * d_out];
            for j in 0..d_out {
                let wj = ws.row(j);
                let mut acc = bs.values()[j];
                for k in 0..d_in {
                    acc += xi[k] * wj[k];
                }
                oi[j] = acc;
            }
        }
        let tensor = Tensor::from_values(&[n, d_out], out)?;
        self.push(tensor, Op::Linear { x, w, b })
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, SageError> {
        let xs = self.value(x);
        let out: Vec<f64> = xs.values().iter().map(|&v| v.max(0.0)).collect();
        let tensor = Tensor::from_values(xs.shape(), out)?;
        self.push(tensor, Op::Relu { x })
    }

    pub fn neighbor_mean(&mut self, x: Var, adj: Rc<AdjList>) -> Result<Var, SageError> {
        let xs = self.value(x);
        let (n, d) = (xs.rows(), xs.cols());
        if adj.len() != n {
            return Err(SageError::ShapeMismatch(format!(
                "neighbor_mean: {} adjacency rows for {n} nodes",
                adj.len()
            )));
        }
        let mut out = vec![0.0; n * d];
        for (v, sources) in adj.iter().enumerate() {
            if sources.is_empty() {
                continue;
            }
            let row = &mut out[v * d..(v + 1) * d];
            for &u in sources {
                let xu = xs.row(u as usize);
                for k in 0..d {
                    row[k] += xu[k];
                }
            }
            let inv = 1.0 / sources.len() as f64;
            for r in row.iter_mut() {
                *r *= inv;
            }
        }
        let tensor = Tensor::from_values(&[n, d], out)?;
        self.push(tensor, Op::NeighborMean { x, adj })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, SageError> {
        let (at, bt) = (self.value(a), self.value(b));
        let (n, ca) = (at.rows(), at.cols());
        let cb = bt.cols();
        if bt.rows() != n {
            return Err(SageError::ShapeMismatch(format!(
                "concat_cols: {n} vs {} rows",
                bt.rows()
            )));
        }
        let mut out = Vec::with_capacity(n * (ca + cb));
        for i in 0..n {
            out.extend_from_slice(at.row(i));
            out.extend_from_slice(bt.row(i));
        }
        let tensor = Tensor::from_values(&[n, ca + cb], out)?;
        self.push(tensor, Op::ConcatCols { a, b })
    }

    pub fn masked_bce(
        &mut self,
        logits: Var,
        labels: Rc<Vec<f64>>,
        mask: Rc<Vec<u32>>,
    ) -> Result<Var, SageError> {
        if mask.is_empty() {
            return Err(SageError::EmptyMask);
        }
        let ls = self.value(logits);
        let n = ls.len();
        if labels.len() != n {
            return Err(SageError::ShapeMismatch(format!(
                "masked_bce: {} labels for {n} logits",
                labels.len()
            )));
        }
        if let Some(&bad) = mask.iter().find(|&&i| i as usize >= n) {
            return Err(SageError::ShapeMismatch(format!(
                "masked_bce: mask index {bad} out of range {n}"
            )));
        }
        let mut total = 0.0;
        for &i in mask.iter() {
            let i = i as usize;
            let p = sigmoid(ls.values()[i]).clamp(BCE_EPS, 1.0 - BCE_EPS);
            let y = labels[i];
            total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        let loss = total / mask.len() as f64;
        let tensor = Tensor::from_values(&[1], vec![loss])?;
        self.push(tensor, Op::MaskedBce { logits, labels, mask })
    }

    pub fn edge_bce(
        &mut self,
        emb: Var,
        pairs: Rc<Vec<(u32, u32)>>,
        labels: Rc<Vec<f64>>,
    ) -> Result<Var, SageError> {
        if pairs.is_empty() {
            return Err(SageError::EmptyMask);
        }
        if pairs.len() != labels.len() {
            return Err(SageError::ShapeMismatch(format!(
                "edge_bce: {} pairs vs {} labels",
                pairs.len(),
                labels.len()
            )));
        }
        let es = self.value(emb);
        let n = es.rows();
        if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u as usize >= n || v as usize >= n) {
            return Err(SageError::ShapeMismatch(format!(
                "edge_bce: pair ({u},{v}) out of range {n}"
            )));
        }
        let mut total = 0.0;
        for (&(u, v), &y) in pairs.iter().zip(labels.iter()) {
            let z = dot(es.row(u as usize), es.row(v as usize));
            let p = sigmoid(z).clamp(BCE_EPS, 1.0 - BCE_EPS);
            total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        let loss = total / pairs.len() as f64;
        let tensor = Tensor::from_values(&[1], vec![loss])?;
        self.push(tensor, Op::EdgeBce { emb, pairs, labels })
    }

    pub fn sum_squares(&mut self, x: Var) -> Result<Var, SageError> {
        let total: f64 = self.value(x).values().iter().map(|v| v * v).sum();
        let tensor = Tensor::from_values(&[1], vec![total])?;
        self.push(tensor, Op::SumSquares { x })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, SageError> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(SageError::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                at.shape(),
                bt.shape()
            )));
        }
        let out: Vec<f64> = at
            .values()
            .iter()
            .zip(bt.values())
            .map(|(x, y)| x + y)
            .collect();
        let tensor = Tensor::from_values(at.shape(), out)?;
        self.push(tensor, Op::Add { a, b })
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, SageError> {
        let xs = self.value(x);
        let out: Vec<f64> = xs.values().iter().map(|v| v * factor).collect();
        let tensor = Tensor::from_values(xs.shape(), out)?;
        self.push(tensor, Op::Scale { x, factor })
    }

    /// Reverse pass from a scalar loss. Returns one gradient buffer per
    /// reachable entry; aborts with `NonFinite` if any gradient degenerates.
    #[allow(clippy::needless_range_loop)] // explicit index kernels
    pub fn backward(&self, loss: Var) -> Result<Gradients, SageError> {
        if self.value(loss).len() != 1 {
            return Err(SageError::ShapeMismatch(
                "backward requires a scalar loss".into(),
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.values.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..self.ops.len()).rev() {
            let Some(gout) = grads[idx].take() else { continue };
            match &self.ops[idx] {
                Op::Leaf => {
                    grads[idx] = Some(gout);
                    continue;
                }
                Op::Linear { x, w, b } => {
                    let xs = self.value(*x);
                    let ws = self.value(*w);
                    let (n, d_in) = (xs.rows(), xs.cols());
                    let d_out = ws.rows();
                    {
                        let gx = grad_slot(&mut grads, *x, n * d_in);
                        for i in 0..n {
                            let gi = &gout[i * d_out..(i + 1) * d_out];
                            let gxi = &mut gx[i * d_in..(i + 1) * d_in];
                            for j in 0..d_out {
                                let gij = gi[j];
                                if gij == 0.0 {
                                    continue;
                                }
                                let wj = ws.row(j);
                                for k in 0..d_in {
                                    gxi[k] += gij * wj[k];
                                }
                            }
                        }
                    }
                    {
                        let gw = grad_slot(&mut grads, *w, d_out * d_in);
                        for i in 0..n {
                            let xi = xs.row(i);
                            let gi = &gout[i * d_out..(i + 1) * d_out];
                            for j in 0..d_out {
                                let gij = gi[j];
                                if gij == 0.0 {
                                    continue;
                                }
                                let gwj = &mut gw[j * d_in..(j + 1) * d_in];
                                for k in 0..d_in {
                                    gwj[k] += gij * xi[k];
                                }
                            }
                        }
                    }
                    {
                        let gb = grad_slot(&mut grads, *b, d_out);
                        for i in 0..n {
                            let gi = &gout[i * d_out..(i + 1) * d_out];
                            for j in 0..d_out {
                                gb[j] += gi[j];
                            }
                        }
                    }
                }
                Op::Relu { x } => {
                    let xs = self.value(*x);
                    let gx = grad_slot(&mut grads, *x, xs.len());
                    for (k, &v) in xs.values().iter().enumerate() {
                        if v > 0.0 {
                            gx[k] += gout[k];
                        }
                    }
                }
                Op::NeighborMean { x, adj } => {
                    let xs = self.value(*x);
                    let d = xs.cols();
                    let gx = grad_slot(&mut grads, *x, xs.len());
                    for (v, sources) in adj.iter().enumerate() {
                        if sources.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / sources.len() as f64;
                        let gv = &gout[v * d..(v + 1) * d];
                        for &u in sources {
                            let gu = &mut gx[u as usize * d..(u as usize + 1) * d];
                            for k in 0..d {
                                gu[k] += gv[k] * inv;
                            }
                        }
                    }
                }
                Op::ConcatCols { a, b } => {
                    let (ca, cb) = (self.value(*a).cols(), self.value(*b).cols());
                    let n = self.value(*a).rows();
                    {
                        let ga = grad_slot(&mut grads, *a, n * ca);
                        for i in 0..n {
                            let src = &gout[i * (ca + cb)..i * (ca + cb) + ca];
                            let dst = &mut ga[i * ca..(i + 1) * ca];
                            for k in 0..ca {
                                dst[k] += src[k];
                            }
                        }
                    }
                    {
                        let gb = grad_slot(&mut grads, *b, n * cb);
                        for i in 0..n {
                            let src = &gout[i * (ca + cb) + ca..(i + 1) * (ca + cb)];
                            let dst = &mut gb[i * cb..(i + 1) * cb];
                            for k in 0..cb {
                                dst[k] += src[k];
                            }
                        }
                    }
                }
                Op::MaskedBce { logits, labels, mask } => {
                    let ls = self.value(*logits);
                    let g = gout[0] / mask.len() as f64;
                    let gl = grad_slot(&mut grads, *logits, ls.len());
                    for &i in mask.iter() {
                        let i = i as usize;
                        let p = sigmoid(ls.values()[i]);
                        // In the clamped region the loss is locally constant.
                        if p > BCE_EPS && p < 1.0 - BCE_EPS {
                            gl[i] += g * (p - labels[i]);
                        }
                    }
                }
                Op::EdgeBce { emb, pairs, labels } => {
                    let es = self.value(*emb);
                    let d = es.cols();
                    let g = gout[0] / pairs.len() as f64;
                    let ge = grad_slot(&mut grads, *emb, es.len());
                    for (&(u, v), &y) in pairs.iter().zip(labels.iter()) {
                        let (u, v) = (u as usize, v as usize);
                        let z = dot(es.row(u), es.row(v));
                        let p = sigmoid(z);
                        if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                            continue;
                        }
                        let coef = g * (p - y);
                        for k in 0..d {
                            ge[u * d + k] += coef * es.row(v)[k];
                            ge[v * d + k] += coef * es.row(u)[k];
                        }
                    }
                }
                Op::SumSquares { x } => {
                    let xs = self.value(*x);
                    let gx = grad_slot(&mut grads, *x, xs.len());
                    for (k, &v) in xs.values().iter().enumerate() {
                        gx[k] += 2.0 * v * gout[0];
                    }
                }
                Op::Add { a, b } => {
                    let len = gout.len();
                    {
                        let ga = grad_slot(&mut grads, *a, len);
                        for k in 0..len {
                            ga[k] += gout[k];
                        }
                    }
                    {
                        let gb = grad_slot(&mut grads, *b, len);
                        for k in 0..len {
                            gb[k] += gout[k];
                        }
                    }
                }
                Op::Scale { x, factor } => {
                    let len = gout.len();
                    let gx = grad_slot(&mut grads, *x, len);
                    for k in 0..len {
                        gx[k] += gout[k] * factor;
                    }
                }
            }
        }

        for g in grads.iter().flatten() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(SageError::NonFinite("gradient".into()));
            }
        }
        Ok(Gradients { inner: grads })
    }
}

fn grad_slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Linear { .. } => "linear",
        Op::Relu { .. } => "relu",
        Op::NeighborMean { .. } => "neighbor_mean",
        Op::ConcatCols { .. } => "concat_cols",
        Op::MaskedBce { .. } => "masked_bce",
        Op::EdgeBce { .. } => "edge_bce",
        Op::SumSquares { .. } => "sum_squares",
        Op::Add { .. } => "add",
        Op::Scale { .. } => "scale",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tape: &mut Tape, shape: &[usize], values: Vec<f64>) -> Var {
        tape.leaf(Tensor::from_values(shape, values).unwrap()).unwrap()
    }

    #[test]
    fn neighbor_mean_averages_rows() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, &[3, 2], vec![1.0, 3.0, 3.0, 5.0, 0.0, 0.0]);
        let adj = Rc::new(vec![vec![], vec![], vec![0u32, 1]]);
        let m = tape.neighbor_mean(x, adj).unwrap();
        assert_eq!(tape.value(m).row(2), &[2.0, 4.0]);
        assert_eq!(tape.value(m).row(0), &[0.0, 0.0]);
    }

    #[test]
    fn masked_bce_at_half_is_ln_two() {
        let mut tape = Tape::new();
        let logits = leaf(&mut tape, &[4], vec![0.0; 4]);
        let loss = tape
            .masked_bce(
                logits,
                Rc::new(vec![1.0, 0.0, 1.0, 0.0]),
                Rc::new(vec![0, 1, 2, 3]),
            )
            .unwrap();
        let got = tape.value(loss).values()[0];
        assert!((got - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn masked_bce_perfect_predictions_near_zero() {
        let mut tape = Tape::new();
        let logits = leaf(&mut tape, &[2], vec![30.0, -30.0]);
        let loss = tape
            .masked_bce(logits, Rc::new(vec![1.0, 0.0]), Rc::new(vec![0, 1]))
            .unwrap();
        assert!(tape.value(loss).values()[0] <= 1e-6);
    }

    #[test]
    fn masked_bce_matches_scalar_recomputation() {
        let logit_vals = [0.3, -1.2, 2.0, 0.0, -0.4];
        let label_vals = [1.0, 0.0, 1.0, 1.0, 0.0];
        let mask = [0u32, 2, 4];
        let mut tape = Tape::new();
        let logits = leaf(&mut tape, &[5], logit_vals.to_vec());
        let loss = tape
            .masked_bce(
                logits,
                Rc::new(label_vals.to_vec()),
                Rc::new(mask.to_vec()),
            )
            .unwrap();
        // Independent scalar recomputation.
        let mut expect = 0.0;
        for &i in &mask {
            let p = 1.0 / (1.0 + (-logit_vals[i as usize]).exp());
            let y = label_vals[i as usize];
            expect -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        expect /= mask.len() as f64;
        assert!((tape.value(loss).values()[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_rejected() {
        let mut tape = Tape::new();
        let logits = leaf(&mut tape, &[2], vec![0.0, 0.0]);
        assert!(matches!(
            tape.masked_bce(logits, Rc::new(vec![0.0, 1.0]), Rc::new(vec![])),
            Err(SageError::EmptyMask)
        ));
    }

    #[test]
    fn unused_leaf_has_no_flow() {
        let mut tape = Tape::new();
        let used = leaf(&mut tape, &[2], vec![1.0, 2.0]);
        let unused = leaf(&mut tape, &[2], vec![3.0, 4.0]);
        let loss = tape.sum_squares(used).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(used).unwrap(), &[2.0, 4.0]);
        assert!(grads.get(unused).is_none());
        assert_eq!(grads.dense(unused, 2), vec![0.0, 0.0]);
    }

    #[test]
    fn doubling_loss_doubles_gradients() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, &[3], vec![0.5, -1.0, 2.0]);
        let loss = tape.sum_squares(x).unwrap();
        let double = tape.scale(loss, 2.0).unwrap();

        let g1 = tape.backward(loss).unwrap();
        let g2 = tape.backward(double).unwrap();
        for (a, b) in g1.get(x).unwrap().iter().zip(g2.get(x).unwrap()) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_requires_scalar() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, &[2], vec![1.0, 2.0]);
        assert!(matches!(
            tape.backward(x),
            Err(SageError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn linear_shape_mismatch_rejected() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, &[1, 3], vec![1.0, 2.0, 3.0]);
        let w = leaf(&mut tape, &[2, 2], vec![1.0; 4]);
        let b = leaf(&mut tape, &[2], vec![0.0; 2]);
        assert!(matches!(
            tape.linear(x, w, b),
            Err(SageError::ShapeMismatch(_))
        ));
    }

    /// Central finite differences through an arbitrary scalar-valued
    /// computation rebuilt per evaluation.
    fn finite_diff(
        build: impl Fn(&[f64]) -> f64,
        at: &[f64],
        h: f64,
    ) -> Vec<f64> {
        let mut grad = vec![0.0; at.len()];
        for i in 0..at.len() {
            let mut plus = at.to_vec();
            let mut minus = at.to_vec();
            plus[i] += h;
            minus[i] -= h;
            grad[i] = (build(&plus) - build(&minus)) / (2.0 * h);
        }
        grad
    }

    #[test]
    fn composite_graph_matches_finite_differences() {
        // Two-layer style composite over a tiny graph, differentiated w.r.t.
        // the input feature matrix.
        let adj: Rc<AdjList> = Rc::new(vec![vec![1, 2], vec![0], vec![]]);
        let x0: Vec<f64> = vec![0.3, -0.2, 0.8, 0.5, -0.6, 0.1];
        let labels = Rc::new(vec![1.0, 0.0, 1.0]);
        let mask = Rc::new(vec![0u32, 1]);
        let w_vals: Vec<f64> = vec![0.4, -0.3, 0.2, 0.1, -0.5, 0.6, 0.7, -0.1];
        let head_vals = vec![0.9, -0.8];

        let run = |x_in: &[f64]| -> (f64, Tape, Var) {
            let mut tape = Tape::new();
            let x = tape
                .leaf(Tensor::from_values(&[3, 2], x_in.to_vec()).unwrap())
                .unwrap();
            let w = tape
                .leaf(Tensor::from_values(&[2, 4], w_vals.clone()).unwrap())
                .unwrap();
            let b = tape
                .leaf(Tensor::from_values(&[2], vec![0.05, -0.02]).unwrap())
                .unwrap();
            let m = tape.neighbor_mean(x, adj.clone()).unwrap();
            let cat = tape.concat_cols(x, m).unwrap();
            let h = tape.linear(cat, w, b).unwrap();
            let h = tape.relu(h).unwrap();
            let hw = tape
                .leaf(Tensor::from_values(&[1, 2], head_vals.clone()).unwrap())
                .unwrap();
            let hb = tape.leaf(Tensor::from_values(&[1], vec![0.0]).unwrap()).unwrap();
            let logits = tape.linear(h, hw, hb).unwrap();
            let loss = tape
                .masked_bce(logits, labels.clone(), mask.clone())
                .unwrap();
            let val = tape.value(loss).values()[0];
            (val, tape, x)
        };

        let (_, tape, x) = run(&x0);
        let grads = tape.backward(tape_loss(&tape)).unwrap();
        let analytic = grads.get(x).unwrap().to_vec();
        let numeric = finite_diff(|xs| run(xs).0, &x0, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            let denom = a.abs().max(n.abs()).max(1.0);
            assert!(
                ((a - n) / denom).abs() < 1e-6,
                "analytic {a} vs numeric {n}"
            );
        }
    }

    /// The loss is always the last entry in these tests.
    fn tape_loss(tape: &Tape) -> Var {
        Var(tape.len() - 1)
    }

    #[test]
    fn edge_bce_matches_finite_differences() {
        let e0: Vec<f64> = vec![0.4, -0.2, 0.3, 0.7, -0.5, 0.1, 0.2, 0.6];
        let pairs = Rc::new(vec![(0u32, 1u32), (2, 3), (0, 3)]);
        let labels = Rc::new(vec![1.0, 0.0, 1.0]);

        let run = |vals: &[f64]| -> (f64, Tape, Var) {
            let mut tape = Tape::new();
            let e = tape
                .leaf(Tensor::from_values(&[4, 2], vals.to_vec()).unwrap())
                .unwrap();
            let loss = tape.edge_bce(e, pairs.clone(), labels.clone()).unwrap();
            (tape.value(loss).values()[0], tape, e)
        };

        let (_, tape, e) = run(&e0);
        let grads = tape.backward(tape_loss(&tape)).unwrap();
        let analytic = grads.get(e).unwrap().to_vec();
        let numeric = finite_diff(|vals| run(vals).0, &e0, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            let denom = a.abs().max(n.abs()).max(1.0);
            assert!(((a - n) / denom).abs() < 1e-6);
        }
    }
}
