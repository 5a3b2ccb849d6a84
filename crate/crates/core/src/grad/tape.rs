//! Tape of recorded operations, replayed in reverse for gradients.

use rand::Rng;

use crate::error::{Error, Result};

use super::conv::{conv1d_backward, conv1d_forward, ConvGeom};
use super::norm::{batchnorm_backward, batchnorm_forward, layernorm_backward, layernorm_forward, NormSaved, RunningStats};
use super::real::gemm;
use super::{Real, Tensor};

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Avg,
    Max,
}

/// Deliberate backward corruption, used as a negative control for gradient checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fault {
    /// ReLU passes the upstream gradient through without masking.
    ReluIgnoresMask,
    /// Convolution weight gradients are multiplied by the factor.
    ScaleConvWeightGrad(f64),
}

enum Op<T> {
    Leaf,
    Conv { x: Var, w: Var, b: Option<Var>, geom: ConvGeom },
    BatchNorm { x: Var, gamma: Var, beta: Var, saved: NormSaved<T>, train: bool },
    Relu { x: Var },
    Add { a: Var, b: Var },
    Pool { x: Var, kind: PoolKind, argmax: Vec<usize> },
    Concat { parts: Vec<Var> },
    LayerNorm { x: Var, gamma: Var, beta: Var, saved: NormSaved<T> },
    Linear { x: Var, w: Var, b: Var },
    Dropout { x: Var, mask: Vec<T> },
    SoftmaxCe { logits: Var, labels: Vec<usize>, probs: Vec<T> },
    WeightedSum { x: Var, weights: Vec<T> },
}

/// A single forward pass. Build it, call [`Graph::backward`] on a scalar, read leaf gradients.
pub struct Graph<T: Real> {
    values: Vec<Tensor<T>>,
    grads: Vec<Option<Vec<T>>>,
    requires: Vec<bool>,
    ops: Vec<Op<T>>,
    fault: Option<Fault>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn take<T: Real>(grads: &mut [Option<Vec<T>>], requires: &[bool], v: Var, len: usize) -> Option<Vec<T>> {
    if !requires[v.0] {
        return None;
    }
    Some(grads[v.0].take().unwrap_or_else(|| vec![T::zero(); len]))
}

fn put<T>(grads: &mut [Option<Vec<T>>], v: Var, buf: Option<Vec<T>>) {
    if let Some(b) = buf {
        grads[v.0] = Some(b);
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { values: Vec::new(), grads: Vec::new(), requires: Vec::new(), ops: Vec::new(), fault: None }
    }

    pub fn with_fault(fault: Fault) -> Self {
        Graph { fault: Some(fault), ..Self::new() }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::NonFinite(format!("forward value of node {}", self.values.len())));
        }
        let req = inputs.iter().any(|v| self.requires[v.0]);
        self.values.push(value);
        self.grads.push(None);
        self.requires.push(req);
        self.ops.push(op);
        Ok(Var(self.values.len() - 1))
    }

    /// Records a leaf; gradients are accumulated for it when `requires_grad`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.values.push(value);
        self.grads.push(None);
        self.requires.push(requires_grad);
        self.ops.push(Op::Leaf);
        Var(self.values.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.values[v.0]
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Vec<T>> {
        self.grads[v.0].take()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `x: [B×C_in×L]`, `w: [C_out×C_in/groups×K]`, optional `b: [C_out]`; "same" padding.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>, dilation: usize, groups: usize) -> Result<Var> {
        let (bsz, c_in, l) = self.value(x).dims3()?;
        let (c_out, cig, k) = self.value(w).dims3()?;
        let geom = ConvGeom::new(c_in, c_out, k, dilation, groups)?;
        if cig != geom.cin_per_group() {
            return Err(Error::Shape(format!("weight expects {cig} inputs per group, input gives {}", geom.cin_per_group())));
        }
        if let Some(b) = b {
            if self.value(b).len() != c_out {
                return Err(Error::Shape(format!("bias has {} entries for {c_out} outputs", self.value(b).len())));
            }
        }
        let y = conv1d_forward(
            self.value(x).data(),
            self.value(w).data(),
            b.map(|b| self.value(b).data()),
            bsz,
            l,
            &geom,
        );
        let out = Tensor::new(&[bsz, c_out, l], y)?;
        let inputs: Vec<Var> = [Some(x), Some(w), b].into_iter().flatten().collect();
        self.push(out, Op::Conv { x, w, b, geom }, &inputs)
    }

    pub fn batchnorm(&mut self, x: Var, gamma: Var, beta: Var, stats: &mut RunningStats<T>, mode: Mode) -> Result<Var> {
        let (b, c, l) = self.value(x).dims3()?;
        if self.value(gamma).len() != c || self.value(beta).len() != c || stats.mean.len() != c {
            return Err(Error::Shape(format!("batch norm parameters do not match {c} channels")));
        }
        let train = mode == Mode::Train;
        let (y, saved) = batchnorm_forward(
            self.value(x).data(),
            b,
            c,
            l,
            self.value(gamma).data(),
            self.value(beta).data(),
            stats,
            train,
        )?;
        let out = Tensor::new(&[b, c, l], y)?;
        self.push(out, Op::BatchNorm { x, gamma, beta, saved, train }, &[x, gamma, beta])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let out = Tensor::new(v.shape(), v.data().iter().map(|&a| a.max(T::zero())).collect())?;
        self.push(out, Op::Relu { x }, &[x])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::Shape(format!("add {:?} + {:?}", va.shape(), vb.shape())));
        }
        let out = Tensor::new(va.shape(), va.data().iter().zip(vb.data()).map(|(p, q)| *p + *q).collect())?;
        self.push(out, Op::Add { a, b }, &[a, b])
    }

    /// Adaptive pooling to one value per channel: `[B×C×L]` → `[B×C×1]`.
    /// Max ties resolve to the first index.
    pub fn adaptive_pool(&mut self, x: Var, kind: PoolKind) -> Result<Var> {
        let (b, c, l) = self.value(x).dims3()?;
        if l == 0 {
            return Err(Error::Shape("pooling over an empty temporal axis".into()));
        }
        let data = self.value(x).data();
        let mut y = Vec::with_capacity(b * c);
        let mut argmax = Vec::new();
        for row in data.chunks_exact(l) {
            match kind {
                PoolKind::Avg => y.push(row.iter().copied().sum::<T>() / T::lit(l as f64)),
                PoolKind::Max => {
                    let mut best = 0;
                    for (i, v) in row.iter().enumerate() {
                        if *v > row[best] {
                            best = i;
                        }
                    }
                    argmax.push(best);
                    y.push(row[best]);
                }
            }
        }
        let out = Tensor::new(&[b, c, 1], y)?;
        self.push(out, Op::Pool { x, kind, argmax }, &[x])
    }

    /// Flattens each input per sample and concatenates along the feature axis → `[B×ΣF]`.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let b = self.value(parts[0]).shape()[0];
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let v = self.value(*p);
            if v.shape()[0] != b {
                return Err(Error::Shape(format!("concat batch sizes {} vs {b}", v.shape()[0])));
            }
            widths.push(v.len() / b);
        }
        let total: usize = widths.iter().sum();
        let mut y = Vec::with_capacity(b * total);
        for bi in 0..b {
            for (p, w) in parts.iter().zip(&widths) {
                y.extend_from_slice(&self.value(*p).data()[bi * w..(bi + 1) * w]);
            }
        }
        let out = Tensor::new(&[b, total], y)?;
        self.push(out, Op::Concat { parts: parts.to_vec() }, parts)
    }

    /// Normalizes each row of `x: [B×F]`, then applies the affine map.
    pub fn layernorm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (b, f) = self.value(x).dims2()?;
        if self.value(gamma).len() != f || self.value(beta).len() != f {
            return Err(Error::Shape(format!("layer norm parameters do not match {f} features")));
        }
        let (y, saved) = layernorm_forward(self.value(x).data(), f, self.value(gamma).data(), self.value(beta).data())?;
        let out = Tensor::new(&[b, f], y)?;
        self.push(out, Op::LayerNorm { x, gamma, beta, saved }, &[x, gamma, beta])
    }

    /// `x: [B×F]`, `w: [F×O]`, `b: [O]` → `x·w + b`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (n, f) = self.value(x).dims2()?;
        let (fw, o) = self.value(w).dims2()?;
        if fw != f || self.value(b).len() != o {
            return Err(Error::Shape(format!("linear {f} features into weight {fw}×{o} with bias {}", self.value(b).len())));
        }
        let mut y = vec![T::zero(); n * o];
        for row in y.chunks_exact_mut(o) {
            row.copy_from_slice(self.value(b).data());
        }
        gemm(false, false, n, o, f, T::one(), self.value(x).data(), self.value(w).data(), T::one(), &mut y);
        let out = Tensor::new(&[n, o], y)?;
        self.push(out, Op::Linear { x, w, b }, &[x, w, b])
    }

    /// Inverted dropout: in train mode zeroes with probability `p` and scales survivors by `1/(1-p)`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, mode: Mode, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("dropout rate {p} outside [0, 1)")));
        }
        let v = self.value(x);
        let n = v.len();
        let mask: Vec<T> = if mode == Mode::Eval || p == 0.0 {
            vec![T::one(); n]
        } else {
            let keep = T::lit(1.0 / (1.0 - p));
            (0..n).map(|_| if rng.random::<f64>() < p { T::zero() } else { keep }).collect()
        };
        let out = Tensor::new(v.shape(), v.data().iter().zip(&mask).map(|(a, m)| *a * *m).collect())?;
        self.push(out, Op::Dropout { x, mask }, &[x])
    }

    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (b, k) = self.value(logits).dims2()?;
        if labels.len() != b {
            return Err(Error::Shape(format!("{} labels for batch of {b}", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidLabel(bad));
        }
        let mut probs = Vec::with_capacity(b * k);
        let mut loss = T::zero();
        for (row, &y) in self.value(logits).data().chunks_exact(k).zip(labels) {
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let z: T = row.iter().map(|&v| (v - m).exp()).sum();
            loss += z.ln() + m - row[y];
            probs.extend(row.iter().map(|&v| (v - m).exp() / z));
        }
        let out = Tensor::scalar(loss / T::lit(b as f64));
        self.push(out, Op::SoftmaxCe { logits, labels: labels.to_vec(), probs }, &[logits])
    }

    /// `Σ weights · x`, a scalar probe used by gradient checks.
    pub fn weighted_sum(&mut self, x: Var, weights: Vec<T>) -> Result<Var> {
        if weights.len() != self.value(x).len() {
            return Err(Error::Shape(format!("{} weights for {} values", weights.len(), self.value(x).len())));
        }
        let s = self.value(x).data().iter().zip(&weights).map(|(a, w)| *a * *w).sum();
        self.push(Tensor::scalar(s), Op::WeightedSum { x, weights }, &[x])
    }

    /// Reverse sweep from a scalar. Leaf gradients accumulate; intermediate ones are freed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.values[loss.0].len() != 1 {
            return Err(Error::Shape(format!("backward from non-scalar {:?}", self.values[loss.0].shape())));
        }
        let fault = self.fault;
        let Graph { values, grads, requires, ops, .. } = self;
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if !requires[i] || matches!(ops[i], Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match &ops[i] {
                Op::Leaf => unreachable!(),
                Op::Conv { x, w, b, geom } => {
                    let (bsz, _, l) = values[x.0].dims3()?;
                    let mut dx = take(grads, requires, *x, values[x.0].len());
                    let mut dw = take(grads, requires, *w, values[w.0].len());
                    let mut db = b.and_then(|b| take(grads, requires, b, values[b.0].len()));
                    let before = match fault {
                        Some(Fault::ScaleConvWeightGrad(_)) => dw.clone(),
                        _ => None,
                    };
                    conv1d_backward(
                        &g,
                        values[x.0].data(),
                        values[w.0].data(),
                        bsz,
                        l,
                        geom,
                        dx.as_deref_mut(),
                        dw.as_deref_mut(),
                        db.as_deref_mut(),
                    );
                    if let (Some(Fault::ScaleConvWeightGrad(s)), Some(dw), Some(before)) = (fault, dw.as_mut(), before) {
                        let s = T::lit(s);
                        for (d, b0) in dw.iter_mut().zip(before) {
                            *d = b0 + (*d - b0) * s;
                        }
                    }
                    put(grads, *x, dx);
                    put(grads, *w, dw);
                    if let Some(b) = b {
                        put(grads, *b, db);
                    }
                }
                Op::BatchNorm { x, gamma, beta, saved, train } => {
                    let (b, c, l) = values[x.0].dims3()?;
                    let mut dx = take(grads, requires, *x, values[x.0].len());
                    let mut dg = take(grads, requires, *gamma, c);
                    let mut dbeta = take(grads, requires, *beta, c);
                    batchnorm_backward(
                        &g,
                        saved,
                        values[gamma.0].data(),
                        b,
                        c,
                        l,
                        *train,
                        dx.as_deref_mut(),
                        dg.as_deref_mut(),
                        dbeta.as_deref_mut(),
                    );
                    put(grads, *x, dx);
                    put(grads, *gamma, dg);
                    put(grads, *beta, dbeta);
                }
                Op::Relu { x } => {
                    if let Some(mut dx) = take(grads, requires, *x, values[x.0].len()) {
                        let ignore = matches!(fault, Some(Fault::ReluIgnoresMask));
                        for ((d, gv), xv) in dx.iter_mut().zip(&g).zip(values[x.0].data()) {
                            if ignore || *xv > T::zero() {
                                *d += *gv;
                            }
                        }
                        grads[x.0] = Some(dx);
                    }
                }
                Op::Add { a, b } => {
                    for v in [a, b] {
                        if let Some(mut d) = take(grads, requires, *v, g.len()) {
                            d.iter_mut().zip(&g).for_each(|(d, gv)| *d += *gv);
                            grads[v.0] = Some(d);
                        }
                    }
                }
                Op::Pool { x, kind, argmax } => {
                    let (_, _, l) = values[x.0].dims3()?;
                    if let Some(mut dx) = take(grads, requires, *x, values[x.0].len()) {
                        for (row, gv) in g.iter().enumerate() {
                            match kind {
                                PoolKind::Avg => {
                                    let share = *gv / T::lit(l as f64);
                                    dx[row * l..(row + 1) * l].iter_mut().for_each(|d| *d += share);
                                }
                                PoolKind::Max => dx[row * l + argmax[row]] += *gv,
                            }
                        }
                        grads[x.0] = Some(dx);
                    }
                }
                Op::Concat { parts } => {
                    let b = values[i].shape()[0];
                    let total = values[i].len() / b;
                    let mut offset = 0;
                    for p in parts {
                        let w = values[p.0].len() / b;
                        if let Some(mut d) = take(grads, requires, *p, values[p.0].len()) {
                            for bi in 0..b {
                                let src = &g[bi * total + offset..bi * total + offset + w];
                                d[bi * w..(bi + 1) * w].iter_mut().zip(src).for_each(|(d, s)| *d += *s);
                            }
                            grads[p.0] = Some(d);
                        }
                        offset += w;
                    }
                }
                Op::LayerNorm { x, gamma, beta, saved } => {
                    let (_, f) = values[x.0].dims2()?;
                    let mut dx = take(grads, requires, *x, values[x.0].len());
                    let mut dg = take(grads, requires, *gamma, f);
                    let mut db = take(grads, requires, *beta, f);
                    layernorm_backward(
                        &g,
                        saved,
                        values[gamma.0].data(),
                        f,
                        dx.as_deref_mut(),
                        dg.as_deref_mut(),
                        db.as_deref_mut(),
                    );
                    put(grads, *x, dx);
                    put(grads, *gamma, dg);
                    put(grads, *beta, db);
                }
                Op::Linear { x, w, b } => {
                    let (n, f) = values[x.0].dims2()?;
                    let o = values[b.0].len();
                    if let Some(mut dx) = take(grads, requires, *x, n * f) {
                        gemm(false, true, n, f, o, T::one(), &g, values[w.0].data(), T::one(), &mut dx);
                        grads[x.0] = Some(dx);
                    }
                    if let Some(mut dw) = take(grads, requires, *w, f * o) {
                        gemm(true, false, f, o, n, T::one(), values[x.0].data(), &g, T::one(), &mut dw);
                        grads[w.0] = Some(dw);
                    }
                    if let Some(mut db) = take(grads, requires, *b, o) {
                        for row in g.chunks_exact(o) {
                            db.iter_mut().zip(row).for_each(|(d, gv)| *d += *gv);
                        }
                        grads[b.0] = Some(db);
                    }
                }
                Op::Dropout { x, mask } => {
                    if let Some(mut dx) = take(grads, requires, *x, mask.len()) {
                        for ((d, gv), m) in dx.iter_mut().zip(&g).zip(mask) {
                            *d += *gv * *m;
                        }
                        grads[x.0] = Some(dx);
                    }
                }
                Op::SoftmaxCe { logits, labels, probs } => {
                    let k = probs.len() / labels.len();
                    if let Some(mut d) = take(grads, requires, *logits, probs.len()) {
                        let scale = g[0] / T::lit(labels.len() as f64);
                        for (bi, &y) in labels.iter().enumerate() {
                            for j in 0..k {
                                let onehot = if j == y { T::one() } else { T::zero() };
                                d[bi * k + j] += (probs[bi * k + j] - onehot) * scale;
                            }
                        }
                        grads[logits.0] = Some(d);
                    }
                }
                Op::WeightedSum { x, weights } => {
                    if let Some(mut d) = take(grads, requires, *x, weights.len()) {
                        d.iter_mut().zip(weights).for_each(|(d, w)| *d += *w * g[0]);
                        grads[x.0] = Some(d);
                    }
                }
            }
        }
        Ok(())
    }
}
