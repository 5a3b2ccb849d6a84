use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{AdamConfig, AdamState, Graph, Mode, Real, Tensor};
use crate::rng::{stream, Purpose};

use super::net::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 100, batch_size: 128, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss per epoch (weighted by batch size).
    pub epoch_loss: Vec<f64>,
}

fn check_data(data: &[f32], labels: &[usize], seg: usize, n_classes: usize) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Empty("no segments".into()));
    }
    if data.len() != labels.len() * seg {
        return Err(Error::Shape(format!("{} values for {} segments of {seg}", data.len(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::InvalidLabel(bad));
    }
    Ok(())
}

fn gather<T: Real>(data: &[f32], idx: &[usize], c: usize, l: usize) -> Tensor<T> {
    let seg = c * l;
    let mut v = Vec::with_capacity(idx.len() * seg);
    for &i in idx {
        v.extend(data[i * seg..(i + 1) * seg].iter().map(|&x| T::lit(x as f64)));
    }
    Tensor::new(&[idx.len(), c, l], v).expect("gathered batch shape")
}

/// Mini-batch Adam on cross-entropy. `data` is `[N×C×L]` row-major.
/// Shuffling and dropout masks derive from `seed`, so reruns are identical.
pub fn train<T: Real>(
    model: &mut Model<T>,
    data: &[f32],
    labels: &[usize],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainHistory> {
    let (c, l) = (model.config.n_channels, model.config.seq_len);
    check_data(data, labels, c * l, model.config.n_classes)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    let sizes: Vec<usize> = model.params.iter().map(Tensor::len).collect();
    let mut adam = AdamState::new(config.adam, &sizes);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut stream(seed, Purpose::Shuffle, &[epoch as u64]));
        let mut total = 0.0;
        for (bi, idx) in order.chunks(config.batch_size).enumerate() {
            let fail = |loss: f64| Error::NonFiniteLoss { epoch, batch: bi, loss };
            let x = gather::<T>(data, idx, c, l);
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let mut g = Graph::new();
            let mut rng = stream(seed, Purpose::Dropout, &[epoch as u64, bi as u64]);
            let (logits, pv) = match model.forward(&mut g, x, Mode::Train, true, &mut rng) {
                Err(Error::NonFinite(_)) => return Err(fail(f64::NAN)),
                r => r?,
            };
            let loss_var = match g.softmax_cross_entropy(logits, &y) {
                Err(Error::NonFinite(_)) => return Err(fail(f64::NAN)),
                r => r?,
            };
            let loss = g.value(loss_var).data()[0].as_f64();
            if !loss.is_finite() {
                return Err(fail(loss));
            }
            total += loss * idx.len() as f64;
            g.backward(loss_var)?;
            let grads: Vec<Vec<T>> = pv
                .iter()
                .zip(&sizes)
                .map(|(v, &n)| g.take_grad(*v).unwrap_or_else(|| vec![T::zero(); n]))
                .collect();
            adam.step(model.params.iter_mut().map(Tensor::data_mut).zip(grads.iter().map(Vec::as_slice)))?;
        }
        history.push(total / labels.len() as f64);
    }
    Ok(TrainHistory { epoch_loss: history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    /// Softmax probabilities per segment.
    pub probs: Vec<Vec<f64>>,
    /// Argmax class per segment.
    pub labels: Vec<usize>,
}

/// Eval-mode class probabilities for `[N×C×L]` segments, in batches.
pub fn predict_segments<T: Real>(model: &Model<T>, data: &[f32], batch_size: usize) -> Result<Predictions> {
    let (c, l) = (model.config.n_channels, model.config.seq_len);
    let seg = c * l;
    if data.len() % seg != 0 {
        return Err(Error::Shape(format!("{} values is not a whole number of {c}×{l} segments", data.len())));
    }
    let n = data.len() / seg;
    let idx: Vec<usize> = (0..n).collect();
    let mut probs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for chunk in idx.chunks(batch_size.max(1)) {
        let logits = model.logits(gather::<T>(data, chunk, c, l))?;
        let k = logits.shape()[1];
        for row in logits.data().chunks_exact(k) {
            let row: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
            let z: f64 = e.iter().sum();
            let p: Vec<f64> = e.iter().map(|v| v / z).collect();
            let mut best = 0;
            for (j, v) in p.iter().enumerate() {
                if *v > p[best] {
                    best = j;
                }
            }
            labels.push(best);
            probs.push(p);
        }
    }
    Ok(Predictions { probs, labels })
}

/// Majority vote over one subject's segment labels; a tie goes to AD (1).
pub fn predict_subject(segment_labels: &[usize]) -> Result<usize> {
    if segment_labels.is_empty() {
        return Err(Error::Empty("subject has no segments".into()));
    }
    if let Some(&bad) = segment_labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    let ad = segment_labels.iter().filter(|&&y| y == 1).count();
    Ok(usize::from(2 * ad >= segment_labels.len()))
}

pub fn accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
