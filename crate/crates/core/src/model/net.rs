//! Depthwise-separable tokenizer, dilated residual encoder with 1×1 cross
//! connections, and pooled classifier head.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::grad::{Graph, Mode, PoolKind, Real, RunningStats, Tensor, Var};
use crate::rng::{stream, Purpose};

use super::config::ModelConfig;

pub const TOKENIZER_PARAMS: usize = 4;
pub const STAGE_PARAMS: usize = 14;
pub const CLASSIFIER_PARAMS: usize = 4;
pub const STAGE_NORMS: usize = 3;

/// Depthwise conv (one kernel per electrode) then 1×1 projection to `d_model`.
/// `p`: depthwise weight, bias, pointwise weight, bias.
pub fn tokenizer_forward<T: Real>(g: &mut Graph<T>, x: Var, p: &[Var]) -> Result<Var> {
    let c = g.value(x).dims3()?.1;
    if g.value(p[0]).shape()[0] != c {
        return Err(Error::Shape(format!("tokenizer expects {} channels, got {c}", g.value(p[0]).shape()[0])));
    }
    let depth = g.conv1d(x, p[0], Some(p[1]), 1, c)?;
    g.conv1d(depth, p[2], Some(p[3]), 1, 1)
}

/// `ReLU(BN(conv(ReLU(BN(dilconv(y))))) + BN(conv1x1(y)))`.
/// `p`: the first 12 stage tensors; `stats`: bn1, bn2, shortcut_bn.
pub fn resblock_forward<T: Real>(
    g: &mut Graph<T>,
    y: Var,
    p: &[Var],
    stats: &mut [RunningStats<T>],
    dilation: usize,
    mode: Mode,
) -> Result<Var> {
    let [s1, s2, s3] = stats else {
        return Err(Error::Shape(format!("residual block needs 3 norm states, got {}", stats.len())));
    };
    let h = g.conv1d(y, p[0], Some(p[1]), dilation, 1)?;
    let h = g.batchnorm(h, p[2], p[3], s1, mode)?;
    let h = g.relu(h)?;
    let h = g.conv1d(h, p[4], Some(p[5]), 1, 1)?;
    let h = g.batchnorm(h, p[6], p[7], s2, mode)?;
    let s = g.conv1d(y, p[8], Some(p[9]), 1, 1)?;
    let s = g.batchnorm(s, p[10], p[11], s3, mode)?;
    let sum = g.add(h, s)?;
    g.relu(sum)
}

/// One encoder stage: `ResBlock(y) + CrossConv(y)`.
pub fn stage_forward<T: Real>(
    g: &mut Graph<T>,
    y: Var,
    p: &[Var],
    stats: &mut [RunningStats<T>],
    dilation: usize,
    mode: Mode,
) -> Result<Var> {
    let z = resblock_forward(g, y, &p[..12], stats, dilation, mode)?;
    let cross = g.conv1d(y, p[12], Some(p[13]), 1, 1)?;
    g.add(z, cross)
}

pub fn encoder_forward<T: Real>(
    g: &mut Graph<T>,
    y: Var,
    p: &[Var],
    stats: &mut [RunningStats<T>],
    dilations: &[usize],
    mode: Mode,
) -> Result<Var> {
    let mut y = y;
    for (j, &d) in dilations.iter().enumerate() {
        let sp = &p[j * STAGE_PARAMS..(j + 1) * STAGE_PARAMS];
        y = stage_forward(g, y, sp, &mut stats[j * STAGE_NORMS..(j + 1) * STAGE_NORMS], d, mode)?;
    }
    Ok(y)
}

/// `concat(avgpool, maxpool) → dropout → layer norm → linear`.
pub fn classifier_forward<T: Real, R: Rng + ?Sized>(
    g: &mut Graph<T>,
    y: Var,
    p: &[Var],
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    let avg = g.adaptive_pool(y, PoolKind::Avg)?;
    let max = g.adaptive_pool(y, PoolKind::Max)?;
    let h = g.concat(&[avg, max])?;
    let h = g.dropout(h, dropout, mode, rng)?;
    let h = g.layernorm(h, p[0], p[1])?;
    g.linear(h, p[2], p[3])
}

/// Full forward from segment batch `x: [B×C×L]` to logits `[B×n_classes]`.
pub fn forward<T: Real, R: Rng + ?Sized>(
    config: &ModelConfig,
    g: &mut Graph<T>,
    x: Var,
    params: &[Var],
    stats: &mut [RunningStats<T>],
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    let n_enc = config.n_stages * STAGE_PARAMS;
    if params.len() != TOKENIZER_PARAMS + n_enc + CLASSIFIER_PARAMS {
        return Err(Error::Shape(format!("{} parameter tensors for this configuration", params.len())));
    }
    let (_, c, l) = g.value(x).dims3()?;
    if c != config.n_channels {
        return Err(Error::Shape(format!("input has {c} channels, model expects {}", config.n_channels)));
    }
    if l == 0 {
        return Err(Error::Shape("empty segment".into()));
    }
    let y = tokenizer_forward(g, x, &params[..TOKENIZER_PARAMS])?;
    let y = encoder_forward(g, y, &params[TOKENIZER_PARAMS..TOKENIZER_PARAMS + n_enc], stats, &config.dilations(), mode)?;
    classifier_forward(g, y, &params[TOKENIZER_PARAMS + n_enc..], config.dropout, mode, rng)
}

/// Parameters and normalization state of one classifier instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real> {
    pub config: ModelConfig,
    pub params: Vec<Tensor<T>>,
    pub stats: Vec<RunningStats<T>>,
}

/// Fan-in of the layer owning `name`; `None` for normalization tensors.
fn fan_in(specs: &[(String, Vec<usize>)], name: &str) -> Option<usize> {
    if name.contains("bn") || name.contains("norm") {
        return None;
    }
    let weight = format!("{}.weight", name.rsplit_once('.')?.0);
    let (_, shape) = specs.iter().find(|(n, _)| *n == weight)?;
    Some(match shape[..] {
        [_, cig, k] => cig * k,
        [f, _] => f,
        _ => return None,
    })
}

impl<T: Real> Model<T> {
    /// Fan-in uniform initialization for convolutions and the linear layer
    /// (weights and biases); normalization scales 1 and shifts 0.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let specs = config.param_specs();
        let mut params = Vec::with_capacity(specs.len());
        for (i, (name, shape)) in specs.iter().enumerate() {
            let t = match fan_in(&specs, name) {
                Some(n) => {
                    let b = (1.0 / n as f64).sqrt();
                    let mut rng = stream(seed, Purpose::Init, &[i as u64]);
                    Tensor::from_fn(shape, |_| T::lit(rng.random_range(-b..=b)))
                }
                None if name.ends_with(".weight") => Tensor::filled(shape, T::one()),
                None => Tensor::zeros(shape),
            };
            params.push(t);
        }
        let stats = config.norm_specs().iter().map(|(_, c)| RunningStats::new(*c)).collect();
        Ok(Model { config, params, stats })
    }

    pub fn param_names(&self) -> Vec<String> {
        self.config.param_specs().into_iter().map(|(n, _)| n).collect()
    }

    pub fn param(&self, name: &str) -> Option<&Tensor<T>> {
        self.config.param_specs().iter().position(|(n, _)| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        let i = self.config.param_specs().iter().position(|(n, _)| n == name)?;
        Some(&mut self.params[i])
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Records parameters as leaves and runs the forward pass; returns the
    /// logits and the parameter handles (for reading gradients).
    pub fn forward(
        &mut self,
        g: &mut Graph<T>,
        x: Tensor<T>,
        mode: Mode,
        track_grads: bool,
        rng: &mut dyn RngCore,
    ) -> Result<(Var, Vec<Var>)> {
        let xv = g.leaf(x, false);
        let pv: Vec<Var> = self.params.iter().map(|p| g.leaf(p.clone(), track_grads)).collect();
        let logits = forward(&self.config, g, xv, &pv, &mut self.stats, mode, rng)?;
        Ok((logits, pv))
    }

    /// Eval-mode logits for a batch; leaves the model untouched.
    pub fn logits(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let mut rng = stream(0, Purpose::Dropout, &[]);
        let xv = g.leaf(x, false);
        let pv: Vec<Var> = self.params.iter().map(|p| g.leaf(p.clone(), false)).collect();
        let mut stats = self.stats.clone();
        let out = forward(&self.config, &mut g, xv, &pv, &mut stats, Mode::Eval, &mut rng)?;
        Ok(g.value(out).clone())
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
            stats: self
                .stats
                .iter()
                .map(|s| RunningStats {
                    mean: s.mean.iter().map(|v| U::lit(v.as_f64())).collect(),
                    var: s.var.iter().map(|v| U::lit(v.as_f64())).collect(),
                })
                .collect(),
        }
    }
}
