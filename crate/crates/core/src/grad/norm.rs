//! Batch and layer normalization kernels.

use crate::error::{Error, Result};

use super::Real;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;
pub const LN_EPS: f64 = 1e-5;

/// Per-channel running mean and (unbiased) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> RunningStats<T> {
    pub fn new(channels: usize) -> Self {
        RunningStats { mean: vec![T::zero(); channels], var: vec![T::one(); channels] }
    }
}

/// Normalized activations and the inverse std per normalization group.
#[derive(Debug, Clone)]
pub struct NormSaved<T> {
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
}

/// `x: [B×C×L]`. Train mode normalizes with batch statistics over `(B, L)` and
/// updates `stats`; eval mode uses `stats`.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward<T: Real>(
    x: &[T],
    b: usize,
    c: usize,
    l: usize,
    gamma: &[T],
    beta: &[T],
    stats: &mut RunningStats<T>,
    train: bool,
) -> Result<(Vec<T>, NormSaved<T>)> {
    let n = b * l;
    if train && n <= 1 {
        return Err(Error::Shape("batch norm in train mode needs more than one value per channel".into()));
    }
    let eps = T::lit(BN_EPS);
    let mut inv_std = vec![T::zero(); c];
    let mut mean = vec![T::zero(); c];
    if train {
        let nt = T::lit(n as f64);
        let momentum = T::lit(BN_MOMENTUM);
        for ch in 0..c {
            let rows = (0..b).map(|bi| &x[(bi * c + ch) * l..(bi * c + ch + 1) * l]);
            let mu = rows.clone().flatten().copied().sum::<T>() / nt;
            let var = rows.flatten().map(|&v| (v - mu) * (v - mu)).sum::<T>() / nt;
            mean[ch] = mu;
            inv_std[ch] = T::one() / (var + eps).sqrt();
            let unbiased = var * nt / (nt - T::one());
            stats.mean[ch] = (T::one() - momentum) * stats.mean[ch] + momentum * mu;
            stats.var[ch] = (T::one() - momentum) * stats.var[ch] + momentum * unbiased;
        }
    } else {
        for ch in 0..c {
            mean[ch] = stats.mean[ch];
            inv_std[ch] = T::one() / (stats.var[ch] + eps).sqrt();
        }
    }
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    for (row, (xr, (hr, yr))) in x.chunks_exact(l).zip(xhat.chunks_exact_mut(l).zip(y.chunks_exact_mut(l))).enumerate() {
        let ch = row % c;
        for t in 0..l {
            hr[t] = (xr[t] - mean[ch]) * inv_std[ch];
            yr[t] = gamma[ch] * hr[t] + beta[ch];
        }
    }
    Ok((y, NormSaved { xhat, inv_std }))
}

#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward<T: Real>(
    dy: &[T],
    saved: &NormSaved<T>,
    gamma: &[T],
    b: usize,
    c: usize,
    l: usize,
    train: bool,
    dx: Option<&mut [T]>,
    dgamma: Option<&mut [T]>,
    dbeta: Option<&mut [T]>,
) {
    let mut sum_dy = vec![T::zero(); c];
    let mut sum_dy_xhat = vec![T::zero(); c];
    for (row, (dr, hr)) in dy.chunks_exact(l).zip(saved.xhat.chunks_exact(l)).enumerate() {
        let ch = row % c;
        for t in 0..l {
            sum_dy[ch] += dr[t];
            sum_dy_xhat[ch] += dr[t] * hr[t];
        }
    }
    if let Some(dg) = dgamma {
        dg.iter_mut().zip(&sum_dy_xhat).for_each(|(d, s)| *d += *s);
    }
    if let Some(db) = dbeta {
        db.iter_mut().zip(&sum_dy).for_each(|(d, s)| *d += *s);
    }
    if let Some(dx) = dx {
        let nt = T::lit((b * l) as f64);
        for (row, ((dxr, dr), hr)) in dx.chunks_exact_mut(l).zip(dy.chunks_exact(l)).zip(saved.xhat.chunks_exact(l)).enumerate() {
            let ch = row % c;
            let k = gamma[ch] * saved.inv_std[ch];
            for t in 0..l {
                dxr[t] += if train {
                    k * (dr[t] - (sum_dy[ch] + hr[t] * sum_dy_xhat[ch]) / nt)
                } else {
                    k * dr[t]
                };
            }
        }
    }
}

/// Row-wise normalization of `x: [N×F]`.
pub fn layernorm_forward<T: Real>(x: &[T], f: usize, gamma: &[T], beta: &[T]) -> Result<(Vec<T>, NormSaved<T>)> {
    if f < 2 {
        return Err(Error::Shape(format!("layer norm needs at least 2 features, got {f}")));
    }
    let ft = T::lit(f as f64);
    let eps = T::lit(LN_EPS);
    let mut y = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut inv_std = Vec::with_capacity(x.len() / f);
    for (xr, (hr, yr)) in x.chunks_exact(f).zip(xhat.chunks_exact_mut(f).zip(y.chunks_exact_mut(f))) {
        let mu = xr.iter().copied().sum::<T>() / ft;
        let var = xr.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / ft;
        let is = T::one() / (var + eps).sqrt();
        inv_std.push(is);
        for i in 0..f {
            hr[i] = (xr[i] - mu) * is;
            yr[i] = gamma[i] * hr[i] + beta[i];
        }
    }
    Ok((y, NormSaved { xhat, inv_std }))
}

pub fn layernorm_backward<T: Real>(
    dy: &[T],
    saved: &NormSaved<T>,
    gamma: &[T],
    f: usize,
    dx: Option<&mut [T]>,
    mut dgamma: Option<&mut [T]>,
    mut dbeta: Option<&mut [T]>,
) {
    let ft = T::lit(f as f64);
    let mut dx = dx;
    for (row, (dr, hr)) in dy.chunks_exact(f).zip(saved.xhat.chunks_exact(f)).enumerate() {
        if let Some(dg) = dgamma.as_deref_mut() {
            for i in 0..f {
                dg[i] += dr[i] * hr[i];
            }
        }
        if let Some(db) = dbeta.as_deref_mut() {
            for i in 0..f {
                db[i] += dr[i];
            }
        }
        if let Some(dx) = dx.as_deref_mut() {
            let g: Vec<T> = (0..f).map(|i| dr[i] * gamma[i]).collect();
            let sg = g.iter().copied().sum::<T>();
            let sgh = g.iter().zip(hr).map(|(a, b)| *a * *b).sum::<T>();
            let is = saved.inv_std[row];
            let dxr = &mut dx[row * f..(row + 1) * f];
            for i in 0..f {
                dxr[i] += is * (g[i] - (sg + hr[i] * sgh) / ft);
            }
        }
    }
}
