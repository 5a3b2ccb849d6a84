//! Rational polyphase resampling with a Kaiser-windowed sinc low-pass.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_FACTOR: usize = 1000;
const KAISER_BETA: f64 = 8.0;
const HALF_TAPS_PER_PHASE: usize = 32;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Smallest `(p, q)` with `fs_out / fs_in == p / q`, both at most 1000.
pub fn rational_ratio(fs_in: f64, fs_out: f64) -> Result<(usize, usize)> {
    if !(fs_in.is_finite() && fs_in > 0.0 && fs_out.is_finite() && fs_out > 0.0) {
        return Err(Error::InvalidSpec(format!("sampling rates must be positive ({fs_in} -> {fs_out})")));
    }
    let ratio = fs_out / fs_in;
    for q in 1..=MAX_FACTOR {
        let p = (ratio * q as f64).round();
        if p >= 1.0 && p <= MAX_FACTOR as f64 && (p / q as f64 - ratio).abs() <= 1e-12 * ratio.max(1.0) {
            let p = p as usize;
            let g = gcd(p, q);
            return Ok((p / g, q / g));
        }
    }
    Err(Error::IrrationalRatio { fs_in, fs_out })
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass; `cutoff` is relative to Nyquist.
pub fn kaiser_lowpass(n_taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let m = (n_taps - 1) as f64 / 2.0;
    let i0_beta = bessel_i0(beta);
    (0..n_taps)
        .map(|n| {
            let t = n as f64 - m;
            let sinc = if t == 0.0 { 1.0 } else { (PI * cutoff * t).sin() / (PI * cutoff * t) };
            let r = if m > 0.0 { t / m } else { 0.0 };
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            cutoff * sinc * w
        })
        .collect()
}

/// Upsample by `p`, low-pass at `min(π/p, π/q)`, downsample by `q`.
#[derive(Debug, Clone)]
pub struct Resampler {
    pub up: usize,
    pub down: usize,
    taps: Vec<f64>,
}

impl Resampler {
    pub fn new(fs_in: f64, fs_out: f64) -> Result<Self> {
        let (up, down) = rational_ratio(fs_in, fs_out)?;
        let max = up.max(down);
        let n_taps = 2 * HALF_TAPS_PER_PHASE * max + 1;
        let mut taps = kaiser_lowpass(n_taps, 1.0 / max as f64, KAISER_BETA);
        // Passband gain `up` compensates the zero-stuffing.
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t *= up as f64 / sum);
        Ok(Resampler { up, down, taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn output_len(&self, n: usize) -> usize {
        ((n * self.up) as f64 / self.down as f64).round() as usize
    }

    pub fn process(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.is_empty() {
            return Err(Error::Empty("resample input".into()));
        }
        if self.up == 1 && self.down == 1 {
            return Ok(x.to_vec());
        }
        let (p, q) = (self.up, self.down);
        let delay = (self.taps.len() - 1) / 2;
        let n_up = x.len() * p;
        let out_len = self.output_len(x.len());
        let mut y = Vec::with_capacity(out_len);
        for m in 0..out_len {
            // y[m] = Σ_k h[k] u[m q + delay − k], u nonzero only at multiples of p.
            let j0 = m * q + delay;
            let mut k = j0 % p;
            let mut acc = 0.0;
            while k < self.taps.len() && k <= j0 {
                let j = j0 - k;
                if j < n_up {
                    acc += self.taps[k] * x[j / p];
                }
                k += p;
            }
            y.push(acc);
        }
        Ok(y)
    }
}

pub fn resample(x: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    Resampler::new(fs_in, fs_out)?.process(x)
}
