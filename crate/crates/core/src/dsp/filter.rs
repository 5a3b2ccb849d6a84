//! Butterworth band-pass in second-order sections, applied forward-backward.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub lo: f64,
    pub hi: f64,
    /// Order of the low-pass prototype; the band-pass has twice as many poles.
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { lo: 0.5, hi: 45.0, order: 4, zero_phase: true }
    }
}

impl FilterSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidFilter("order must be positive".into()));
        }
        if !(self.lo > 0.0 && self.lo < self.hi) {
            return Err(Error::InvalidFilter(format!("need 0 < lo < hi, got {}..{}", self.lo, self.hi)));
        }
        if !(self.hi < fs / 2.0) {
            return Err(Error::InvalidFilter(format!("cutoff {} Hz is at or above Nyquist ({} Hz)", self.hi, fs / 2.0)));
        }
        Ok(())
    }

    /// Samples of odd-reflection padding used by the zero-phase pass.
    pub fn pad_len(&self) -> usize {
        3 * self.order
    }
}

/// Biquad `[b0, b1, b2, a1, a2]` with `a0 = 1`.
pub type Section = [f64; 5];

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Section>,
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    let k = Complex64::new(2.0 * fs, 0.0);
    (k + s) / (k - s)
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

/// Designs the digital Butterworth band-pass for `spec` at rate `fs`.
pub fn butter_bandpass(spec: &FilterSpec, fs: f64) -> Result<Sos> {
    spec.validate(fs)?;
    let n = spec.order;
    let w_lo = prewarp(spec.lo, fs);
    let w_hi = prewarp(spec.hi, fs);
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    // Analog low-pass prototype poles, then s -> (s² + w0²) / (bw s).
    let mut poles = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta) * bw;
        let disc = (p * p - 4.0 * w0_sq).sqrt();
        poles.push(bilinear((p + disc) / 2.0, fs));
        poles.push(bilinear((p - disc) / 2.0, fs));
    }

    // Pair each complex pole with its conjugate; leftover real poles pair up.
    let mut sections = Vec::with_capacity(n);
    let mut reals = Vec::new();
    for z in &poles {
        if z.im > 1e-12 {
            sections.push([1.0, 0.0, -1.0, -2.0 * z.re, z.norm_sqr()]);
        } else if z.im.abs() <= 1e-12 {
            reals.push(z.re);
        }
    }
    for pair in reals.chunks(2) {
        let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
        sections.push([1.0, 0.0, -1.0, -(r1 + r2), r1 * r2]);
    }
    if sections.len() != n {
        return Err(Error::InvalidFilter("pole pairing failed".into()));
    }

    // Unit gain at the (warped) geometric centre frequency.
    let wc = 2.0 * (w0_sq.sqrt() / (2.0 * fs)).atan();
    let mut sos = Sos { sections };
    let g = sos.response(wc).norm();
    let per_section = g.powf(-1.0 / n as f64);
    for s in &mut sos.sections {
        s[0] *= per_section;
        s[1] *= per_section;
        s[2] *= per_section;
    }
    Ok(sos)
}

impl Sos {
    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| (s[0] + s[1] * z1 + s[2] * z2) / (1.0 + s[3] * z1 + s[4] * z2))
            .product()
    }

    /// Steady-state transposed-direct-form states for a unit step input.
    pub fn step_state(&self) -> Vec<[f64; 2]> {
        let mut gain = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let dc = (s[0] + s[1] + s[2]) / (1.0 + s[3] + s[4]);
                let z1 = s[2] - s[4] * dc;
                let z0 = s[1] - s[3] * dc + z1;
                let state = [z0 * gain, z1 * gain];
                gain *= dc;
                state
            })
            .collect()
    }

    /// Causal filtering from the given initial states.
    pub fn filter_with_state(&self, x: &[f64], state: &mut [[f64; 2]]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            for v in y.iter_mut() {
                let input = *v;
                let out = s[0] * input + z[0];
                z[0] = s[1] * input - s[3] * out + z[1];
                z[1] = s[2] * input - s[4] * out;
                *v = out;
            }
        }
        y
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut state = vec![[0.0; 2]; self.sections.len()];
        self.filter_with_state(x, &mut state)
    }

    /// Forward-backward filtering with odd reflection padding and
    /// steady-state initial conditions.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_state();
        let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
        let mut y = self.filter_with_state(&ext, &mut state);
        y.reverse();
        let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * y[0], z[1] * y[0]]).collect();
        let mut y = self.filter_with_state(&y, &mut state);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Band-pass filters one channel.
pub fn bandpass(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    let sos = butter_bandpass(spec, fs)?;
    apply(&sos, x, spec)
}

/// Applies an already designed filter; lets callers design once per recording.
pub fn apply(sos: &Sos, x: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    if x.len() <= spec.pad_len() {
        return Err(Error::SignalTooShort(format!("{} samples, need more than {}", x.len(), spec.pad_len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("filter input".into()));
    }
    Ok(if spec.zero_phase { sos.filtfilt(x, spec.pad_len()) } else { sos.filter(x) })
}
