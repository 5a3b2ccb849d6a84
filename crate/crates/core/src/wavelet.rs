//! Stationary (undecimated, à trous) wavelet transform with sym4 and the
//! mapping of its sub-bands onto EEG rhythms.
//!
//! At 128 Hz a four-level transform splits the spectrum into
//! `A_4` (0–4 Hz, δ), `D_4` (4–8 Hz, θ), `D_3` (8–16 Hz, α), `D_2`
//! (16–32 Hz, β) and `D_1` (32–64 Hz, γ; the upstream band-pass caps it at
//! 45 Hz). Each rhythm signal is the single-sub-band reconstruction, so the
//! five rhythms add back up to the input.

use crate::band::Band;
use crate::error::{Error, Result};
use crate::TARGET_FS;

/// sym4 decomposition low-pass.
pub const SYM4_LOWPASS: [f64; 8] = [
    -0.075_765_714_789_273_33,
    -0.029_635_527_645_998_51,
    0.497_618_667_632_015_45,
    0.803_738_751_805_916_1,
    0.297_857_795_605_277_36,
    -0.099_219_543_576_847_22,
    -0.012_603_967_262_037_833,
    0.032_223_100_604_042_7,
];

/// Levels used for rhythm extraction.
pub const BAND_LEVELS: usize = 4;

/// `(h, g)` with `g[k] = (−1)^k h[7−k]`.
pub fn sym4_filters() -> ([f64; 8], [f64; 8]) {
    let h = SYM4_LOWPASS;
    let mut g = [0.0; 8];
    for k in 0..8 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        g[k] = sign * h[7 - k];
    }
    (h, g)
}

/// Coefficients of a `levels`-deep transform. Index `j - 1` holds level `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwtCoeffs {
    pub approx: Vec<Vec<f64>>,
    pub details: Vec<Vec<f64>>,
}

impl SwtCoeffs {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn len(&self) -> usize {
        self.details.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coarsest approximation `A_J`.
    pub fn coarse(&self) -> &[f64] {
        self.approx.last().map_or(&[], Vec::as_slice)
    }

    fn validate(&self) -> Result<()> {
        let j = self.details.len();
        if j == 0 || self.approx.len() != j {
            return Err(Error::Shape(format!("{} approximations for {} detail levels", self.approx.len(), j)));
        }
        let n = self.len();
        if n == 0 || self.approx.iter().chain(&self.details).any(|c| c.len() != n) {
            return Err(Error::Shape("inconsistent coefficient lengths".into()));
        }
        Ok(())
    }
}

fn check_length(len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidSpec("at least one level required".into()));
    }
    if len == 0 || len % (1 << levels) != 0 {
        return Err(Error::NotDivisible { len, levels });
    }
    Ok(())
}

/// `out[n] = Σ_k f[k] x[(n − s k) mod N]`.
fn circular_filter(x: &[f64], f: &[f64; 8], stride: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &c) in f.iter().enumerate() {
            let idx = (i + n - (stride * k) % n) % n;
            acc += c * x[idx];
        }
        *o = acc;
    }
    out
}

/// Adjoint of [`circular_filter`]: `out[n] = Σ_k f[k] x[(n + s k) mod N]`.
fn circular_filter_adjoint(x: &[f64], f: &[f64; 8], stride: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &c) in f.iter().enumerate() {
            acc += c * x[(i + stride * k) % n];
        }
        *o = acc;
    }
    out
}

pub fn swt_decompose(x: &[f64], levels: usize) -> Result<SwtCoeffs> {
    check_length(x.len(), levels)?;
    let (h, g) = sym4_filters();
    let mut approx = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    let mut current = x.to_vec();
    for j in 0..levels {
        let stride = 1 << j;
        details.push(circular_filter(&current, &g, stride));
        current = circular_filter(&current, &h, stride);
        approx.push(current.clone());
    }
    Ok(SwtCoeffs { approx, details })
}

/// Inverse transform from `A_J` and `D_1..D_J`.
pub fn swt_reconstruct(coeffs: &SwtCoeffs) -> Result<Vec<f64>> {
    coeffs.validate()?;
    let (h, g) = sym4_filters();
    let mut current = coeffs.coarse().to_vec();
    for j in (0..coeffs.levels()).rev() {
        let stride = 1 << j;
        let lo = circular_filter_adjoint(&current, &h, stride);
        let hi = circular_filter_adjoint(&coeffs.details[j], &g, stride);
        current = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    }
    Ok(current)
}

/// Per-channel rhythm signals, indexed in [`Band::RHYTHMS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhythms(pub [Vec<f64>; 5]);

impl Rhythms {
    pub fn get(&self, band: Band) -> Option<&[f64]> {
        band.rhythm_index().map(|i| self.0[i].as_slice())
    }

    pub fn energies(&self) -> [f64; 5] {
        self.0.clone().map(|s| s.iter().map(|v| v * v).sum())
    }
}

/// Rhythm signals for every channel of a recording at 128 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStack {
    pub fs: f64,
    pub channels: Vec<Rhythms>,
}

impl BandStack {
    pub fn band_rows(&self, band: Band) -> Option<Vec<&[f64]>> {
        self.channels.iter().map(|r| r.get(band)).collect()
    }
}

/// Splits one 128 Hz channel into δ, θ, α, β, γ.
pub fn extract_bands(x: &[f64], fs: f64) -> Result<Rhythms> {
    if (fs - TARGET_FS).abs() > 1e-9 {
        return Err(Error::WrongSamplingRate { expected: TARGET_FS, got: fs });
    }
    let coeffs = swt_decompose(x, BAND_LEVELS)?;
    let n = x.len();
    let zero = vec![0.0; n];
    let only = |coarse: bool, detail: Option<usize>| -> Result<Vec<f64>> {
        let approx = (0..BAND_LEVELS)
            .map(|j| if coarse && j == BAND_LEVELS - 1 { coeffs.coarse().to_vec() } else { zero.clone() })
            .collect();
        let details = (0..BAND_LEVELS)
            .map(|j| if detail == Some(j) { coeffs.details[j].clone() } else { zero.clone() })
            .collect();
        swt_reconstruct(&SwtCoeffs { approx, details })
    };
    Ok(Rhythms([
        only(true, None)?,
        only(false, Some(3))?,
        only(false, Some(2))?,
        only(false, Some(1))?,
        only(false, Some(0))?,
    ]))
}

pub fn extract_band_stack(rows: &[Vec<f64>], fs: f64) -> Result<BandStack> {
    let channels = rows.iter().map(|r| extract_bands(r, fs)).collect::<Result<Vec<_>>>()?;
    Ok(BandStack { fs, channels })
}
