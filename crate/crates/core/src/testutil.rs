//! Brute-force reference routines shared by unit tests. Deliberately naive:
//! they must not share code paths with the implementations they check.

use std::f64::consts::PI;

/// One-sided periodogram by direct DFT. A unit-amplitude sinusoid on a bin
/// contributes 0.5 at that bin.
pub fn periodogram(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        let scale = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
        freqs.push(k as f64 * fs / n as f64);
        power.push(scale * (re * re + im * im) / (n * n) as f64);
    }
    (freqs, power)
}

pub fn band_power(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let (f, p) = periodogram(x, fs);
    f.iter().zip(&p).filter(|(f, _)| **f >= lo && **f < hi).map(|(_, p)| p).sum()
}

pub fn sine(freq: f64, fs: f64, n: usize, amp: f64, phase: f64) -> Vec<f64> {
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / fs + phase).sin()).collect()
}

pub fn random_vec(seed: u64, n: usize) -> Vec<f64> {
    use rand::Rng;
    let mut r = crate::rng::stream(seed, crate::rng::Purpose::Test, &[n as u64]);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
