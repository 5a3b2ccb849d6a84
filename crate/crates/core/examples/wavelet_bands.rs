//! Splits a two-tone signal into δ, θ, α, β, γ with the stationary wavelet
//! transform and prints the energy share of each rhythm.

use std::f64::consts::PI;

use eegtoken::wavelet::{extract_bands, swt_decompose, swt_reconstruct};
use eegtoken::Band;

fn main() -> eegtoken::Result<()> {
    let fs = 128.0;
    let x: Vec<f64> =
        (0..1024).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin() + 0.5 * (2.0 * PI * 2.0 * i as f64 / fs).sin()).collect();
    let coeffs = swt_decompose(&x, 4)?;
    let back = swt_reconstruct(&coeffs)?;
    let err = x.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("reconstruction max error {err:.2e}");

    let rhythms = extract_bands(&x, fs)?;
    let e = rhythms.energies();
    let total: f64 = e.iter().sum();
    for (band, e) in Band::RHYTHMS.iter().zip(e) {
        let (lo, hi) = band.range_hz();
        println!("{:<6} {lo:>4}–{hi:<4} Hz {:>6.1} %", band.name(), 100.0 * e / total);
    }
    Ok(())
}
