//! Band-pass response of the default Butterworth design and a 256 → 128 Hz
//! resampling of a 10 Hz tone.

use std::f64::consts::PI;

use eegtoken::dsp::{bandpass, butter_bandpass, resample, FilterSpec};

/// Amplitude of a sinusoid from the RMS of its middle half.
fn amplitude(x: &[f64]) -> f64 {
    let mid = &x[x.len() / 4..3 * x.len() / 4];
    (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn main() -> eegtoken::Result<()> {
    let fs = 256.0;
    let spec = FilterSpec::default();
    let sos = butter_bandpass(&spec, fs)?;
    println!("{} biquads, {}–{} Hz", sos.sections.len(), spec.lo, spec.hi);
    for f in [0.1, 0.5, 2.0, 10.0, 30.0, 45.0, 60.0, 100.0] {
        let x: Vec<f64> = (0..4096).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let y = bandpass(&x, fs, &spec)?;
        println!("{f:>6.1} Hz  gain {:>7.2} dB", 20.0 * (amplitude(&y) / amplitude(&x)).log10());
    }
    let x: Vec<f64> = (0..512).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect();
    let y = resample(&x, fs, 128.0)?;
    println!("resampled {} → {} samples, peak {:.3}", x.len(), y.len(), amplitude(&y));
    Ok(())
}
