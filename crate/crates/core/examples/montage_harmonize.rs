//! Drops electrodes from a recording and restores them by spherical spline
//! interpolation; prints the per-channel reconstruction error.

use eegtoken::eegio::{synthesize_recording, SynthSpec};
use eegtoken::montage::{harmonize, MontageSpec, STANDARD_1020};
use eegtoken::{Label, Recording};

fn main() -> eegtoken::Result<()> {
    let spec = SynthSpec { duration_s: 2.0, ..SynthSpec::default() };
    let full = synthesize_recording(&spec, Label::Hc, 0)?;

    // A smooth scalp field is easier to judge than independent channels:
    // every channel carries the same signal weighted by its position.
    let target = MontageSpec::standard_1020();
    let base = full.channel(0).to_vec();
    let rows: Vec<Vec<f32>> = target
        .positions()
        .iter()
        .map(|p| base.iter().map(|&v| v * (1.0 + 0.5 * p[0] + 0.3 * p[2]) as f32).collect())
        .collect();
    let field = Recording::new("field", Label::Hc, full.fs, full.channels.clone(), rows)?;

    let dropped = ["Fz", "Cz", "Pz"];
    let keep: Vec<usize> = (0..19).filter(|&i| !dropped.contains(&STANDARD_1020[i])).collect();
    let partial = Recording::new(
        "partial",
        Label::Hc,
        field.fs,
        keep.iter().map(|&i| field.channels[i].clone()).collect(),
        keep.iter().map(|&i| field.channel(i).to_vec()).collect(),
    )?;
    let restored = harmonize(&partial, &target)?;
    for name in dropped {
        let i = target.index_of(name).unwrap();
        let (a, b) = (field.channel(i), restored.channel(i));
        let err: f64 = a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        println!("{name:>3}: relative RMS error {:.2} %", 100.0 * err / norm);
    }
    Ok(())
}
