//! Writes a small synthetic HC/AD dataset and reads it back.
//!
//! cargo run --example synth_dataset -- /tmp/eeg-synth

use eegtoken::eegio::{read_recording, synthesize_to_dir, SynthSpec};
use eegtoken::{Band, Manifest};

fn main() -> eegtoken::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synth-data".into());
    let spec = SynthSpec { n_subjects_per_class: 3, duration_s: 8.0, ..SynthSpec::default() };
    synthesize_to_dir(&spec, &dir)?;
    let manifest = Manifest::read(format!("{dir}/manifest.jsonl"))?;
    for e in &manifest.entries {
        let rec = read_recording(&e.path)?;
        println!(
            "{:>6} {:?}  {} ch × {} samples @ {} Hz  (target α power {:.0} µV²)",
            rec.subject_id,
            rec.label,
            rec.n_channels(),
            rec.n_samples(),
            rec.fs,
            spec.powers(rec.label).get(Band::Alpha)
        );
    }
    Ok(())
}
