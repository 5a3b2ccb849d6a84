//! Full preprocessing chain on synthetic recordings, written to a segment
//! archive for every band.
//!
//! cargo run --example preprocess_archive -- /tmp/eeg-archive

use eegtoken::eegio::{synthesize_dataset, SynthSpec};
use eegtoken::pipeline::{preprocess_dataset, read_archive, write_archive, PreprocessConfig};
use eegtoken::Band;

fn main() -> eegtoken::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "segment-archive".into());
    let spec = SynthSpec { n_subjects_per_class: 2, duration_s: 6.0, ..SynthSpec::default() };
    let recordings = synthesize_dataset(&spec)?;
    for band in Band::RHYTHMS.into_iter().chain([Band::Full]) {
        let (groups, skipped) = preprocess_dataset(&recordings, band, &PreprocessConfig::default())?;
        let dir = format!("{root}/{band}");
        write_archive(&dir, &groups)?;
        let (index, back) = read_archive(&dir)?;
        let first = back[0].segment(0).unwrap();
        println!(
            "{:<6} {} subjects, {} segments of {}×{}, {} skipped; first row starts {:?}",
            band.name(),
            index.subjects.len(),
            back.iter().map(|g| g.len()).sum::<usize>(),
            index.n_channels,
            index.seg_len,
            skipped.len(),
            &first.row(0)[..3]
        );
    }
    Ok(())
}
