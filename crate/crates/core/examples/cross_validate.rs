//! Repeated subject-independent cross-validation on synthetic data; writes
//! the report as JSON and CSV.
//!
//! cargo run --release --example cross_validate -- /tmp/xval

use eegtoken::eegio::{synthesize_dataset, SynthSpec};
use eegtoken::eval::{emit_report, run_on_recordings, ExperimentConfig, ReportFormat, RunOptions};
use eegtoken::model::{ModelConfig, TrainConfig};
use eegtoken::Band;

fn main() -> eegtoken::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "xval-report".into());
    std::fs::create_dir_all(&out)?;
    let spec = SynthSpec { n_subjects_per_class: 5, duration_s: 10.0, ..SynthSpec::default() };
    let cfg = ExperimentConfig {
        band: Band::Alpha,
        n_repeats: 2,
        seed: 11,
        model: ModelConfig { d_model: 16, bottleneck: 8, n_stages: 2, ..ModelConfig::default() },
        train: TrainConfig { epochs: 10, batch_size: 32, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    };
    let report = run_on_recordings(&synthesize_dataset(&spec)?, &cfg, &RunOptions { timing: true, ..RunOptions::default() })?;
    print!("{}", report.table());
    emit_report(&report, format!("{out}/report.json"), ReportFormat::Json)?;
    emit_report(&report, format!("{out}/report.csv"), ReportFormat::Csv)?;
    println!("runtime {:.1} s; reports in {out}/", report.runtime_s.unwrap_or(0.0));
    Ok(())
}
