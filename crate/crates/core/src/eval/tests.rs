use super::*;
use crate::band::Band;
use crate::eegio::{synthesize_dataset, Label, SynthSpec};
use crate::error::Error;
use crate::model::{read_checkpoint, Model, ModelConfig, TrainConfig};
use crate::pipeline::{preprocess_dataset, PreprocessConfig, SubjectSegments};

fn tiny_config(band: Band) -> ExperimentConfig {
    ExperimentConfig {
        band,
        k: 3,
        n_repeats: 2,
        seed: 9,
        model: ModelConfig { d_model: 8, bottleneck: 4, n_stages: 1, ..ModelConfig::default() },
        train: TrainConfig { epochs: 2, batch_size: 16, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    }
}

fn tiny_groups(band: Band) -> Vec<SubjectSegments> {
    let spec = SynthSpec { n_subjects_per_class: 3, duration_s: 3.0, ..SynthSpec::default() };
    preprocess_dataset(&synthesize_dataset(&spec).unwrap(), band, &PreprocessConfig::default()).unwrap().0
}

#[test]
fn report_structure_and_aggregation() {
    let cfg = tiny_config(Band::Alpha);
    let groups = tiny_groups(Band::Alpha);
    let report = run_on_segments(&groups, vec![], &cfg, &RunOptions::default()).unwrap();
    assert_eq!(report.folds.len(), 6);
    assert_eq!(report.n_subjects, 6);
    assert_eq!(report.n_segments, groups.iter().map(SubjectSegments::len).sum::<usize>());
    assert!(report.runtime_s.is_none());
    for f in &report.folds {
        assert_eq!(f.subject.confusion.total(), f.test_subjects.len() as u64);
        let segs: usize = f.test_subjects.iter().map(|s| groups.iter().find(|g| &g.subject_id == s).unwrap().len()).sum();
        assert_eq!(f.segment.confusion.total(), segs as u64);
        assert_eq!(f.train_loss.len(), 2);
        let c = f.segment.confusion;
        assert_eq!(f.segment.metrics.accuracy, (c.tp + c.tn) as f64 / c.total() as f64);
    }
    for level in Level::BOTH {
        for (i, ms) in report.summary.level(level).values().iter().enumerate() {
            let v: Vec<f64> = report.folds.iter().map(|f| 100.0 * f.level(level).metrics.values()[i]).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((ms.mean - mean).abs() < 1e-12);
            assert!((0.0..=100.0).contains(&ms.mean));
        }
    }
    let table = report.table();
    assert!(table.contains("subject") && table.contains("±"));
}

#[test]
fn reruns_and_parallel_runs_are_identical() {
    let cfg = tiny_config(Band::Full);
    let groups = tiny_groups(Band::Full);
    let a = run_on_segments(&groups, vec![], &cfg, &RunOptions::default()).unwrap();
    let b = run_on_segments(&groups, vec![], &cfg, &RunOptions { jobs: 3, ..RunOptions::default() }).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let other = run_on_segments(&groups, vec![], &ExperimentConfig { seed: 10, ..cfg }, &RunOptions::default()).unwrap();
    assert_ne!(a.folds[0].train_loss, other.folds[0].train_loss);
}

#[test]
fn json_round_trip_and_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(Band::Theta);
    let report = run_on_segments(&tiny_groups(Band::Theta), vec!["gone".into()], &cfg, &RunOptions::default()).unwrap();
    let json = dir.path().join("r.json");
    emit_report(&report, &json, ReportFormat::Json).unwrap();
    assert_eq!(Report::read(&json).unwrap(), report);
    let csv = dir.path().join("r.csv");
    emit_report(&report, &csv, ReportFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + cfg.n_repeats * cfg.k * 2 * 4);
    assert_eq!(ReportFormat::from_path(&csv), ReportFormat::Csv);

    let mut empty = report.clone();
    empty.folds.clear();
    assert!(matches!(emit_report(&empty, dir.path().join("e.json"), ReportFormat::Json), Err(Error::EmptyReport(_))));
}

#[test]
fn leaked_report_is_rejected() {
    let cfg = tiny_config(Band::Full);
    let mut report = run_on_segments(&tiny_groups(Band::Full), vec![], &cfg, &RunOptions::default()).unwrap();
    let s = report.folds[1].test_subjects[0].clone();
    report.folds[1].train_subjects.push(s);
    assert!(matches!(report.validate(), Err(Error::Leakage(_))));
}

#[test]
fn checkpoints_are_written_per_fold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { n_repeats: 1, ..tiny_config(Band::Full) };
    let opts = RunOptions { checkpoint_dir: Some(dir.path().to_path_buf()), timing: true, ..RunOptions::default() };
    let report = run_on_segments(&tiny_groups(Band::Full), vec![], &cfg, &opts).unwrap();
    assert!(report.runtime_s.is_some());
    for f in 0..cfg.k {
        let m: Model<f32> = read_checkpoint(dir.path().join(format!("r0_f{f}.ckpt"))).unwrap();
        assert_eq!(m.config, cfg.model);
    }
}

#[test]
fn failed_fold_carries_context() {
    let mut cfg = tiny_config(Band::Full);
    cfg.train.batch_size = 0;
    let err = run_on_segments(&tiny_groups(Band::Full), vec![], &cfg, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Fold { repeat: 0, fold: 0, .. }), "{err}");
    let err = run_on_segments(&tiny_groups(Band::Full), vec![], &cfg, &RunOptions { jobs: 2, ..RunOptions::default() }).unwrap_err();
    assert!(matches!(err, Error::Fold { .. }));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let groups = tiny_groups(Band::Alpha);
    let cfg = tiny_config(Band::Beta);
    assert!(matches!(run_on_segments(&groups, vec![], &cfg, &RunOptions::default()), Err(Error::InvalidConfig(_))));
    let few: Vec<_> = groups.iter().filter(|g| g.label == Label::Hc).cloned().collect();
    assert!(matches!(
        run_on_segments(&few, vec![], &tiny_config(Band::Alpha), &RunOptions::default()),
        Err(Error::TooFewSubjects(_))
    ));
}

#[test]
fn every_plan_is_leak_free() {
    let subjects: Vec<(String, Label)> =
        (0..16).map(|i| (format!("s{i:02}"), if i % 2 == 0 { Label::Hc } else { Label::Ad })).collect();
    let plans = fold_plans(&subjects, &ExperimentConfig::default()).unwrap();
    assert_eq!(plans.len(), 5);
    for p in &plans {
        p.check_leakage().unwrap();
    }
    assert_ne!(plans[0], plans[1]);
}
