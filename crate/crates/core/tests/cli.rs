use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eegtoken(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegtoken")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn synth(dir: &Path, name: &str, subjects: &str) {
    ok(&eegtoken(&["synth", "--subjects", subjects, "--seed", "1", "--duration", "4", "--out", name], dir));
}

#[test]
fn synth_writes_files_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "a", "8");
    synth(tmp.path(), "b", "8");
    let files: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.iter().filter(|f| f.to_string_lossy().ends_with(".eegb")).count(), 16);
    assert_eq!(fs::read_to_string(tmp.path().join("a/manifest.jsonl")).unwrap().lines().count(), 16);
    for f in files {
        assert_eq!(fs::read(tmp.path().join("a").join(&f)).unwrap(), fs::read(tmp.path().join("b").join(&f)).unwrap());
    }
}

#[test]
fn usage_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eegtoken(&["synth", "--subjects", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
    assert_eq!(eegtoken(&["xval"], tmp.path()).status.code(), Some(2));
    assert_eq!(eegtoken(&["frobnicate"], tmp.path()).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eegtoken(&["preprocess", "--manifest", "missing.jsonl", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn preprocess_archives_one_group_per_subject() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "data", "4");
    for band in ["alpha", "full"] {
        let out = ok(&eegtoken(&["preprocess", "--manifest", "data/manifest.jsonl", "--band", band, "--out", band], tmp.path()));
        assert!(out.contains("8 subjects"), "{out}");
        let index: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(band).join("index.json")).unwrap()).unwrap();
        assert_eq!(index["band"], band);
        assert_eq!(index["subjects"].as_array().unwrap().len(), 8);
    }
}

#[test]
fn preprocess_skips_short_recordings() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "data", "3");
    let rec = eegtoken::eegio::read_recording(tmp.path().join("data/hc000.eegb")).unwrap();
    let n = (0.75 * rec.fs) as usize;
    let rows = rec.rows().map(|r| r[..n].to_vec()).collect();
    let short = eegtoken::Recording::new(rec.subject_id.clone(), rec.label, rec.fs, rec.channels.clone(), rows).unwrap();
    eegtoken::eegio::write_recording(&short, tmp.path().join("data/hc000.eegb")).unwrap();
    let out = eegtoken(&["preprocess", "--manifest", "data/manifest.jsonl", "--band", "beta", "--out", "arch"], tmp.path());
    let stdout = ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: skipped hc000"));
    assert!(stdout.contains("5 subjects") && stdout.contains("1 skipped"), "{stdout}");
}

#[test]
fn train_eval_and_xval() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "data", "4");
    let small = ["--d-model", "8", "--bottleneck", "4", "--stages", "1"];
    let mut args = vec!["train", "--manifest", "data/manifest.jsonl", "--epochs", "1", "--out", "one.ckpt"];
    args.extend(small);
    ok(&eegtoken(&args, tmp.path()));
    assert!(tmp.path().join("one.ckpt").exists());

    // Zero epochs leaves the random initialization.
    let mut args = vec!["train", "--manifest", "data/manifest.jsonl", "--epochs", "0", "--seed", "5", "--out", "init.ckpt"];
    args.extend(small);
    ok(&eegtoken(&args, tmp.path()));
    let out = ok(&eegtoken(&["eval", "--manifest", "data/manifest.jsonl", "--checkpoint", "init.ckpt"], tmp.path()));
    let v: Value = serde_json::from_str(&out).unwrap();
    let acc = v["segment"]["metrics"]["accuracy"].as_f64().unwrap();
    assert!((0.3..=0.7).contains(&acc), "random-init accuracy {acc}");
    assert_eq!(v["subject"]["confusion"].as_object().unwrap().values().map(|c| c.as_u64().unwrap()).sum::<u64>(), 8);

    fs::write(tmp.path().join("cfg.json"), r#"{"k": 4, "n_repeats": 1, "train": {"epochs": 5}}"#).unwrap();
    let mut args = vec!["xval", "--manifest", "data/manifest.jsonl", "--config", "cfg.json", "--epochs", "1", "--out", "r.json"];
    args.extend(small);
    let table = ok(&eegtoken(&args, tmp.path()));
    assert!(table.contains("±") && table.contains("segment") && table.contains("subject"), "{table}");
    let report = eegtoken::eval::Report::read(tmp.path().join("r.json")).unwrap();
    assert_eq!(report.folds.len(), 4);
    assert_eq!(report.config.train.epochs, 1, "flag overrides the config file");
    assert_eq!(report.config.k, 4);
}

#[test]
fn bench_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&eegtoken(&["bench", "--seconds", "0.2", "--batch", "8"], tmp.path()));
    assert!(out.contains("parameters            252762"), "{out}");
    assert!(out.contains("FLOPs per segment"));
    assert!(out.contains("4.67 GFLOPs"));
}
