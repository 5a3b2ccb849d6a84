use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::eegio::{Label, Manifest, Recording};
use crate::error::{Error, Result};
use crate::model::{predict_segments, predict_subject, train, write_checkpoint, Model, ModelConfig, TrainConfig};
use crate::pipeline::{preprocess_dataset, stack, PreprocessConfig, SubjectSegments};
use crate::rng::{derive_seed, Purpose};

use super::folds::{check_disjoint, subject_kfold, Fold, FoldPlan};
use super::metrics::{confusion, metrics};
use super::report::{summarize, FoldResult, LevelResult, Report};

/// Everything that determines a cross-validation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub band: Band,
    pub k: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Batch size for eval-mode prediction.
    pub eval_batch: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            band: Band::Full,
            k: 5,
            n_repeats: 5,
            seed: 0,
            preprocess: PreprocessConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval_batch: 256,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_repeats == 0 {
            return Err(Error::InvalidConfig("n_repeats must be positive".into()));
        }
        if self.preprocess.seg_len != self.model.seq_len {
            return Err(Error::InvalidConfig(format!(
                "segment length {} differs from model seq_len {}",
                self.preprocess.seg_len, self.model.seq_len
            )));
        }
        if self.model.n_classes != 2 {
            return Err(Error::InvalidConfig("cross-validation scores the binary HC/AD task".into()));
        }
        Ok(())
    }

    /// Fold plan seed of repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        derive_seed(self.seed, Purpose::Repeat, &[r as u64])
    }

    /// Initialization, shuffling and dropout seed of one fold.
    pub fn fold_seed(&self, r: usize, f: usize) -> u64 {
        derive_seed(self.seed, Purpose::Fold, &[r as u64, f as u64])
    }
}

/// Settings that do not change the numbers in a report.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for folds; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Writes `r{repeat}_f{fold}.ckpt` for every trained fold model.
    pub checkpoint_dir: Option<PathBuf>,
    /// Records wall-clock runtime in the report.
    pub timing: bool,
}

pub fn fold_plans(subjects: &[(String, Label)], config: &ExperimentConfig) -> Result<Vec<FoldPlan>> {
    (0..config.n_repeats).map(|r| subject_kfold(subjects, config.k, config.repeat_seed(r))).collect()
}

/// Preprocesses the manifest's recordings and cross-validates.
pub fn run_experiment(manifest: &Manifest, config: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    run_on_recordings(&manifest.load_recordings()?, config, opts)
}

pub fn run_on_recordings(recordings: &[Recording], config: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    config.validate()?;
    let (groups, skipped) = preprocess_dataset(recordings, config.band, &config.preprocess)?;
    let skipped = skipped.into_iter().map(|s| s.subject_id).collect();
    let mut report = run_on_segments(&groups, skipped, config, opts)?;
    if opts.timing {
        report.runtime_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

/// Cross-validates already preprocessed subjects. Preprocessing is fit-free,
/// so one pass over the dataset serves every fold.
pub fn run_on_segments(
    groups: &[SubjectSegments],
    skipped: Vec<String>,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<Report> {
    let start = Instant::now();
    config.validate()?;
    for g in groups {
        if g.band != config.band {
            return Err(Error::InvalidConfig(format!("{} holds {} segments, run expects {}", g.subject_id, g.band, config.band)));
        }
        if g.n_channels != config.model.n_channels || g.seg_len != config.model.seq_len {
            return Err(Error::Shape(format!(
                "{}: segments are {}×{}, model expects {}×{}",
                g.subject_id, g.n_channels, g.seg_len, config.model.n_channels, config.model.seq_len
            )));
        }
        if g.is_empty() {
            return Err(Error::Empty(format!("{} has no segments", g.subject_id)));
        }
    }
    let by_id: HashMap<&str, &SubjectSegments> = groups.iter().map(|g| (g.subject_id.as_str(), g)).collect();
    let subjects: Vec<(String, Label)> = groups.iter().map(|g| (g.subject_id.clone(), g.label)).collect();
    let plans = fold_plans(&subjects, config)?;
    if let Some(dir) = &opts.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }

    let units: Vec<(usize, usize, &Fold)> = plans
        .iter()
        .enumerate()
        .flat_map(|(r, p)| p.folds.iter().enumerate().map(move |(f, fold)| (r, f, fold)))
        .collect();
    let run = |&(r, f, fold): &(usize, usize, &Fold)| {
        run_fold(&by_id, fold, config, r, f, opts).map_err(|e| Error::Fold { repeat: r, fold: f, source: Box::new(e) })
    };
    let results: Vec<Result<FoldResult>> = if opts.jobs <= 1 {
        let mut out = Vec::with_capacity(units.len());
        for u in &units {
            let res = run(u);
            let failed = res.is_err();
            out.push(res);
            if failed {
                break;
            }
        }
        out
    } else {
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let slots: Mutex<Vec<Option<Result<FoldResult>>>> = Mutex::new((0..units.len()).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..opts.jobs.min(units.len()) {
                s.spawn(|| loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(u) = units.get(i) else { break };
                    let res = run(u);
                    if res.is_err() {
                        abort.store(true, Ordering::Relaxed);
                    }
                    slots.lock().unwrap()[i] = Some(res);
                });
            }
        });
        slots.into_inner().unwrap().into_iter().flatten().collect()
    };
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(&folds)?;
    let report = Report {
        band: config.band,
        config: config.clone(),
        n_subjects: groups.len(),
        n_segments: groups.iter().map(SubjectSegments::len).sum(),
        skipped,
        folds,
        summary,
        runtime_s: opts.timing.then(|| start.elapsed().as_secs_f64()),
    };
    report.validate()?;
    Ok(report)
}

fn run_fold(
    by_id: &HashMap<&str, &SubjectSegments>,
    fold: &Fold,
    config: &ExperimentConfig,
    r: usize,
    f: usize,
    opts: &RunOptions,
) -> Result<FoldResult> {
    check_disjoint(&fold.train, &fold.test)?;
    let lookup = |id: &String| by_id.get(id.as_str()).copied().ok_or_else(|| Error::InvalidSpec(format!("unknown subject {id}")));
    let train_groups = fold.train.iter().map(lookup).collect::<Result<Vec<_>>>()?;
    let test_groups = fold.test.iter().map(lookup).collect::<Result<Vec<_>>>()?;

    let (x, y) = stack(train_groups.iter().copied());
    let seed = config.fold_seed(r, f);
    let mut model = Model::<f32>::new(config.model.clone(), seed)?;
    let history = train(&mut model, &x, &y, &config.train, seed)?;

    let (segment, subject) = score(&model, &test_groups, config.eval_batch)?;
    if let Some(dir) = &opts.checkpoint_dir {
        write_checkpoint(&model, dir.join(format!("r{r}_f{f}.ckpt")))?;
    }
    Ok(FoldResult {
        repeat: r,
        fold: f,
        train_subjects: fold.train.clone(),
        test_subjects: fold.test.clone(),
        segment,
        subject,
        train_loss: history.epoch_loss,
    })
}

/// Segment-level and subject-level (majority vote) scores of a trained model.
pub fn score(model: &Model<f32>, groups: &[&SubjectSegments], batch: usize) -> Result<(LevelResult, LevelResult)> {
    let (mut seg_truth, mut seg_pred, mut subj_truth, mut subj_pred) = (vec![], vec![], vec![], vec![]);
    for g in groups {
        let pred = predict_segments(model, &g.data, batch)?.labels;
        seg_truth.extend(std::iter::repeat_n(g.label.index(), pred.len()));
        subj_truth.push(g.label.index());
        subj_pred.push(predict_subject(&pred)?);
        seg_pred.extend(pred);
    }
    let level = |t: &[usize], p: &[usize]| -> Result<LevelResult> {
        let c = confusion(t, p)?;
        Ok(LevelResult { confusion: c, metrics: metrics(&c)? })
    };
    Ok((level(&seg_truth, &seg_pred)?, level(&subj_truth, &subj_pred)?))
}
