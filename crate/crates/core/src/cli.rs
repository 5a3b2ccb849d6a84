//! Command-line interface. Each subcommand accepts `--config` with a JSON
//! file; flags given on the command line override values from that file.
//! Data goes to stdout, diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::band::Band;
use crate::eegio::{synthesize_to_dir, Manifest, SynthSpec};
use crate::error::{Error, Result};
use crate::eval::{emit_report, run_on_segments, score, ExperimentConfig, LevelResult, ReportFormat, RunOptions};
use crate::grad::Tensor;
use crate::model::{count_flops, count_params, read_checkpoint, train, write_checkpoint, Model, ModelConfig};
use crate::pipeline::{preprocess_dataset, read_archive, stack, write_archive, SubjectSegments};
use crate::rng::{stream, Purpose};

/// Published reference figures printed next to the measured ones.
pub const REFERENCE_GFLOPS: f64 = 4.67;
pub const REFERENCE_SEGMENTS_PER_S: f64 = 26_173.0;

#[derive(Debug, Parser)]
#[command(name = "eegtoken", version, about = "EEG rhythm tokenizer: data synthesis, preprocessing, training and cross-validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic HC/AD dataset (EEGB files + manifest.jsonl).
    Synth(SynthArgs),
    /// Preprocess a manifest into a segment archive for one band.
    Preprocess(PreprocessArgs),
    /// Train one model on all subjects and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint at segment and subject level.
    Eval(EvalArgs),
    /// Repeated subject-independent k-fold cross-validation.
    Xval(XvalArgs),
    /// Parameter count, FLOPs and eval-mode throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Subjects per class.
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Recording length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON synthesis spec.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Where segments come from: raw recordings or a preprocessed archive.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// manifest.jsonl of EEGB recordings.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Segment archive directory written by `preprocess`.
    #[arg(long)]
    pub archive: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// delta, theta, alpha, beta, gamma or full [default: full].
    #[arg(long)]
    pub band: Option<Band>,
    /// Archive directory.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON experiment config (its `band` and `preprocess` sections are used).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Experiment settings shared by train and xval.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub band: Option<Band>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub bottleneck: Option<usize>,
    #[arg(long)]
    pub stages: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "full")]
    pub band: Band,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
}

#[derive(Debug, Args)]
pub struct XvalArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Folds [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Repeats with distinct fold plans [default: 5].
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Report path; `.csv` selects CSV unless --format is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<ReportFormat>,
    /// Directory for per-fold checkpoints.
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Worker threads for folds.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record wall-clock runtime in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON model config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub bottleneck: Option<usize>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    /// Minimum measuring time in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn load_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = load_json(self.config.as_deref())?;
        set(&mut cfg.band, self.band);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.train.epochs, self.epochs);
        set(&mut cfg.train.batch_size, self.batch_size);
        set(&mut cfg.train.adam.lr, self.lr);
        set(&mut cfg.model.d_model, self.d_model);
        set(&mut cfg.model.bottleneck, self.bottleneck);
        set(&mut cfg.model.n_stages, self.stages);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Loads segments from an archive, or preprocesses a manifest; skipped
/// recordings are reported on stderr.
fn load_segments(source: &Source, cfg: &ExperimentConfig) -> Result<(Vec<SubjectSegments>, Vec<String>)> {
    if let Some(dir) = &source.archive {
        let (index, groups) = read_archive(dir)?;
        if index.band != cfg.band {
            return Err(Error::InvalidConfig(format!("archive holds band {}, requested {}", index.band, cfg.band)));
        }
        return Ok((groups, vec![]));
    }
    let manifest = Manifest::read(source.manifest.as_ref().expect("clap enforces one source"))?;
    let (groups, skipped) = preprocess_dataset(&manifest.load_recordings()?, cfg.band, &cfg.preprocess)?;
    for s in &skipped {
        eprintln!("warning: skipped {}: {}", s.subject_id, s.reason);
    }
    Ok((groups, skipped.into_iter().map(|s| s.subject_id).collect()))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = load_json(args.config.as_deref())?;
    set(&mut spec.n_subjects_per_class, args.subjects);
    set(&mut spec.duration_s, args.duration);
    set(&mut spec.fs, args.fs);
    set(&mut spec.seed, args.seed);
    let manifest = synthesize_to_dir(&spec, &args.out)?;
    println!("wrote {} recordings and manifest.jsonl to {}", manifest.entries.len(), args.out.display());
    Ok(())
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = load_json(args.config.as_deref())?;
    set(&mut cfg.band, args.band);
    let manifest = Manifest::read(&args.manifest)?;
    let (groups, skipped) = preprocess_dataset(&manifest.load_recordings()?, cfg.band, &cfg.preprocess)?;
    for s in &skipped {
        eprintln!("warning: skipped {}: {}", s.subject_id, s.reason);
    }
    let index = write_archive(&args.out, &groups)?;
    let n: usize = index.subjects.iter().map(|e| e.n_segments).sum();
    println!("band {}: {} subjects, {} segments, {} skipped", index.band, index.subjects.len(), n, skipped.len());
    Ok(())
}

/// Trains one model on every loaded subject.
pub fn train_all(groups: &[SubjectSegments], cfg: &ExperimentConfig) -> Result<Model<f32>> {
    let (x, y) = stack(groups);
    let mut model = Model::<f32>::new(cfg.model.clone(), cfg.seed)?;
    let history = train(&mut model, &x, &y, &cfg.train, cfg.seed)?;
    if let Some(last) = history.epoch_loss.last() {
        eprintln!("trained {} epochs on {} segments, final loss {last:.4}", history.epoch_loss.len(), y.len());
    }
    Ok(model)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.experiment.resolve()?;
    let (groups, _) = load_segments(&args.source, &cfg)?;
    let model = train_all(&groups, &cfg)?;
    write_checkpoint(&model, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub band: Band,
    pub n_subjects: usize,
    pub n_segments: usize,
    pub segment: LevelResult,
    pub subject: LevelResult,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model: Model<f32> = read_checkpoint(&args.checkpoint)?;
    let cfg = ExperimentConfig { band: args.band, model: model.config.clone(), ..ExperimentConfig::default() };
    let (groups, _) = load_segments(&args.source, &cfg)?;
    let refs: Vec<&SubjectSegments> = groups.iter().collect();
    let (segment, subject) = score(&model, &refs, args.batch)?;
    print_json(&EvalOutput {
        band: args.band,
        n_subjects: groups.len(),
        n_segments: groups.iter().map(SubjectSegments::len).sum(),
        segment,
        subject,
    })
}

pub fn cmd_xval(args: &XvalArgs) -> Result<()> {
    let mut cfg = args.experiment.resolve()?;
    set(&mut cfg.k, args.folds);
    set(&mut cfg.n_repeats, args.repeats);
    let start = Instant::now();
    let (groups, skipped) = load_segments(&args.source, &cfg)?;
    let opts = RunOptions { jobs: args.jobs, checkpoint_dir: args.checkpoints.clone(), timing: args.timing };
    let mut report = run_on_segments(&groups, skipped, &cfg, &opts)?;
    if args.timing {
        report.runtime_s = Some(start.elapsed().as_secs_f64());
    }
    print!("{}", report.table());
    if let Some(path) = &args.out {
        let format = args.format.unwrap_or_else(|| ReportFormat::from_path(path));
        emit_report(&report, path, format)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub params: usize,
    pub flops_per_segment: u64,
    pub flops_per_batch: u64,
    pub batch: usize,
    pub batches: usize,
    pub seconds: f64,
    pub segments_per_s: f64,
}

/// Times eval-mode forward passes on random batches for at least
/// `min_time`.
pub fn bench(config: &ModelConfig, batch: usize, min_time: Duration, seed: u64) -> Result<BenchReport> {
    if batch == 0 {
        return Err(Error::InvalidConfig("batch must be positive".into()));
    }
    let model = Model::<f32>::new(config.clone(), seed)?;
    let mut rng = stream(seed, Purpose::Bench, &[]);
    let shape = [batch, config.n_channels, config.seq_len];
    let x: Tensor<f32> = Tensor::from_fn(&shape, |_| StandardNormal.sample(&mut rng));
    model.logits(x.clone())?;
    let start = Instant::now();
    let mut batches = 0;
    while batches == 0 || start.elapsed() < min_time {
        model.logits(x.clone())?;
        batches += 1;
    }
    let seconds = start.elapsed().as_secs_f64();
    let per_segment = count_flops(config, config.seq_len)?;
    Ok(BenchReport {
        params: count_params(config)?,
        flops_per_segment: per_segment,
        flops_per_batch: per_segment * batch as u64,
        batch,
        batches,
        seconds,
        segments_per_s: (batches * batch) as f64 / seconds,
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let mut cfg: ModelConfig = load_json(args.config.as_deref())?;
    set(&mut cfg.d_model, args.d_model);
    set(&mut cfg.bottleneck, args.bottleneck);
    set(&mut cfg.n_stages, args.stages);
    cfg.validate()?;
    let r = bench(&cfg, args.batch, Duration::from_secs_f64(args.seconds.max(0.0)), args.seed)?;
    println!("parameters            {}", r.params);
    println!("FLOPs per segment     {} ({:.4} GFLOPs)", r.flops_per_segment, r.flops_per_segment as f64 / 1e9);
    println!("FLOPs per batch of {:<3} {} ({:.3} GFLOPs)", r.batch, r.flops_per_batch, r.flops_per_batch as f64 / 1e9);
    println!("throughput            {:.0} segments/s ({} batches in {:.1} s)", r.segments_per_s, r.batches, r.seconds);
    println!(
        "reference             {REFERENCE_GFLOPS} GFLOPs, {REFERENCE_SEGMENTS_PER_S:.0} segments/s (published figures, other hardware)"
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Xval(a) => cmd_xval(a),
        Command::Bench(a) => cmd_bench(a),
    }
}
