//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use eegtoken::cli::{bench, REFERENCE_GFLOPS, REFERENCE_SEGMENTS_PER_S};
use eegtoken::dsp::filter::{bandpass, FilterSpec};
use eegtoken::dsp::resample::resample;
use eegtoken::eegio::{synthesize_dataset, BandPowers};
use eegtoken::eval::{check_disjoint, fold_plans, metrics, run_on_segments, Confusion, ExperimentConfig, Report, RunOptions};
use eegtoken::grad::{gradcheck, Fault, GradcheckOptions, Graph, Mode, PoolKind, RunningStats, Tensor, Var};
use eegtoken::model::{count_flops, count_params, forward, Model, ModelConfig, TrainConfig};
use eegtoken::montage::{fit_spline, interpolate_at, MontageSpec, SplineParams};
use eegtoken::pipeline::{preprocess_dataset, PreprocessConfig};
use eegtoken::rng::{stream, Purpose};
use eegtoken::wavelet::{extract_bands, swt_decompose, swt_reconstruct};
use eegtoken::{Band, SynthSpec};

fn randn(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Test, &[]);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn tensor(seed: u64, shape: &[usize]) -> Tensor<f64> {
    Tensor::new(shape, randn(seed, shape.iter().product())).unwrap()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

// 1. Parameter budget.

fn params() {
    let n = count_params(&ModelConfig::default()).unwrap();
    let (c, d, bn, kt, kr) = (19, 128, 64, 7, 3);
    let tokenizer = c * kt + c + d * c + d;
    let conv1 = bn * d * kr + bn;
    let conv2 = d * bn * kr + d;
    let shortcut = d * d + d;
    let norms = 2 * bn + 2 * d + 2 * d;
    let cross = d * d + d;
    let head = 2 * (2 * d) + 2 * d * 2 + 2;
    let hand = tokenizer + 3 * (conv1 + conv2 + shortcut + norms + cross) + head;
    println!("  parameters {n}, hand count {hand}");
    assert_eq!(hand, 252_762);
    assert_eq!(n, hand);
    assert!((232_000..=348_000).contains(&n));
    let model = Model::<f32>::new(ModelConfig::default(), 0).unwrap();
    assert_eq!(model.params.iter().map(Tensor::len).sum::<usize>(), n);
}

// 2. Gradient suite.

fn probe(g: &mut Graph<f64>, y: Var, seed: u64) -> eegtoken::Result<Var> {
    let n = g.value(y).len();
    g.weighted_sum(y, randn(seed, n))
}

type Op = Box<dyn Fn(&mut Graph<f64>, &[Var]) -> eegtoken::Result<Var>>;

fn op_cases() -> Vec<(&'static str, Vec<Tensor<f64>>, Op)> {
    let off_kink = |seed, shape: &[usize]| {
        let x = randn(seed, shape.iter().product()).iter().map(|v| if v.abs() < 1e-2 { v + 0.05 } else { *v }).collect();
        Tensor::new(shape, x).unwrap()
    };
    vec![
        ("conv", vec![tensor(1, &[2, 3, 9]), tensor(2, &[4, 3, 5]), tensor(3, &[4])], Box::new(|g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), 1, 1)?;
            probe(g, y, 10)
        })),
        ("dilated conv", vec![tensor(4, &[2, 3, 12]), tensor(5, &[4, 3, 3]), tensor(6, &[4])], Box::new(|g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), 3, 1)?;
            probe(g, y, 11)
        })),
        ("depthwise conv", vec![tensor(7, &[2, 4, 9]), tensor(8, &[4, 1, 7]), tensor(9, &[4])], Box::new(|g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), 1, 4)?;
            probe(g, y, 12)
        })),
        ("batch norm (eval)", vec![tensor(13, &[3, 2, 5]), tensor(14, &[2]), tensor(15, &[2])], Box::new(|g, v| {
            let mut stats = RunningStats { mean: vec![0.2, -0.1], var: vec![0.8, 1.4] };
            let y = g.batchnorm(v[0], v[1], v[2], &mut stats, Mode::Eval)?;
            probe(g, y, 16)
        })),
        ("relu", vec![off_kink(17, &[40])], Box::new(|g, v| {
            let y = g.relu(v[0])?;
            probe(g, y, 18)
        })),
        ("add", vec![tensor(19, &[2, 3, 4]), tensor(20, &[2, 3, 4])], Box::new(|g, v| {
            let y = g.add(v[0], v[1])?;
            probe(g, y, 21)
        })),
        ("average pool", vec![tensor(22, &[2, 3, 7])], Box::new(|g, v| {
            let y = g.adaptive_pool(v[0], PoolKind::Avg)?;
            probe(g, y, 23)
        })),
        ("max pool", vec![tensor(24, &[2, 3, 7])], Box::new(|g, v| {
            let y = g.adaptive_pool(v[0], PoolKind::Max)?;
            probe(g, y, 25)
        })),
        ("concat", vec![tensor(26, &[2, 3, 1]), tensor(27, &[2, 2])], Box::new(|g, v| {
            let y = g.concat(&[v[0], v[1]])?;
            probe(g, y, 28)
        })),
        ("layer norm", vec![tensor(29, &[3, 6]), tensor(30, &[6]), tensor(31, &[6])], Box::new(|g, v| {
            let y = g.layernorm(v[0], v[1], v[2])?;
            probe(g, y, 32)
        })),
        ("linear", vec![tensor(33, &[4, 6]), tensor(34, &[6, 3]), tensor(35, &[3])], Box::new(|g, v| {
            let y = g.linear(v[0], v[1], v[2])?;
            probe(g, y, 36)
        })),
        ("dropout", vec![tensor(37, &[4, 5])], Box::new(|g, v| {
            let mut rng = stream(38, Purpose::Dropout, &[]);
            let y = g.dropout(v[0], 0.3, Mode::Train, &mut rng)?;
            probe(g, y, 39)
        })),
        ("softmax cross-entropy", vec![tensor(40, &[4, 2])], Box::new(|g, v| g.softmax_cross_entropy(v[0], &[0, 1, 1, 0]))),
        ("weighted sum", vec![tensor(41, &[7])], Box::new(|g, v| probe(g, v[0], 42))),
    ]
}

fn small_model() -> Model<f64> {
    let cfg = ModelConfig {
        n_channels: 3,
        seq_len: 16,
        d_model: 6,
        bottleneck: 4,
        k_token: 3,
        n_stages: 2,
        ..ModelConfig::default()
    };
    let mut m = Model::<f64>::new(cfg, 5).unwrap();
    let mut rng = stream(6, Purpose::Test, &[]);
    for s in &mut m.stats {
        s.mean.iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
        s.var.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
    }
    m
}

fn gradients() {
    let opts = GradcheckOptions::default();
    for (name, inputs, f) in op_cases() {
        let r = gradcheck(&f, &inputs, &opts).unwrap();
        println!("  {name:<22} {:.2e}", r.max_rel_err);
        assert!(r.max_rel_err < 1e-4, "{name}: {r:?}");
    }

    let m = small_model();
    let mut inputs = vec![tensor(7, &[3, 3, 16])];
    inputs.extend(m.params.iter().cloned());
    let net = |g: &mut Graph<f64>, v: &[Var]| {
        let mut stats = m.stats.clone();
        let mut rng = stream(0, Purpose::Dropout, &[]);
        let logits = forward(&m.config, g, v[0], &v[1..], &mut stats, Mode::Eval, &mut rng)?;
        g.softmax_cross_entropy(logits, &[0, 1, 1])
    };
    let r = gradcheck(net, &inputs, &opts).unwrap();
    println!("  {:<22} {:.2e}", "full network", r.max_rel_err);
    assert!(r.max_rel_err < 1e-4, "{r:?}");

    for fault in [Fault::ReluIgnoresMask, Fault::ScaleConvWeightGrad(1.1)] {
        let r = gradcheck(net, &inputs, &GradcheckOptions { fault: Some(fault), ..opts }).unwrap();
        println!("  corrupted {fault:?}: {:.2e}", r.max_rel_err);
        assert!(r.max_rel_err > 1e-2, "{fault:?} went unnoticed");
    }
}

// 3. Stationary wavelet transform.

fn wavelet() {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let x = randn(100 + i, 256);
        for j in 1..=4 {
            let rec = swt_reconstruct(&swt_decompose(&x, j).unwrap()).unwrap();
            worst = worst.max(rel_diff(&rec, &x));
        }
    }
    println!("  reconstruction {worst:.2e}");
    assert!(worst < 1e-8);

    let x = randn(300, 256);
    let base = swt_decompose(&x, 4).unwrap();
    for shift in [1, 5, 16, 131] {
        let rot = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|i| v[(i + v.len() - shift) % v.len()]).collect() };
        let moved = swt_decompose(&rot(&x), 4).unwrap();
        for j in 0..4 {
            assert_eq!(moved.details[j], rot(&base.details[j]), "detail {j}, shift {shift}");
            assert_eq!(moved.approx[j], rot(&base.approx[j]), "approx {j}, shift {shift}");
        }
    }

    let mut worst = 0.0f64;
    for i in 0..20 {
        let x = randn(400 + i, 256);
        let r = extract_bands(&x, 128.0).unwrap();
        let sum: Vec<f64> = (0..x.len()).map(|t| r.0.iter().map(|b| b[t]).sum()).collect();
        worst = worst.max(rel_diff(&sum, &x));
    }
    println!("  band additivity {worst:.2e}");
    assert!(worst < 1e-8);

    let tone: Vec<f64> = (0..1024).map(|t| (2.0 * PI * 10.0 * t as f64 / 128.0).sin()).collect();
    let e = extract_bands(&tone, 128.0).unwrap().energies();
    let share = e[2] / e.iter().sum::<f64>();
    println!("  10 Hz share in alpha {:.1}%", 100.0 * share);
    assert!(share >= 0.8);
}

// 4. Spherical spline.

/// Kernel from its Legendre series, with its own three-term recurrence.
fn kernel_oracle(x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    let mut sum = 3.0 / 16.0 * p1;
    for n in 2..=50 {
        let nf = n as f64;
        let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
        sum += (2.0 * nf + 1.0) / (nf * (nf + 1.0)).powi(4) * p2;
        (p0, p1) = (p1, p2);
    }
    sum / (4.0 * PI)
}

fn cos_angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (norm(a) * norm(b))).clamp(-1.0, 1.0)
}

fn smooth_field(p: &[f64; 3]) -> f64 {
    let [x, y, z] = *p;
    0.8 * x - 0.5 * y + 0.6 * z + 0.4 * x * y + 0.3 * (3.0 * z * z - 1.0) / 2.0
}

fn spline() {
    let montage = MontageSpec::standard_1020();
    let pos = montage.positions();
    let probes: Vec<[f64; 3]> = (0..50)
        .map(|i| {
            let (th, ph) = (0.1 + 1.4 * (i as f64 / 50.0), 0.7 * i as f64);
            [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        })
        .collect();

    let constant = fit_spline(pos, &[3.7; 19], SplineParams::default()).unwrap();
    let out = interpolate_at(&constant, pos, &probes).unwrap();
    let dev = out.iter().map(|v| (v - 3.7).abs()).fold(0.0, f64::max);
    println!("  constant field deviation {dev:.2e}");
    assert!(dev < 1e-12);

    let values: Vec<f64> = randn(500, 19);
    let exact = fit_spline(pos, &values, SplineParams::with_lambda(0.0)).unwrap();
    let back = interpolate_at(&exact, pos, pos).unwrap();
    let dev = back.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("  interpolation condition {dev:.2e}");
    assert!(dev < 1e-8);

    let truth: Vec<f64> = pos.iter().map(smooth_field).collect();
    let mut err2 = 0.0;
    for k in 0..pos.len() {
        let src: Vec<[f64; 3]> = pos.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, p)| *p).collect();
        let vals: Vec<f64> = src.iter().map(smooth_field).collect();
        let m = fit_spline(&src, &vals, SplineParams::default()).unwrap();
        let pred = interpolate_at(&m, &src, &[pos[k]]).unwrap()[0];
        err2 += (pred - truth[k]).powi(2);
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let spread = (truth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / truth.len() as f64).sqrt();
    let loo = (err2 / truth.len() as f64).sqrt() / spread;
    println!("  leave-one-out error {:.2}% of field RMS", 100.0 * loo);
    assert!(loo < 0.05);

    let mut c = randn(501, 19);
    let mean_c = c.iter().sum::<f64>() / 19.0;
    c.iter_mut().for_each(|v| *v -= mean_c);
    let c0 = 1.3;
    let forward_values: Vec<f64> = pos
        .iter()
        .map(|a| c0 + pos.iter().zip(&c).map(|(b, cj)| cj * kernel_oracle(cos_angle(a, b))).sum::<f64>())
        .collect();
    let fit = fit_spline(pos, &forward_values, SplineParams::with_lambda(0.0)).unwrap();
    let dev = fit.c.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold((fit.c0 - c0).abs(), f64::max);
    println!("  coefficient recovery {dev:.2e}");
    assert!(dev < 1e-6);
}

// 5. Filter and resampler.

fn dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    norm(x) / (x.len() as f64).sqrt()
}

fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|t| (2.0 * PI * f * t as f64 / fs).sin()).collect()
}

fn filter_resample() {
    let spec = FilterSpec::default();
    let fs = 256.0;
    let db = |y: &[f64], x: &[f64]| 20.0 * (rms(y) / rms(x)).log10();

    let dc = vec![1.0; 4096];
    let y = bandpass(&dc, fs, &spec).unwrap();
    let dc_db = -20.0 * y.iter().fold(0.0f64, |m, v| m.max(v.abs())).log10();
    let x60 = sine(60.0, fs, 4096);
    // Steady state: the middle half, away from the edge transients.
    let mid = 1024..3072;
    let g60 = -db(&bandpass(&x60, fs, &spec).unwrap()[mid.clone()], &x60[mid.clone()]);
    let x10 = sine(10.0, fs, 4096);
    let g10 = db(&bandpass(&x10, fs, &spec).unwrap()[mid.clone()], &x10[mid]);
    println!("  DC {dc_db:.1} dB down, 60 Hz {g60:.1} dB down, 10 Hz gain {g10:+.3} dB");
    assert!(dc_db > 60.0);
    assert!(g60 > 20.0);
    assert!(g10.abs() <= 1.0);

    for (fs_in, f) in [(500.0, 3.0), (500.0, 10.0), (500.0, 17.5), (256.0, 31.0), (250.0, 40.0)] {
        let x = sine(f, fs_in, (10.0 * fs_in) as usize);
        let y = resample(&x, fs_in, 128.0).unwrap();
        let p = dft_power(&y);
        let peak = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        let expected = (f * y.len() as f64 / 128.0).round() as usize;
        assert_eq!(peak, expected, "{f} Hz from {fs_in} Hz");
    }
}

// 6. Metrics.

fn metric_oracle() {
    let mut rng = stream(600, Purpose::Test, &[]);
    for i in 0..1000 {
        // Every tenth draw empties a cell pair to exercise undefined ratios.
        let mut cell = || rng.random_range(0..60u64);
        let mut c = Confusion { tp: cell(), tn: cell(), fp: cell(), fn_: cell() };
        match i % 10 {
            0 => (c.tp, c.fp) = (0, 0),
            1 => (c.tp, c.fn_) = (0, 0),
            2 => c.tp = 0,
            _ => {}
        }
        if c.tp + c.tn + c.fp + c.fn_ == 0 {
            c.tn = 1;
        }
        let m = metrics(&c).unwrap();
        let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let accuracy = (tp + tn) / (tp + tn + fp + fn_);
        assert_eq!(m.precision, precision, "{c:?}");
        assert_eq!(m.recall, recall, "{c:?}");
        assert_eq!(m.f1, f1, "{c:?}");
        assert_eq!(m.accuracy, accuracy, "{c:?}");
        assert_eq!(m.undefined.precision, tp + fp == 0.0);
        assert_eq!(m.undefined.recall, tp + fn_ == 0.0);
        assert_eq!(m.undefined.f1, precision + recall == 0.0);
    }
}

// 7, 8, 9. End-to-end runs.

fn alpha_separable() -> SynthSpec {
    let hc = BandPowers { delta: 2000.0, theta: 40.0, alpha: 200.0, beta: 30.0, gamma: 10.0 };
    SynthSpec {
        n_subjects_per_class: 8,
        duration_s: 20.0,
        hc_powers: hc,
        ad_powers: BandPowers { alpha: 0.0, ..hc },
        subject_jitter: 0.1,
        noise_sigma: 5.0,
        ..SynthSpec::default()
    }
}

fn default_dataset() -> SynthSpec {
    SynthSpec { n_subjects_per_class: 8, duration_s: 20.0, ..SynthSpec::default() }
}

fn experiment(band: Band) -> ExperimentConfig {
    ExperimentConfig {
        band,
        k: 5,
        n_repeats: 1,
        seed: 1,
        model: ModelConfig { d_model: 32, bottleneck: 16, ..ModelConfig::default() },
        train: TrainConfig { epochs: 30, batch_size: 32, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    }
}

fn xval(spec: &SynthSpec, band: Band, checkpoints: Option<&Path>) -> Report {
    let recs = synthesize_dataset(spec).unwrap();
    let (groups, skipped) = preprocess_dataset(&recs, band, &PreprocessConfig::default()).unwrap();
    assert!(skipped.is_empty());
    let opts = RunOptions { checkpoint_dir: checkpoints.map(Path::to_path_buf), ..RunOptions::default() };
    let t = Instant::now();
    let report = run_on_segments(&groups, vec![], &experiment(band), &opts).unwrap();
    println!("  {band} run: {:.0} s", t.elapsed().as_secs_f64());
    report
}

struct Artifacts {
    json: String,
    checkpoints: Vec<(String, Vec<u8>)>,
}

fn collect(report: &Report, dir: &Path) -> Artifacts {
    let mut checkpoints: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    checkpoints.sort();
    Artifacts { json: report.to_json().unwrap(), checkpoints }
}

fn reference_run() -> &'static Artifacts {
    static RUN: OnceLock<Artifacts> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let report = xval(&default_dataset(), Band::Full, Some(dir.path()));
        collect(&report, dir.path())
    })
}

fn accuracy(report: &Report) -> (f64, f64) {
    (report.summary.segment.accuracy.mean, report.summary.subject.accuracy.mean)
}

fn end_to_end() {
    let report = Report::from_json(&reference_run().json).unwrap();
    println!("{}", report.table());
    let (seg, subj) = accuracy(&report);
    assert!(report.config.train.epochs <= 100);
    assert_eq!(report.n_subjects, 16);
    assert!(subj >= 95.0, "subject accuracy {subj:.2}%");
    assert!(seg >= 85.0, "segment accuracy {seg:.2}%");

    let alpha = xval(&alpha_separable(), Band::Alpha, None);
    let full = xval(&alpha_separable(), Band::Full, None);
    let (a, f) = (accuracy(&alpha).0, accuracy(&full).0);
    println!("  alpha-separable data, segment accuracy: alpha {a:.2}%, full {f:.2}%");
    assert!(a > f);
}

fn leakage() {
    let err = check_disjoint(&["s1".into(), "s2".into()], &["s3".into(), "s2".into()]).unwrap_err();
    assert!(matches!(err, eegtoken::Error::Leakage(ref s) if s == "s2"), "{err}");

    let subjects: Vec<_> = synthesize_dataset(&default_dataset())
        .unwrap()
        .into_iter()
        .map(|r| (r.subject_id, r.label))
        .collect();
    let cfg = ExperimentConfig { n_repeats: 5, ..experiment(Band::Full) };
    let plans = fold_plans(&subjects, &cfg).unwrap();
    let mut folds = 0;
    for plan in &plans {
        plan.check_leakage().unwrap();
        let mut tested: Vec<&String> = plan.folds.iter().flat_map(|f| &f.test).collect();
        tested.sort();
        assert_eq!(tested.len(), subjects.len());
        for f in &plan.folds {
            assert!(f.train.iter().all(|s| !f.test.contains(s)));
            assert_eq!(f.train.len() + f.test.len(), subjects.len());
            folds += 1;
        }
    }
    let report = Report::from_json(&reference_run().json).unwrap();
    for f in &report.folds {
        assert!(f.train_subjects.iter().all(|s| !f.test_subjects.contains(s)));
    }
    println!("  {folds} planned folds and {} trained folds disjoint", report.folds.len());
}

fn determinism() {
    let first = reference_run();
    let dir = tempfile::tempdir().unwrap();
    let report = xval(&default_dataset(), Band::Full, Some(dir.path()));
    let second = collect(&report, dir.path());
    assert_eq!(first.checkpoints.len(), 5);
    assert!(first.json == second.json, "reports differ");
    assert_eq!(first.checkpoints, second.checkpoints, "checkpoints differ");
    println!("  report ({} bytes) and {} checkpoints identical", first.json.len(), first.checkpoints.len());
}

// 10. FLOP counter.

fn flops() {
    let cfg = ModelConfig { d_model: 4, bottleneck: 2, n_stages: 1, seq_len: 8, ..ModelConfig::default() };
    // 19 channels, L = 8, k_token 7, k_res 3.
    let tokenizer = (2 * 19 * 7 * 8 + 19 * 8) + (2 * 4 * 19 * 8 + 4 * 8);
    let conv1 = 2 * 2 * 4 * 3 * 8 + 2 * 8;
    let bn1_relu = 2 * 2 * 8 + 2 * 8;
    let conv2 = 2 * 4 * 2 * 3 * 8 + 4 * 8;
    let bn2 = 2 * 4 * 8;
    let shortcut = (2 * 4 * 4 * 8 + 4 * 8) + 2 * 4 * 8;
    let add_relu = 4 * 8 + 4 * 8;
    let cross = (2 * 4 * 4 * 8 + 4 * 8) + 4 * 8;
    let pools = 2 * 4 * 8;
    let layernorm = 7 * 8;
    let linear = 2 * 8 * 2 + 2;
    let hand = tokenizer + conv1 + bn1_relu + conv2 + bn2 + shortcut + add_relu + cross + pools + layernorm + linear;
    let n = count_flops(&cfg, 8).unwrap();
    println!("  tiny config {n} FLOPs, hand count {hand}");
    assert_eq!(hand, 5346);
    assert_eq!(n, hand as u64);

    let r = bench(&ModelConfig::default(), 128, Duration::from_millis(200), 0).unwrap();
    assert_eq!(r.flops_per_batch, 128 * r.flops_per_segment);
    assert_eq!(r.flops_per_segment, count_flops(&ModelConfig::default(), 128).unwrap());
    println!(
        "  default: {:.4} GFLOPs/segment, {:.3} GFLOPs/batch of 128, {:.0} segments/s (reference {REFERENCE_GFLOPS} GFLOPs, {REFERENCE_SEGMENTS_PER_S:.0} segments/s)",
        r.flops_per_segment as f64 / 1e9,
        r.flops_per_batch as f64 / 1e9,
        r.segments_per_s
    );
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 10] = [
        ("parameter count", params),
        ("gradient checks", gradients),
        ("stationary wavelet transform", wavelet),
        ("spherical spline", spline),
        ("filter and resampler", filter_resample),
        ("metrics oracle", metric_oracle),
        ("end-to-end accuracy", end_to_end),
        ("subject leakage", leakage),
        ("determinism", determinism),
        ("FLOP counter", flops),
    ];
    // Optional criterion numbers on the command line select a subset.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        failed += usize::from(!ok);
        println!("{} {:>2} {name} ({:.1} s)", if ok { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
    }
    let run = if only.is_empty() { criteria.len() } else { only.len() };
    println!("{} of {run} criteria passed", run - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
