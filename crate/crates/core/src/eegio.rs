//! Recording container, the EEGB v1 file format, JSON-lines manifests and
//! the synthetic dataset generator.
//!
//! EEGB v1 layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes  "EEGB"
//! version      u16      1
//! fs           f64      sampling rate in Hz
//! n_channels   u16
//! n_samples    u64
//! label        u8       0 = HC, 1 = AD
//! subject_id   u16 length + UTF-8 bytes
//! channels     n_channels x (u16 length + UTF-8 bytes)
//! samples      n_channels * n_samples f32, channel-major
//! ```

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};
use crate::montage;
use crate::rng::{self, Purpose};

pub const EEGB_MAGIC: [u8; 4] = *b"EEGB";
pub const EEGB_VERSION: u16 = 1;

/// Diagnostic class. AD is the positive class everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HC")]
    Hc = 0,
    #[serde(rename = "AD")]
    Ad = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Label> {
        match i {
            0 => Ok(Label::Hc),
            1 => Ok(Label::Ad),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

/// Multi-channel recording with channel-major samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub label: Label,
    pub fs: f64,
    pub channels: Vec<String>,
    data: Vec<f32>,
    n_samples: usize,
}

impl Recording {
    /// Builds a recording from per-channel rows, validating every invariant.
    pub fn new(
        subject_id: impl Into<String>,
        label: Label,
        fs: f64,
        channels: Vec<String>,
        rows: Vec<Vec<f32>>,
    ) -> Result<Self> {
        if rows.len() != channels.len() {
            return Err(Error::InvalidRecording(format!(
                "{} channel names but {} data rows",
                channels.len(),
                rows.len()
            )));
        }
        let n_samples = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_samples) {
            return Err(Error::InvalidRecording("ragged channel rows".into()));
        }
        let rec = Recording {
            subject_id: subject_id.into(),
            label,
            fs,
            channels,
            data: rows.concat(),
            n_samples,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Builds a recording from already channel-major samples.
    pub fn from_flat(
        subject_id: impl Into<String>,
        label: Label,
        fs: f64,
        channels: Vec<String>,
        data: Vec<f32>,
    ) -> Result<Self> {
        let n_samples = if channels.is_empty() { 0 } else { data.len() / channels.len() };
        if n_samples * channels.len() != data.len() {
            return Err(Error::InvalidRecording("sample count is not a multiple of the channel count".into()));
        }
        let rec = Recording {
            subject_id: subject_id.into(),
            label,
            fs,
            channels,
            data,
            n_samples,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidRecording("no channels".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidRecording("no samples".into()));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidRecording(format!("sampling rate {} is not positive", self.fs)));
        }
        if self.channels.len() > u16::MAX as usize {
            return Err(Error::InvalidRecording("too many channels".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.channels {
            if !seen.insert(c.as_str()) {
                return Err(Error::InvalidRecording(format!("duplicate channel {c}")));
            }
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecording(format!(
                "non-finite sample in channel {} at index {}",
                self.channels[i / self.n_samples],
                i % self.n_samples
            )));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn channel(&self, i: usize) -> &[f32] {
        &self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.eq_ignore_ascii_case(name))
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.n_samples)
    }

    /// Channel rows widened to f64 for processing.
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples as f64 / self.fs
    }
}

pub fn write_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    rec.validate()?;
    let bytes = encode_recording(rec)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_recording(&bytes)
}

pub fn encode_recording(rec: &Recording) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64 + rec.data.len() * 4);
    out.extend_from_slice(&EEGB_MAGIC);
    out.extend_from_slice(&EEGB_VERSION.to_le_bytes());
    out.extend_from_slice(&rec.fs.to_le_bytes());
    out.extend_from_slice(&(rec.channels.len() as u16).to_le_bytes());
    out.extend_from_slice(&(rec.n_samples as u64).to_le_bytes());
    out.push(rec.label as u8);
    put_str(&mut out, &rec.subject_id)?;
    for c in &rec.channels {
        put_str(&mut out, c)?;
    }
    for v in &rec.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_recording(bytes: &[u8]) -> Result<Recording> {
    let mut r = ByteReader::new(bytes);
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != EEGB_MAGIC {
        return Err(Error::BadMagic { expected: EEGB_MAGIC, found: magic });
    }
    let version = r.u16("version")?;
    if version != EEGB_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let fs = r.f64("fs")?;
    let n_channels = r.u16("n_channels")? as usize;
    let n_samples = r.u64("n_samples")? as usize;
    let label = Label::from_index(r.u8("label")? as usize)?;
    let subject_id = r.string("subject id")?;
    let channels = (0..n_channels)
        .map(|i| r.string(&format!("channel name {i}")))
        .collect::<Result<Vec<_>>>()?;
    let row_bytes = n_samples
        .checked_mul(4)
        .ok_or_else(|| Error::InvalidRecording("sample count overflow".into()))?;
    let remaining = r.remaining();
    let expected = row_bytes * n_channels;
    if remaining < expected {
        return Err(Error::Truncated(format!("expected {expected} payload bytes, found {remaining}")));
    }
    if remaining > expected {
        let found = if row_bytes > 0 { remaining / row_bytes } else { 0 };
        return Err(Error::ChannelCountMismatch { header: n_channels, found });
    }
    let data = r
        .take(expected, "payload")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let rec = Recording { subject_id, label, fs, channels, data, n_samples };
    rec.validate()?;
    Ok(rec)
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::InvalidRecording(format!("string too long: {s:.32}...")))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

/// Little-endian cursor that reports truncation with context.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated(format!("while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::InvalidRecording(format!("{what} is not UTF-8")))
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: Label,
    pub path: PathBuf,
}

/// Dataset index, one entry per subject, stored as JSON lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Manifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.subject_id.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate subject id {}", e.subject_id)));
            }
        }
        Ok(())
    }

    /// Writes the manifest. Paths are stored as given.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            serde_json::to_writer(&mut f, e)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    /// Reads a manifest; relative recording paths are resolved against the
    /// manifest's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut entries = Vec::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut e: ManifestEntry = serde_json::from_str(&line)?;
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
            entries.push(e);
        }
        Manifest::new(entries)
    }

    pub fn load_recordings(&self) -> Result<Vec<Recording>> {
        self.entries
            .iter()
            .map(|e| {
                let rec = read_recording(&e.path)?;
                if rec.subject_id != e.subject_id || rec.label != e.label {
                    return Err(Error::InvalidRecording(format!(
                        "{} does not match manifest entry {} ({:?})",
                        e.path.display(),
                        e.subject_id,
                        e.label
                    )));
                }
                Ok(rec)
            })
            .collect()
    }
}

/// Per-band signal power in µV².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub delta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BandPowers {
    pub fn get(&self, band: Band) -> f64 {
        match band {
            Band::Delta => self.delta,
            Band::Theta => self.theta,
            Band::Alpha => self.alpha,
            Band::Beta => self.beta,
            Band::Gamma => self.gamma,
            Band::Full => self.delta + self.theta + self.alpha + self.beta + self.gamma,
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.delta, self.theta, self.alpha, self.beta, self.gamma]
    }
}

/// Frequencies (Hz) from which each band's oscillators are drawn. Kept away
/// from band edges so that each oscillator lands cleanly in one rhythm.
pub const SYNTH_BAND_HZ: [(f64, f64); 5] = [(1.0, 3.5), (4.5, 7.5), (8.5, 12.0), (17.0, 28.0), (34.0, 42.0)];

const OSCILLATORS_PER_BAND: usize = 3;
const MODULATION_DEPTH: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_subjects_per_class: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub hc_powers: BandPowers,
    pub ad_powers: BandPowers,
    pub noise_sigma: f64,
    /// Log-normal spread of per-subject band powers.
    pub subject_jitter: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// HC: dominant α. AD: slowed rhythm (δ/θ up, α/γ down).
    fn default() -> Self {
        SynthSpec {
            n_subjects_per_class: 4,
            duration_s: 10.0,
            fs: 256.0,
            hc_powers: BandPowers { delta: 20.0, theta: 20.0, alpha: 100.0, beta: 30.0, gamma: 20.0 },
            ad_powers: BandPowers { delta: 100.0, theta: 80.0, alpha: 20.0, beta: 20.0, gamma: 5.0 },
            noise_sigma: 2.0,
            subject_jitter: 0.1,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn powers(&self, label: Label) -> &BandPowers {
        match label {
            Label::Hc => &self.hc_powers,
            Label::Ad => &self.ad_powers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects_per_class == 0 {
            return Err(Error::InvalidSpec("need at least one subject per class".into()));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidSpec(format!("fs {} must be positive", self.fs)));
        }
        // Oscillators up to 42 Hz must be representable.
        if self.fs <= 2.0 * SYNTH_BAND_HZ[4].1 {
            return Err(Error::InvalidSpec(format!("fs {} too low for the γ oscillators", self.fs)));
        }
        if !(self.duration_s.is_finite() && self.duration_s * crate::TARGET_FS >= 2.0 * crate::SEGMENT_LEN as f64) {
            return Err(Error::InvalidSpec(format!(
                "duration {} s yields fewer than two {}-sample windows at {} Hz",
                self.duration_s,
                crate::SEGMENT_LEN,
                crate::TARGET_FS
            )));
        }
        for p in [&self.hc_powers, &self.ad_powers] {
            if p.as_array().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidSpec("band powers must be finite and non-negative".into()));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise_sigma must be non-negative".into()));
        }
        if !(self.subject_jitter.is_finite() && self.subject_jitter >= 0.0) {
            return Err(Error::InvalidSpec("subject_jitter must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn subject_id(label: Label, index: usize) -> String {
    match label {
        Label::Hc => format!("hc{index:03}"),
        Label::Ad => format!("ad{index:03}"),
    }
}

/// Generates one recording on the 19-channel montage.
pub fn synthesize_recording(spec: &SynthSpec, label: Label, index: usize) -> Result<Recording> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Purpose::Synth, &[label as u64, index as u64]);
    let n = (spec.duration_s * spec.fs).round() as usize;
    let names = montage::STANDARD_1020.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let n_ch = names.len();
    let base = spec.powers(label).as_array();

    // Band powers are per subject; oscillator frequencies, modulation and
    // phases are drawn per channel, so one subject covers each band densely.
    let mut amps = [0.0; 5];
    for (b, &power) in base.iter().enumerate() {
        let jitter: f64 = rng.sample(StandardNormal);
        let p = power * (spec.subject_jitter * jitter).exp();
        // E[(1 + d sin)^2 sin^2] = (1 + d^2 / 2) / 2 per unit amplitude.
        amps[b] = (2.0 * p / (OSCILLATORS_PER_BAND as f64 * (1.0 + MODULATION_DEPTH * MODULATION_DEPTH / 2.0))).sqrt();
    }
    struct Osc {
        freq: f64,
        amp: f64,
        mod_freq: f64,
        mod_phase: f64,
        phase: f64,
    }
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut data = vec![0f32; n_ch * n];
    for c in 0..n_ch {
        let mut oscillators = Vec::with_capacity(5 * OSCILLATORS_PER_BAND);
        for (b, &amp) in amps.iter().enumerate() {
            let (lo, hi) = SYNTH_BAND_HZ[b];
            for _ in 0..OSCILLATORS_PER_BAND {
                oscillators.push(Osc {
                    freq: rng.random_range(lo..hi),
                    amp,
                    mod_freq: rng.random_range(0.05..0.25),
                    mod_phase: rng.random_range(0.0..2.0 * PI),
                    phase: rng.random_range(0.0..2.0 * PI),
                });
            }
        }
        let row = &mut data[c * n..(c + 1) * n];
        for (i, out) in row.iter_mut().enumerate() {
            let t = i as f64 / spec.fs;
            let mut v = 0.0;
            for o in &oscillators {
                let envelope = 1.0 + MODULATION_DEPTH * (2.0 * PI * o.mod_freq * t + o.mod_phase).sin();
                v += o.amp * envelope * (2.0 * PI * o.freq * t + o.phase).sin();
            }
            if spec.noise_sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            *out = v as f32;
        }
    }
    Recording::from_flat(subject_id(label, index), label, spec.fs, names, data)
}

/// Generates the full dataset in memory: HC subjects first, then AD.
pub fn synthesize_dataset(spec: &SynthSpec) -> Result<Vec<Recording>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(2 * spec.n_subjects_per_class);
    for label in [Label::Hc, Label::Ad] {
        for i in 0..spec.n_subjects_per_class {
            out.push(synthesize_recording(spec, label, i)?);
        }
    }
    Ok(out)
}

/// Generates the dataset and writes it to `dir` as EEGB files plus
/// `manifest.jsonl` (paths relative to `dir`).
pub fn synthesize_to_dir(spec: &SynthSpec, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for rec in synthesize_dataset(spec)? {
        let file = PathBuf::from(format!("{}.eegb", rec.subject_id));
        write_recording(&rec, dir.join(&file))?;
        entries.push(ManifestEntry { subject_id: rec.subject_id.clone(), label: rec.label, path: file });
    }
    let manifest = Manifest::new(entries)?;
    manifest.write(dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
