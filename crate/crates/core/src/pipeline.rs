//! Recording → normalized segments, and the on-disk segment archive.
//!
//! Archive layout: a directory holding `index.json` plus one tensor file per
//! subject:
//!
//! ```text
//! "EGSG" | u16 version | u16 len + subject id | u8 label | u16 len + band
//! u32 n_segments | u16 n_channels | u32 seg_len | f32 values [N×C×L]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::dsp::{self, FilterSpec, Resampler};
use crate::eegio::{put_str, ByteReader, Label, Recording};
use crate::error::{Error, Result};
use crate::montage::{self, MontageSpec};
use crate::wavelet::{self, BAND_LEVELS};
use crate::{SEGMENT_LEN, TARGET_FS};

pub const ARCHIVE_MAGIC: [u8; 4] = *b"EGSG";
pub const ARCHIVE_VERSION: u16 = 1;
pub const ARCHIVE_INDEX: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub filter: FilterSpec,
    pub seg_len: usize,
    pub overlap: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { filter: FilterSpec::default(), seg_len: SEGMENT_LEN, overlap: 0.5 }
    }
}

/// One normalized `[C × L]` window.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub data: Vec<f32>,
    pub n_channels: usize,
    pub subject_id: String,
    pub label: Label,
    pub band: Band,
    pub index: usize,
}

impl Segment {
    pub fn seg_len(&self) -> usize {
        self.data.len() / self.n_channels.max(1)
    }

    pub fn row(&self, c: usize) -> &[f32] {
        let l = self.seg_len();
        &self.data[c * l..(c + 1) * l]
    }
}

/// All segments of one subject in one band, stored as `[N × C × L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSegments {
    pub subject_id: String,
    pub label: Label,
    pub band: Band,
    pub n_channels: usize,
    pub seg_len: usize,
    pub data: Vec<f32>,
}

impl SubjectSegments {
    pub fn len(&self) -> usize {
        self.data.len() / (self.n_channels * self.seg_len).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn segment(&self, k: usize) -> Option<Segment> {
        let n = self.n_channels * self.seg_len;
        (k < self.len()).then(|| Segment {
            data: self.data[k * n..(k + 1) * n].to_vec(),
            n_channels: self.n_channels,
            subject_id: self.subject_id.clone(),
            label: self.label,
            band: self.band,
            index: k,
        })
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.len()).filter_map(|k| self.segment(k))
    }
}

/// Harmonize → band-pass → resample to 128 Hz → rhythm extraction (skipped
/// for `Full`) → windowing → per-window z-score.
pub fn preprocess_recording(
    rec: &Recording,
    band: Band,
    config: &PreprocessConfig,
    target: &MontageSpec,
) -> Result<SubjectSegments> {
    let window = config.seg_len;
    let resampled_len = (rec.n_samples() as f64 * TARGET_FS / rec.fs).round() as usize;
    if resampled_len < window {
        return Err(Error::ShorterThanWindow { len: resampled_len, window });
    }
    let rec = montage::harmonize(rec, target)?;
    let sos = dsp::butter_bandpass(&config.filter, rec.fs)?;
    let resampler = Resampler::new(rec.fs, TARGET_FS)?;
    let mut rows = Vec::with_capacity(rec.n_channels());
    for ch in rec.rows() {
        let x: Vec<f64> = ch.iter().map(|&v| v as f64).collect();
        let filtered = dsp::filter::apply(&sos, &x, &config.filter)?;
        rows.push(resampler.process(&filtered)?);
    }
    let rows = if band == Band::Full {
        rows
    } else {
        let keep = rows[0].len() / (1 << BAND_LEVELS) * (1 << BAND_LEVELS);
        let mut out = Vec::with_capacity(rows.len());
        for r in &rows {
            let rhythms = wavelet::extract_bands(&r[..keep], TARGET_FS)?;
            out.push(rhythms.get(band).expect("rhythm band").to_vec());
        }
        out
    };
    let len = rows[0].len();
    let step = dsp::segment::step_for_overlap(window, config.overlap)?;
    let starts = dsp::segment_starts(len, window, step)?;
    let c = rows.len();
    let mut data = Vec::with_capacity(starts.len() * c * window);
    let mut buf = vec![0.0; c * window];
    for &s in &starts {
        for (ci, r) in rows.iter().enumerate() {
            buf[ci * window..(ci + 1) * window].copy_from_slice(&r[s..s + window]);
        }
        dsp::zscore_rows(&mut buf, window)?;
        data.extend(buf.iter().map(|&v| v as f32));
    }
    Ok(SubjectSegments { subject_id: rec.subject_id.clone(), label: rec.label, band, n_channels: c, seg_len: window, data })
}

/// A recording left out of a preprocessed dataset.
#[derive(Debug)]
pub struct Skipped {
    pub subject_id: String,
    pub reason: Error,
}

/// Preprocesses every recording on the standard montage. Recordings too
/// short to yield one window are skipped and reported; other errors abort.
pub fn preprocess_dataset(
    recordings: &[Recording],
    band: Band,
    config: &PreprocessConfig,
) -> Result<(Vec<SubjectSegments>, Vec<Skipped>)> {
    let target = MontageSpec::standard_1020();
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for rec in recordings {
        match preprocess_recording(rec, band, config, &target) {
            Ok(s) => kept.push(s),
            Err(e @ (Error::ShorterThanWindow { .. } | Error::SignalTooShort(_))) => {
                skipped.push(Skipped { subject_id: rec.subject_id.clone(), reason: e })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((kept, skipped))
}

/// Concatenates groups into a flat `[N×C×L]` buffer with class indices.
pub fn stack<'a>(groups: impl IntoIterator<Item = &'a SubjectSegments>) -> (Vec<f32>, Vec<usize>) {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for g in groups {
        data.extend_from_slice(&g.data);
        labels.extend(std::iter::repeat_n(g.label.index(), g.len()));
    }
    (data, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub subject_id: String,
    pub label: Label,
    pub n_segments: usize,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveIndex {
    pub version: u16,
    pub band: Band,
    pub fs: f64,
    pub n_channels: usize,
    pub seg_len: usize,
    pub subjects: Vec<ArchiveEntry>,
}

pub fn encode_segments(s: &SubjectSegments) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(32 + 4 * s.data.len());
    out.extend_from_slice(&ARCHIVE_MAGIC);
    out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    put_str(&mut out, &s.subject_id)?;
    out.push(s.label as u8);
    put_str(&mut out, s.band.name())?;
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(&(s.n_channels as u16).to_le_bytes());
    out.extend_from_slice(&(s.seg_len as u32).to_le_bytes());
    for v in &s.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_segments(bytes: &[u8]) -> Result<SubjectSegments> {
    let mut r = ByteReader::new(bytes);
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != ARCHIVE_MAGIC {
        return Err(Error::BadMagic { expected: ARCHIVE_MAGIC, found: magic });
    }
    let version = r.u16("version")?;
    if version != ARCHIVE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let subject_id = r.string("subject id")?;
    let label = Label::from_index(r.u8("label")? as usize)?;
    let band: Band = r.string("band")?.parse().map_err(Error::InvalidSpec)?;
    let n = r.u32("segment count")? as usize;
    let n_channels = r.u16("channel count")? as usize;
    let seg_len = r.u32("segment length")? as usize;
    let raw = r.take(4 * n * n_channels * seg_len, "segment data")?;
    if r.remaining() != 0 {
        return Err(Error::Truncated(format!("{} trailing bytes", r.remaining())));
    }
    let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(SubjectSegments { subject_id, label, band, n_channels, seg_len, data })
}

/// Writes one tensor file per subject plus `index.json`. All groups must
/// share band and shape.
pub fn write_archive(dir: impl AsRef<Path>, groups: &[SubjectSegments]) -> Result<ArchiveIndex> {
    let dir = dir.as_ref();
    let first = groups.first().ok_or_else(|| Error::Empty("no subjects to archive".into()))?;
    fs::create_dir_all(dir)?;
    let mut subjects = Vec::with_capacity(groups.len());
    for g in groups {
        if g.band != first.band || g.n_channels != first.n_channels || g.seg_len != first.seg_len {
            return Err(Error::Shape(format!("{} differs in band or shape from {}", g.subject_id, first.subject_id)));
        }
        let file = PathBuf::from(format!("{}.{}.seg", g.subject_id, g.band));
        fs::write(dir.join(&file), encode_segments(g)?)?;
        subjects.push(ArchiveEntry { subject_id: g.subject_id.clone(), label: g.label, n_segments: g.len(), file });
    }
    let index = ArchiveIndex {
        version: ARCHIVE_VERSION,
        band: first.band,
        fs: TARGET_FS,
        n_channels: first.n_channels,
        seg_len: first.seg_len,
        subjects,
    };
    fs::write(dir.join(ARCHIVE_INDEX), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

pub fn read_archive(dir: impl AsRef<Path>) -> Result<(ArchiveIndex, Vec<SubjectSegments>)> {
    let dir = dir.as_ref();
    let index: ArchiveIndex = serde_json::from_str(&fs::read_to_string(dir.join(ARCHIVE_INDEX))?)?;
    if index.version != ARCHIVE_VERSION {
        return Err(Error::UnsupportedVersion(index.version));
    }
    let mut groups = Vec::with_capacity(index.subjects.len());
    for e in &index.subjects {
        let g = decode_segments(&fs::read(dir.join(&e.file))?)?;
        if g.subject_id != e.subject_id || g.label != e.label || g.len() != e.n_segments || g.band != index.band {
            return Err(Error::InvalidRecording(format!("{} does not match the archive index", e.file.display())));
        }
        groups.push(g);
    }
    Ok((index, groups))
}
