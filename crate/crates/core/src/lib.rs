//! EEG preprocessing, rhythm decomposition and a compact depthwise-separable
//! tokenizer + dilated residual encoder classifier, trained from scratch
//! with a small reverse-mode gradient engine and evaluated with
//! subject-independent cross-validation.
//!
//! Pipeline:
//!
//! ```text
//! Recording ─ montage::harmonize ─ dsp::bandpass ─ dsp::resample (128 Hz)
//!           ─ wavelet::extract_bands ─ dsp::segment (L = 128, 50 %) ─ dsp::zscore
//!           ─ model::Model (tokenizer → encoder → classifier)
//! ```

pub mod band;
pub mod cli;
pub mod dsp;
pub mod eegio;
pub mod grad;
pub mod model;
pub mod error;
pub mod eval;
pub mod montage;
pub mod pipeline;
pub mod rng;
pub mod wavelet;

#[cfg(test)]
pub(crate) mod testutil;

pub use band::Band;
pub use eegio::{Label, Manifest, Recording, SynthSpec};
pub use error::{Error, Result};

/// Common sampling rate after resampling (Hz).
pub const TARGET_FS: f64 = 128.0;
/// Window length in samples (one second at [`TARGET_FS`]).
pub const SEGMENT_LEN: usize = 128;
/// Number of channels after harmonization.
pub const N_CHANNELS: usize = 19;
