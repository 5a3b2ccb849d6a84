//! Band-pass filtering, resampling to the working rate, windowing and
//! per-window normalization.

pub mod filter;
pub mod resample;
pub mod segment;

pub use filter::{bandpass, butter_bandpass, FilterSpec, Sos};
pub use resample::{rational_ratio, resample, Resampler};
pub use segment::{segment, segment_starts, zscore, zscore_rows};
