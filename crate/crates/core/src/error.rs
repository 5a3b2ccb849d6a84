use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("channel-count mismatch: header says {header}, found {found}")]
    ChannelCountMismatch { header: usize, found: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid montage: {0}")]
    InvalidMontage(String),

    #[error("unknown channel position: {0}")]
    UnknownChannel(String),

    #[error("too few known channels: need at least {needed}, have {have}")]
    TooFewChannels { needed: usize, have: usize },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("signal too short: {0}")]
    SignalTooShort(String),

    #[error("signal shorter than L (len {len}, L {window})")]
    ShorterThanWindow { len: usize, window: usize },

    #[error("resample ratio {fs_in} -> {fs_out} is not a small rational (p, q <= 1000)")]
    IrrationalRatio { fs_in: f64, fs_out: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("length not divisible by 2^{levels} (len {len})")]
    NotDivisible { len: usize, levels: usize },

    #[error("wrong sampling rate: band extraction expects {expected} Hz, got {got} Hz")]
    WrongSamplingRate { expected: f64, got: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid label: {0}")]
    InvalidLabel(usize),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("too few subjects: {0}")]
    TooFewSubjects(String),

    #[error("data leakage: subject {0} appears in both train and test")]
    Leakage(String),

    #[error("empty report: {0}")]
    EmptyReport(String),

    #[error("fold {fold} of repeat {repeat} failed: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
