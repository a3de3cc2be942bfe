use std::path::PathBuf;

/// Errors produced anywhere in the sounding pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("feedback polynomial {taps:#x} of degree {degree} is not primitive (period {period}, expected {expected})")]
    NonPrimitive {
        degree: u32,
        taps: u32,
        period: u64,
        expected: u64,
    },

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("signal too short: need at least {needed} samples, got {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("tap {index} delay {delay_s:e} s is not an integer multiple of the sample period {period_s:e} s")]
    FractionalDelay {
        index: usize,
        delay_s: f64,
        period_s: f64,
    },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("no signal detected")]
    NoSignal,

    #[error("tone offset {offset_hz} Hz is not centered on an FFT bin (bin width {bin_hz} Hz)")]
    OffGridTone { offset_hz: f64, bin_hz: f64 },

    #[error("tone offset {offset_hz} Hz outside the Nyquist band of +/-{half_rate_hz} Hz")]
    Aliasing { offset_hz: f64, half_rate_hz: f64 },

    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),

    #[error("{requested} transmitters do not fit: capacity is {capacity} per frame{}", frames_note(*.max_frames))]
    PlanCapacity {
        requested: usize,
        capacity: usize,
        max_frames: Option<usize>,
    },

    #[error("scenario invalid at `{path}`: {reason}")]
    Scenario { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn frames_note(max_frames: Option<usize>) -> String {
    match max_frames {
        Some(n) => format!(" across at most {n} frame(s)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
