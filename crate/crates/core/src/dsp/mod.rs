//! Butterworth low-pass design and zero-phase filtering.

mod butterworth;
mod denoise;
mod filtfilt;

use thiserror::Error;

use crate::error::ErrorCode;

pub use butterworth::{design_butterworth_lowpass, FilterSpec};
pub use denoise::{
    classify_channel, denoise_session, prefilter_native, ChannelClass, ClassFilter, DenoisePolicy, CLAMP_FRACTION,
};
pub use filtfilt::{filtfilt, lfilter, lfilter_zi, pad_len};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("cutoff {cutoff} Hz must lie in (0, {}) for sample rate {sample_rate} Hz", sample_rate / 2.0)]
    InvalidCutoff { cutoff: f64, sample_rate: f64 },

    #[error("filter order must be >= 1, got {0}")]
    InvalidOrder(usize),

    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("signal of {len} samples is too short, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("channel '{stream}/{channel}' matches no filter class")]
    UnclassifiedChannel { stream: String, channel: String },

    #[error("denoise policy: {0}")]
    Policy(String),
}

impl ErrorCode for DspError {
    fn module(&self) -> &'static str {
        "dsp_filters"
    }

    fn code(&self) -> &'static str {
        match self {
            DspError::InvalidCutoff { .. } => "invalid_cutoff",
            DspError::InvalidOrder(_) => "invalid_order",
            DspError::InvalidSpec(_) => "invalid_spec",
            DspError::SignalTooShort { .. } => "signal_too_short",
            DspError::UnclassifiedChannel { .. } => "unclassified_channel",
            DspError::Policy(_) => "invalid_policy",
        }
    }
}
