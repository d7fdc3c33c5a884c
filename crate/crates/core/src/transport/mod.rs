//! Live recording over TCP (numeric and frame-timestamp topics) and UDP (audio).

mod audio;
mod frame;
mod recorder;

use std::net::SocketAddr;

use thiserror::Error;

use crate::error::ErrorCode;
use crate::session::SessionError;

pub use audio::{audio_reassemble, AudioDatagram, GapReport, SeqRange, DATAGRAM_HEADER};
pub use frame::{frame_decode, skip_len, TcpFrame, MAX_FRAME_LEN, MIN_FRAME_LEN};
pub use recorder::{
    default_dataset_root, start_recording, RecorderConfig, RecordingHandle, RecordingSummary,
    DEFAULT_HIGH_WATER_MARK, ROOT_ENV,
};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("need {0} more bytes")]
    NeedMoreBytes(usize),

    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("malformed audio datagram: {0}")]
    MalformedDatagram(String),

    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error("recording failed: {0}")]
    Recording(String),

    #[error(transparent)]
    Session(#[from] SessionError),
}

impl ErrorCode for TransportError {
    fn module(&self) -> &'static str {
        "transport_gateway"
    }

    fn code(&self) -> &'static str {
        match self {
            TransportError::NeedMoreBytes(_) => "need_more_bytes",
            TransportError::MalformedFrame(_) => "malformed_frame",
            TransportError::MalformedDatagram(_) => "malformed_datagram",
            TransportError::Bind { .. } => "bind_error",
            TransportError::Recording(_) => "recording_failed",
            TransportError::Session(SessionError::Io { source, .. })
                if source.kind() == std::io::ErrorKind::StorageFull =>
            {
                "disk_full"
            }
            TransportError::Session(e) => e.code(),
        }
    }
}
