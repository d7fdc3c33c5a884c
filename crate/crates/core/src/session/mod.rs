//! Session data model, on-disk container and validation.

mod container;
mod error;
mod model;
mod validate;

pub use container::{
    format_f64, load_session, read_manifest, read_wav, save_session, write_manifest, write_wav, DIALOGUE_FILE,
    MANIFEST_FILE,
};
pub use error::SessionError;
pub use model::{
    AudioEncoding, AudioMeta, AudioTrack, ChannelDescriptor, FailureFlag, FrameTimestampLog, RawSession,
    SessionManifest, StreamDescriptor, StreamKind, TimedSeries,
};
pub use validate::{validate_manifest, validate_session, Severity, Violation};
