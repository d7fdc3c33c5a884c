//! Multimodal session recording and analysis.
//!
//! The crate covers the data path of a teleoperated wheelchair-mounted arm
//! study without the hardware: a live TCP/UDP recorder, an on-disk session
//! container, multi-rate stream synchronization onto a reference grid,
//! zero-phase Butterworth denoising, motion-quality metrics, trial curation
//! statistics and dialogue ambiguity annotation. A seeded synthetic session
//! generator provides ground truth for every stage.

pub mod curation;
pub mod dialogue;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod session;
pub mod sync;
pub mod synth;
pub mod task;
pub mod transport;

pub use error::ErrorCode;
pub use task::Task;
