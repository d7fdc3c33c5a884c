//! Seeded synthetic sessions with closed-form ground truth.
//!
//! Randomness comes from [`SplitMix64`] only, split into named sub-streams
//! (jitter, noise, audio, loss, dialogue) so changing one setting does not
//! perturb the others.

mod dataset;
mod dialogue;
mod profile;
mod rng;
mod scenario;

use thiserror::Error;

use crate::error::ErrorCode;
use crate::session::SessionError;

pub use dataset::{gen_dataset, trial_id, trial_scenario, DatasetSpec, TABLE_III_COUNTS};
pub use dialogue::template_dialogue;
pub use profile::{min_jerk_abs_integral, Profile, ProfileKind};
pub use rng::SplitMix64;
pub use scenario::{
    gen_min_jerk_trajectory, gen_session, GroundTruth, NoiseModel, Scenario, SynthSession, Trajectory, NOISE_TONES,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Session(#[from] SessionError),
}

impl ErrorCode for SynthError {
    fn module(&self) -> &'static str {
        "synth_generator"
    }

    fn code(&self) -> &'static str {
        match self {
            SynthError::InvalidScenario(_) => "invalid_scenario",
            SynthError::Session(e) => e.code(),
        }
    }
}
