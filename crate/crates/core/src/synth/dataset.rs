use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::Profile;
use super::rng::SplitMix64;
use super::scenario::{gen_session, GroundTruth, Scenario};
use super::SynthError;
use crate::session::{save_session, FailureFlag};
use crate::task::Task;

/// Raw and successful trial counts of the reference study, per task.
pub const TABLE_III_COUNTS: [(Task, usize, usize); 5] = [
    (Task::Cleaning, 9, 4),
    (Task::DoorOpening, 16, 15),
    (Task::DrawerOpening, 17, 16),
    (Task::Drinking, 11, 9),
    (Task::Feeding, 13, 9),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub seed: u64,
    /// `(task, raw, successful)`
    pub counts: Vec<(Task, usize, usize)>,
    /// Settings shared by every trial; profiles, duration and ids are drawn per trial.
    pub base: Scenario,
    /// Label trials on disk; unlabeled otherwise.
    pub label: bool,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: TABLE_III_COUNTS.to_vec(),
            base: Scenario {
                audio: false,
                ..Scenario::default()
            },
            label: true,
        }
    }
}

pub fn trial_id(task: &Task, i: usize) -> String {
    format!("{}-{:02}", task.as_str().to_lowercase(), i + 1)
}

const FAILURES: [FailureFlag; 4] = [
    FailureFlag::ObjectDrop,
    FailureFlag::ItemFell,
    FailureFlag::EnvironmentCollision,
    FailureFlag::InappropriateForce,
];

/// The scenario for trial `i` of `task`.
pub fn trial_scenario(spec: &DatasetSpec, task: &Task, i: usize) -> Scenario {
    let id = trial_id(task, i);
    let mut rng = SplitMix64::fork(spec.seed, &id);
    let duration = rng.uniform(7.0, 11.0);
    let t_move = rng.uniform(3.0, 5.0);
    let t_start = rng.uniform(1.0, duration - t_move - 1.0);
    let p0 = vec![rng.uniform(0.3, 0.5), rng.uniform(-0.2, 0.0), rng.uniform(0.8, 1.0)];
    let pf: Vec<f64> = p0.iter().map(|p| p + rng.uniform(-0.25, 0.25)).collect();
    let wc_move = rng.uniform(3.0, duration - 2.0);
    let wc_start = rng.uniform(0.5, duration - wc_move - 0.5);
    let reach = rng.uniform(0.0, 0.8);
    let angle = rng.uniform(-0.5, 0.5);
    Scenario {
        seed: rng.next_u64(),
        session_id: id,
        participant_id: format!("P{:02}", 1 + rng.below(8)),
        task: task.clone(),
        duration,
        ee_profile: Profile::min_jerk(p0, pf, t_start, t_move),
        wheelchair_profile: Profile::min_jerk(
            vec![0.0, 0.0],
            vec![reach * angle.cos(), reach * angle.sin()],
            wc_start,
            wc_move,
        ),
        ..spec.base.clone()
    }
}

/// Writes one session directory per trial under `root` and returns the ground truth of each.
pub fn gen_dataset(spec: &DatasetSpec, root: &Path) -> Result<Vec<GroundTruth>, SynthError> {
    let mut truths = Vec::new();
    for (task, raw, successful) in &spec.counts {
        if successful > raw {
            return Err(SynthError::InvalidScenario(format!("{task}: {successful} successful of {raw}")));
        }
        for i in 0..*raw {
            let sc = trial_scenario(spec, task, i);
            let mut out = gen_session(&sc)?;
            if spec.label {
                let m = &mut out.session.manifest;
                if i < *successful {
                    m.success = Some(true);
                } else {
                    m.success = Some(false);
                    m.flags = vec![FAILURES[(i - successful) % FAILURES.len()].clone()];
                }
            }
            save_session(&out.session, root.join(&sc.session_id))?;
            truths.push(out.truth);
        }
    }
    Ok(truths)
}
