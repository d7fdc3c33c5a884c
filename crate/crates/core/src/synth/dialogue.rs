use super::rng::SplitMix64;
use crate::dialogue::{AmbiguityLabel, AmbiguityType, AnnotatedDialogue, Speaker};
use crate::task::Task;

type Line = (&'static str, Option<AmbiguityType>);

use AmbiguityType::*;

fn user_lines(task: &Task) -> &'static [Line] {
    match task {
        Task::Feeding => &[
            ("I'm hungry", Some(IntentPragmatic)),
            ("can you give me some of, uh, that one", Some(Referential)),
            ("scoop the rice and bring it to my mouth", None),
            ("a bit closer", Some(Spatial)),
            ("wait, wait not yet", Some(TemporalIncremental)),
            ("pick up the spoon on the left of the plate", None),
        ],
        Task::Drinking => &[
            ("I'm thirsty", Some(IntentPragmatic)),
            ("grab the cup please", None),
            ("bring it up. more. okay stop", Some(TemporalIncremental)),
            ("tilt it toward me slowly", None),
            ("the other one", Some(Referential)),
            ("can you make me a coffee", Some(OutOfScope)),
        ],
        Task::DoorOpening => &[
            ("open the door", None),
            ("push it a little", Some(Spatial)),
            ("turn the handle down and pull", None),
            ("I want to go outside", Some(IntentPragmatic)),
            ("keep going... keep going", Some(TemporalIncremental)),
        ],
        Task::DrawerOpening => &[
            ("open the top drawer", None),
            ("pull the second drawer out all the way", None),
            ("grab the handle of the drawer in front of you", None),
            ("that one", Some(Referential)),
            ("open it halfway", None),
        ],
        Task::Cleaning => &[
            ("wipe the table", None),
            ("clean over there", Some(Spatial)),
            ("place it far away from me", Some(Spatial)),
            ("this spot is still dirty", Some(Referential)),
            ("can you vacuum the floor", Some(OutOfScope)),
            ("move the sponge to the right edge", None),
        ],
        Task::Other(_) => &[("do that", Some(Referential)), ("stop", None)],
    }
}

const ROBOT_LINES: [&str; 4] = [
    "Okay.",
    "Do you mean the one closest to you?",
    "Moving now.",
    "Like this?",
];

/// A short labeled conversation picked from per-task templates.
pub fn template_dialogue(trial_id: &str, task: &Task, duration: f64, seed: u64) -> AnnotatedDialogue {
    let mut rng = SplitMix64::fork(seed, "dialogue");
    let lines = user_lines(task);
    let exchanges = 2 + rng.below(3) as usize;
    let mut d = AnnotatedDialogue::new(trial_id, task.clone());
    let slot = duration / (2 * exchanges) as f64;
    for i in 0..exchanges {
        let (text, kind) = lines[rng.below(lines.len() as u64) as usize];
        let t = (2 * i) as f64 * slot;
        let turn = d.push_turn(Speaker::User, text, t, t + 0.8 * slot);
        d.labels.insert(
            turn,
            match kind {
                Some(k) => AmbiguityLabel::ambiguous(k),
                None => AmbiguityLabel::specific(),
            },
        );
        let reply = ROBOT_LINES[rng.below(ROBOT_LINES.len() as u64) as usize];
        d.push_turn(Speaker::Robot, reply, t + slot, t + 1.8 * slot);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_are_valid() {
        for task in Task::ALL {
            for seed in 0..20 {
                let d = template_dialogue("t", &task, 8.0, seed);
                d.validate().unwrap();
                assert_eq!(d.labels.len() * 2, d.turns.len());
            }
        }
    }
}
