//! Multi-turn dialogue records with ambiguity annotations.
//!
//! Records are exchanged as JSON Lines, one object per trial:
//!
//! | key          | type                                   | notes                                 |
//! |--------------|----------------------------------------|---------------------------------------|
//! | `trial_id`   | string                                 | equals the session id                 |
//! | `task`       | string                                 | task name                             |
//! | `turns`      | array of utterance objects             | `turn_index` = position, from 0       |
//! | `labels`     | object: turn index (string) → label    | user turns only                       |
//! | `frame_refs` | object: turn index → grid index, or null | indices into the synced grid        |
//!
//! Utterance: `speaker` ("User" | "Robot"), `text` (verbatim), `t_start`,
//! `t_end` (seconds, `t_start < t_end`), `trial_id`, `turn_index`.
//! Label: `clarity` ("Specific" | "Ambiguous") and `ambiguity_type`
//! (null for Specific, one of "Spatial", "Referential", "IntentPragmatic",
//! "TemporalIncremental", "OutOfScope" for Ambiguous).

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCode;
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    User,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    /// Transcript as spoken, disfluencies and grammar slips included.
    pub text: String,
    pub t_start: f64,
    pub t_end: f64,
    pub trial_id: String,
    pub turn_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Clarity {
    Specific,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AmbiguityType {
    Spatial,
    Referential,
    IntentPragmatic,
    TemporalIncremental,
    OutOfScope,
}

impl AmbiguityType {
    pub const ALL: [AmbiguityType; 5] = [
        AmbiguityType::Spatial,
        AmbiguityType::Referential,
        AmbiguityType::IntentPragmatic,
        AmbiguityType::TemporalIncremental,
        AmbiguityType::OutOfScope,
    ];
}

impl std::str::FromStr for AmbiguityType {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match key.as_str() {
            "spatial" => AmbiguityType::Spatial,
            "referential" => AmbiguityType::Referential,
            "intentpragmatic" | "intent" | "pragmatic" => AmbiguityType::IntentPragmatic,
            "temporalincremental" | "temporal" | "incremental" => AmbiguityType::TemporalIncremental,
            "outofscope" => AmbiguityType::OutOfScope,
            _ => {
                return Err(DialogueError::LabelSchemaViolation {
                    reason: format!("unknown ambiguity type '{s}'"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityLabel {
    pub clarity: Clarity,
    pub ambiguity_type: Option<AmbiguityType>,
}

impl AmbiguityLabel {
    pub fn specific() -> Self {
        Self {
            clarity: Clarity::Specific,
            ambiguity_type: None,
        }
    }

    pub fn ambiguous(kind: AmbiguityType) -> Self {
        Self {
            clarity: Clarity::Ambiguous,
            ambiguity_type: Some(kind),
        }
    }

    /// The type is present iff the clarity is `Ambiguous`.
    pub fn check(&self) -> Result<(), DialogueError> {
        match (self.clarity, self.ambiguity_type) {
            (Clarity::Specific, None) | (Clarity::Ambiguous, Some(_)) => Ok(()),
            (Clarity::Specific, Some(t)) => Err(DialogueError::LabelSchemaViolation {
                reason: format!("Specific label must not carry a type (got {t:?})"),
            }),
            (Clarity::Ambiguous, None) => Err(DialogueError::LabelSchemaViolation {
                reason: "Ambiguous label requires an ambiguity type".into(),
            }),
        }
    }

    /// Column of the distribution matrix this label falls into.
    pub fn class(&self) -> LabelClass {
        match self.ambiguity_type {
            None => LabelClass::Specific,
            Some(AmbiguityType::Spatial) => LabelClass::Spatial,
            Some(AmbiguityType::Referential) => LabelClass::Referential,
            Some(AmbiguityType::IntentPragmatic) => LabelClass::IntentPragmatic,
            Some(AmbiguityType::TemporalIncremental) => LabelClass::TemporalIncremental,
            Some(AmbiguityType::OutOfScope) => LabelClass::OutOfScope,
        }
    }
}

/// `Specific` plus each ambiguity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelClass {
    Specific,
    Spatial,
    Referential,
    IntentPragmatic,
    TemporalIncremental,
    OutOfScope,
}

impl LabelClass {
    pub const ALL: [LabelClass; 6] = [
        LabelClass::Specific,
        LabelClass::Spatial,
        LabelClass::Referential,
        LabelClass::IntentPragmatic,
        LabelClass::TemporalIncremental,
        LabelClass::OutOfScope,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelClass::Specific => "Specific",
            LabelClass::Spatial => "Spatial",
            LabelClass::Referential => "Referential",
            LabelClass::IntentPragmatic => "IntentPragmatic",
            LabelClass::TemporalIncremental => "TemporalIncremental",
            LabelClass::OutOfScope => "OutOfScope",
        }
    }
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("turn {turn} does not exist")]
    UnknownTurn { turn: u32 },

    #[error("turn {turn} is not a user turn")]
    NotUserTurn { turn: u32 },

    #[error("label schema violation: {reason}")]
    LabelSchemaViolation { reason: String },

    #[error("invalid dialogue '{trial_id}': {reason}")]
    InvalidDialogue { trial_id: String, reason: String },

    #[error("JSONL line {line}: {reason}")]
    Serialization { line: usize, reason: String },
}

impl ErrorCode for DialogueError {
    fn module(&self) -> &'static str {
        "dialogue_annotations"
    }

    fn code(&self) -> &'static str {
        match self {
            DialogueError::UnknownTurn { .. } => "unknown_turn",
            DialogueError::NotUserTurn { .. } => "not_user_turn",
            DialogueError::LabelSchemaViolation { .. } => "label_schema_violation",
            DialogueError::InvalidDialogue { .. } => "invalid_dialogue",
            DialogueError::Serialization { .. } => "serialization_error",
        }
    }
}

/// One trial's conversation and its annotations. Field order is the JSONL key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDialogue {
    pub trial_id: String,
    pub task: Task,
    pub turns: Vec<Utterance>,
    #[serde(default)]
    pub labels: BTreeMap<u32, AmbiguityLabel>,
    #[serde(default)]
    pub frame_refs: Option<BTreeMap<u32, usize>>,
}

impl AnnotatedDialogue {
    pub fn new(trial_id: impl Into<String>, task: Task) -> Self {
        Self {
            trial_id: trial_id.into(),
            task,
            turns: Vec::new(),
            labels: BTreeMap::new(),
            frame_refs: None,
        }
    }

    /// Appends a turn with the next index.
    pub fn push_turn(&mut self, speaker: Speaker, text: impl Into<String>, t_start: f64, t_end: f64) -> u32 {
        let turn_index = self.turns.len() as u32;
        self.turns.push(Utterance {
            speaker,
            text: text.into(),
            t_start,
            t_end,
            trial_id: self.trial_id.clone(),
            turn_index,
        });
        turn_index
    }

    fn invalid(&self, reason: impl Into<String>) -> DialogueError {
        DialogueError::InvalidDialogue {
            trial_id: self.trial_id.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        for (i, u) in self.turns.iter().enumerate() {
            if u.turn_index as usize != i {
                return Err(self.invalid(format!("turn_index {} at position {i}", u.turn_index)));
            }
            if u.trial_id != self.trial_id {
                return Err(self.invalid(format!("turn {i} belongs to trial '{}'", u.trial_id)));
            }
            if !(u.t_start.is_finite() && u.t_end.is_finite() && u.t_start < u.t_end) {
                return Err(self.invalid(format!("turn {i}: t_start < t_end does not hold")));
            }
        }
        for (&turn, label) in &self.labels {
            self.require_user_turn(turn)?;
            label.check()?;
        }
        if let Some(refs) = &self.frame_refs {
            if let Some(&bad) = refs.keys().find(|&&k| k as usize >= self.turns.len()) {
                return Err(self.invalid(format!("frame_refs names missing turn {bad}")));
            }
        }
        Ok(())
    }

    /// Checks that every frame reference points inside a grid of `grid_len` steps.
    pub fn check_frame_refs(&self, grid_len: usize) -> Result<(), DialogueError> {
        match self
            .frame_refs
            .iter()
            .flatten()
            .find(|(_, &g)| g >= grid_len)
        {
            Some((turn, g)) => Err(self.invalid(format!(
                "turn {turn} references grid index {g} but the grid has {grid_len} steps"
            ))),
            None => Ok(()),
        }
    }

    fn require_user_turn(&self, turn: u32) -> Result<&Utterance, DialogueError> {
        let u = self
            .turns
            .get(turn as usize)
            .ok_or(DialogueError::UnknownTurn { turn })?;
        if u.speaker == Speaker::User {
            Ok(u)
        } else {
            Err(DialogueError::NotUserTurn { turn })
        }
    }

    /// Returns a new version with `label` stored for `turn_index`, replacing any previous label.
    pub fn annotate_utterance(&self, turn_index: u32, label: AmbiguityLabel) -> Result<Self, DialogueError> {
        self.require_user_turn(turn_index)?;
        label.check()?;
        let mut next = self.clone();
        next.labels.insert(turn_index, label);
        Ok(next)
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Utterance> {
        self.turns.iter().filter(|u| u.speaker == Speaker::User)
    }
}

/// Serializes dialogues as JSON Lines, one record per dialogue.
pub fn export_jsonl(dialogues: &[AnnotatedDialogue]) -> Result<Vec<u8>, DialogueError> {
    let mut out = Vec::new();
    for (i, d) in dialogues.iter().enumerate() {
        d.validate()?;
        serde_json::to_writer(&mut out, d).map_err(|e| DialogueError::Serialization {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.write_all(b"\n").expect("writing to Vec cannot fail");
    }
    Ok(out)
}

/// Parses JSON Lines and validates every record. Blank lines are skipped.
pub fn import_jsonl(bytes: &[u8]) -> Result<Vec<AnnotatedDialogue>, DialogueError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DialogueError::Serialization {
        line: 0,
        reason: format!("not UTF-8: {e}"),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let d: AnnotatedDialogue = serde_json::from_str(line).map_err(|e| DialogueError::Serialization {
            line: i + 1,
            reason: e.to_string(),
        })?;
        d.validate()?;
        out.push(d);
    }
    Ok(out)
}

/// Label counts by task and class, plus utterance volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityDistribution {
    /// task → class → number of labeled user turns.
    pub matrix: BTreeMap<Task, BTreeMap<LabelClass, usize>>,
    /// task → utterances of both speakers.
    pub utterance_counts: BTreeMap<Task, usize>,
    /// ambiguity class → task → share of that class's labels falling in the task.
    pub type_task_shares: BTreeMap<LabelClass, BTreeMap<Task, f64>>,
}

impl AmbiguityDistribution {
    pub fn row_total(&self, task: &Task) -> usize {
        self.matrix.get(task).map_or(0, |r| r.values().sum())
    }

    /// Fraction of a task's labels that fall in `class`.
    pub fn row_share(&self, task: &Task, class: LabelClass) -> f64 {
        let total = self.row_total(task);
        if total == 0 {
            return 0.0;
        }
        self.matrix[task][&class] as f64 / total as f64
    }

    /// Task whose labels have the largest share of `class`; ties go to the first task in order.
    pub fn task_maximizing(&self, class: LabelClass) -> Option<&Task> {
        let mut best: Option<(&Task, f64)> = None;
        for task in self.matrix.keys().filter(|t| self.row_total(t) > 0) {
            let s = self.row_share(task, class);
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((task, s));
            }
        }
        best.map(|(t, _)| t)
    }
}

pub fn ambiguity_distribution(dialogues: &[AnnotatedDialogue]) -> AmbiguityDistribution {
    let zero_row = || LabelClass::ALL.iter().map(|&c| (c, 0usize)).collect::<BTreeMap<_, _>>();
    let mut matrix: BTreeMap<Task, BTreeMap<LabelClass, usize>> =
        Task::ALL.iter().map(|t| (t.clone(), zero_row())).collect();
    let mut utterance_counts: BTreeMap<Task, usize> = Task::ALL.iter().map(|t| (t.clone(), 0)).collect();

    for d in dialogues {
        *utterance_counts.entry(d.task.clone()).or_default() += d.turns.len();
        let row = matrix.entry(d.task.clone()).or_insert_with(zero_row);
        for label in d.labels.values() {
            *row.get_mut(&label.class()).expect("row has every class") += 1;
        }
    }

    let mut type_task_shares = BTreeMap::new();
    for class in LabelClass::ALL {
        let total: usize = matrix.values().map(|r| r[&class]).sum();
        let shares = matrix
            .iter()
            .map(|(t, r)| {
                let s = if total == 0 { 0.0 } else { r[&class] as f64 / total as f64 };
                (t.clone(), s)
            })
            .collect();
        type_task_shares.insert(class, shares);
    }

    AmbiguityDistribution {
        matrix,
        utterance_counts,
        type_task_shares,
    }
}
