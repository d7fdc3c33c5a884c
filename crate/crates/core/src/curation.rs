//! Trial success labels, dataset counts and survey summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::error::ErrorCode;
use crate::session::{read_manifest, write_manifest, FailureFlag, SessionError, SessionManifest, MANIFEST_FILE};
use crate::task::Task;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("no trial '{0}' in dataset")]
    UnknownTrial(String),

    #[error("trial '{0}' has not been labeled")]
    UnlabeledTrial(String),

    #[error("dataset has no trials")]
    Empty,

    #[error("question '{0}' has no ratings")]
    EmptyQuestion(String),

    #[error("rating {rating} for question '{question}' is outside 1..=5")]
    OutOfRangeRating { question: String, rating: i64 },

    #[error("session id '{id}' appears in both {} and {}", first.display(), second.display())]
    DuplicateSession { id: String, first: PathBuf, second: PathBuf },

    #[error("survey {}: {reason}", path.display())]
    MalformedSurvey { path: PathBuf, reason: String },

    #[error(transparent)]
    Session(#[from] SessionError),
}

impl ErrorCode for CurationError {
    fn module(&self) -> &'static str {
        "curation"
    }

    fn code(&self) -> &'static str {
        match self {
            CurationError::UnknownTrial(_) => "unknown_trial",
            CurationError::UnlabeledTrial(_) => "unlabeled_trial",
            CurationError::Empty => "empty",
            CurationError::EmptyQuestion(_) => "empty_question",
            CurationError::OutOfRangeRating { .. } => "out_of_range_rating",
            CurationError::DuplicateSession { .. } => "duplicate_session",
            CurationError::MalformedSurvey { .. } => "malformed_survey",
            CurationError::Session(e) => e.code(),
        }
    }
}

/// A trial directory in a dataset root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialEntry {
    pub path: PathBuf,
    pub manifest: SessionManifest,
}

/// Every `<root>/<dir>/manifest.json`, in directory name order.
pub fn load_dataset(root: &Path) -> Result<Vec<TrialEntry>, CurationError> {
    let io = |source| SessionError::Io {
        path: root.to_path_buf(),
        source,
    };
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    dirs.sort();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut out = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let manifest = read_manifest(&dir)?;
        if let Some(first) = seen.get(&manifest.session_id) {
            return Err(CurationError::DuplicateSession {
                id: manifest.session_id,
                first: first.clone(),
                second: dir,
            });
        }
        seen.insert(manifest.session_id.clone(), dir.clone());
        out.push(TrialEntry { path: dir, manifest });
    }
    Ok(out)
}

fn find_trial(root: &Path, trial_id: &str) -> Result<PathBuf, CurationError> {
    let direct = root.join(trial_id);
    if direct.join(MANIFEST_FILE).is_file() && read_manifest(&direct)?.session_id == trial_id {
        return Ok(direct);
    }
    load_dataset(root)?
        .into_iter()
        .find(|t| t.manifest.session_id == trial_id)
        .map(|t| t.path)
        .ok_or_else(|| CurationError::UnknownTrial(trial_id.to_owned()))
}

/// Sets a trial's failure flags, replacing any earlier ones; success is an
/// empty flag set.
pub fn label_trial(root: &Path, trial_id: &str, flags: &[FailureFlag]) -> Result<SessionManifest, CurationError> {
    let dir = find_trial(root, trial_id)?;
    let mut manifest = read_manifest(&dir)?;
    let set: BTreeSet<FailureFlag> = flags.iter().cloned().collect();
    manifest.flags = set.into_iter().collect();
    manifest.success = Some(manifest.flags.is_empty());
    write_manifest(&dir, &manifest)?;
    Ok(manifest)
}

/// A percentage held as integer hundredths so it prints exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(pub u64);

impl Percent {
    /// `100 num / den` rounded half-up to two decimals.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den > 0);
        Percent((20_000 * num + den) / (2 * den))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Percent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("not a two-decimal percentage: '{s}'");
        let (whole, frac) = s.split_once('.').ok_or_else(bad)?;
        if frac.len() != 2 {
            return Err(bad());
        }
        let w: u64 = whole.parse().map_err(|_| bad())?;
        let h: u64 = frac.parse().map_err(|_| bad())?;
        Ok(Percent(w * 100 + h))
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrialCounts {
    pub raw: u64,
    pub successful: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_task: BTreeMap<Task, TrialCounts>,
    pub total: TrialCounts,
    pub success_percentage: Percent,
}

impl DatasetStats {
    /// `task,raw,successful` rows, a `Total` row and the percentage.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,raw,successful\n");
        for (task, c) in &self.per_task {
            out.push_str(&format!("{},{},{}\n", task.display_name(), c.raw, c.successful));
        }
        out.push_str(&format!("Total,{},{}\n", self.total.raw, self.total.successful));
        out.push_str(&format!("Percentage,,{}\n", self.success_percentage));
        out
    }
}

/// Raw and successful trial counts per task. Unlabeled trials count as raw only.
pub fn dataset_stats<'a, I>(manifests: I) -> Result<DatasetStats, CurationError>
where
    I: IntoIterator<Item = &'a SessionManifest>,
{
    let mut per_task: BTreeMap<Task, TrialCounts> = BTreeMap::new();
    for m in manifests {
        let c = per_task.entry(m.task.clone()).or_default();
        c.raw += 1;
        c.successful += u64::from(m.success == Some(true));
    }
    if per_task.is_empty() {
        return Err(CurationError::Empty);
    }
    let total = per_task.values().fold(TrialCounts::default(), |acc, c| TrialCounts {
        raw: acc.raw + c.raw,
        successful: acc.successful + c.successful,
    });
    Ok(DatasetStats {
        per_task,
        total,
        success_percentage: Percent::ratio(total.successful, total.raw),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Unlabeled trials are an error.
    Strict,
    /// Unlabeled trials are left out with a warning.
    Lenient,
}

/// Successful trials sorted by task, then trial id.
pub fn filter_successful(root: &Path, mode: FilterMode) -> Result<Vec<TrialEntry>, CurationError> {
    let mut kept = Vec::new();
    for t in load_dataset(root)? {
        match t.manifest.success {
            Some(true) => kept.push(t),
            Some(false) => {}
            None if mode == FilterMode::Strict => {
                return Err(CurationError::UnlabeledTrial(t.manifest.session_id));
            }
            None => log::warn!("skipping unlabeled trial '{}'", t.manifest.session_id),
        }
    }
    kept.sort_by(|a, b| (&a.manifest.task, &a.manifest.session_id).cmp(&(&b.manifest.task, &b.manifest.session_id)));
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSummary {
    pub n: usize,
    pub median: f64,
    /// Share of ratings of 4 or 5, in percent.
    pub top_box_percent: f64,
}

pub fn question_summary(question: &str, ratings: &[i64]) -> Result<QuestionSummary, CurationError> {
    if ratings.is_empty() {
        return Err(CurationError::EmptyQuestion(question.to_owned()));
    }
    if let Some(&r) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(CurationError::OutOfRangeRating {
            question: question.to_owned(),
            rating: r,
        });
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    let top = sorted.iter().filter(|&&r| r >= 4).count();
    Ok(QuestionSummary {
        n,
        median,
        top_box_percent: 100.0 * top as f64 / n as f64,
    })
}

pub type SurveySummary = BTreeMap<String, QuestionSummary>;

pub fn survey_stats(responses: &BTreeMap<String, Vec<i64>>) -> Result<SurveySummary, CurationError> {
    responses
        .iter()
        .map(|(q, r)| Ok((q.clone(), question_summary(q, r)?)))
        .collect()
}

#[derive(Debug, Deserialize)]
struct SurveyRow {
    question_id: String,
    #[allow(dead_code)]
    participant_id: String,
    rating: i64,
}

/// Reads `question_id,participant_id,rating` rows into ratings per question.
pub fn read_survey_csv(path: &Path) -> Result<BTreeMap<String, Vec<i64>>, CurationError> {
    let malformed = |reason: String| CurationError::MalformedSurvey {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let mut out: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    for row in rdr.deserialize::<SurveyRow>() {
        let row = row.map_err(|e| malformed(e.to_string()))?;
        out.entry(row.question_id).or_default().push(row.rating);
    }
    Ok(out)
}
