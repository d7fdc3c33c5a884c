//! Dataset-level processing: sync, denoise and analyze each trial, then
//! assemble trial, curation and dialogue statistics into one report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curation::{self, CurationError, DatasetStats, SurveySummary, TrialEntry};
use crate::dialogue::{ambiguity_distribution, AmbiguityDistribution, AnnotatedDialogue, DialogueError, LabelClass};
use crate::dsp::{denoise_session, prefilter_native, DenoisePolicy, DspError};
use crate::error::ErrorCode;
use crate::metrics::{compute_trial_metrics, MetricsError, MetricsReport, TaskAggregate, TrialMetrics};
use crate::session::{load_session, RawSession, SessionError, StreamKind};
use crate::sync::{sync_session, SyncError, SyncOptions, SyncedSession};
use crate::task::Task;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Curation(#[from] CurationError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error("trial '{trial}': {source}")]
    Trial {
        trial: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    fn inner(&self) -> Option<&dyn ErrorCode> {
        Some(match self {
            PipelineError::Session(e) => e,
            PipelineError::Sync(e) => e,
            PipelineError::Dsp(e) => e,
            PipelineError::Metrics(e) => e,
            PipelineError::Curation(e) => e,
            PipelineError::Dialogue(e) => e,
            PipelineError::Trial { source, .. } => return source.inner(),
            PipelineError::Io { .. } | PipelineError::Pool(_) => return None,
        })
    }
}

impl ErrorCode for PipelineError {
    fn module(&self) -> &'static str {
        self.inner().map_or("cli", |e| e.module())
    }

    fn code(&self) -> &'static str {
        match self.inner() {
            Some(e) => e.code(),
            None => match self {
                PipelineError::Pool(_) => "worker_pool",
                _ => "io_error",
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub sync: SyncOptions,
    pub policy: DenoisePolicy,
    /// Filter fast numeric streams at their own rate before resampling.
    pub prefilter: bool,
    /// Analyze every trial instead of only successful ones.
    pub all_trials: bool,
    /// Worker threads for per-trial work; 0 lets the pool decide.
    pub jobs: usize,
    pub survey: Option<PathBuf>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            sync: SyncOptions::default(),
            policy: DenoisePolicy::default(),
            prefilter: true,
            all_trials: false,
            jobs: 0,
            survey: None,
        }
    }
}

/// Rate of the reference grid: the slowest video stream.
pub fn grid_rate(session: &RawSession) -> Option<f64> {
    session
        .manifest
        .streams
        .iter()
        .filter(|d| d.kind == StreamKind::VideoFrames)
        .map(|d| d.nominal_rate)
        .reduce(f64::min)
}

/// Native-rate prefilter (optional), sync, then grid-rate denoising.
pub fn sync_and_denoise(raw: &RawSession, opts: &PipelineOptions) -> Result<SyncedSession, PipelineError> {
    let (raw, native) = match (opts.prefilter, grid_rate(raw)) {
        (true, Some(rate)) => {
            let (r, rec) = prefilter_native(raw, &opts.policy, rate)?;
            (std::borrow::Cow::Owned(r), rec)
        }
        _ => (std::borrow::Cow::Borrowed(raw), BTreeMap::new()),
    };
    let mut synced = sync_session(&raw, opts.sync)?;
    synced.filtered = native;
    Ok(denoise_session(&synced, &opts.policy)?)
}

pub fn process_session(raw: &RawSession, opts: &PipelineOptions) -> Result<(SyncedSession, TrialMetrics), PipelineError> {
    let synced = sync_and_denoise(raw, opts)?;
    let metrics = compute_trial_metrics(&synced)?;
    Ok((synced, metrics))
}

/// Tables behind each panel of the study's quantitative figure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    /// Raw and successful trials per task.
    pub task_distribution: DatasetStats,
    pub completion_time: Vec<TaskAggregate>,
    pub ee_path_length: Vec<TaskAggregate>,
    pub wheelchair_mean_jerk: Vec<TaskAggregate>,
    pub ee_mean_jerk: Vec<TaskAggregate>,
    /// Share of each label class falling in each task.
    pub task_share_by_ambiguity: BTreeMap<LabelClass, BTreeMap<Task, f64>>,
    pub utterance_counts: BTreeMap<Task, usize>,
    /// Label counts per task and class.
    pub ambiguity_by_task: BTreeMap<Task, BTreeMap<LabelClass, usize>>,
    pub trials: Vec<TrialMetrics>,
    pub comfort: Option<crate::metrics::ComfortAssessment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survey: Option<SurveySummary>,
}

fn selected(entries: Vec<TrialEntry>, all: bool) -> Vec<TrialEntry> {
    if all || entries.iter().all(|t| t.manifest.success.is_none()) {
        if !all {
            log::warn!("no trial is labeled, analyzing all of them");
        }
        return entries;
    }
    let skipped = entries.iter().filter(|t| t.manifest.success.is_none()).count();
    if skipped > 0 {
        log::warn!("{skipped} unlabeled trials left out");
    }
    entries.into_iter().filter(|t| t.manifest.success == Some(true)).collect()
}

pub fn run_pipeline(root: &Path, opts: &PipelineOptions) -> Result<PipelineReport, PipelineError> {
    let entries = curation::load_dataset(root)?;
    let task_distribution = curation::dataset_stats(entries.iter().map(|t| &t.manifest))?;
    let chosen = selected(entries, opts.all_trials);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let results: Vec<Result<(TrialMetrics, Option<_>), PipelineError>> = pool.install(|| {
        chosen
            .par_iter()
            .map(|t| {
                let wrap = |e: PipelineError| PipelineError::Trial {
                    trial: t.manifest.session_id.clone(),
                    source: Box::new(e),
                };
                let raw = load_session(&t.path).map_err(|e| wrap(e.into()))?;
                let (_, m) = process_session(&raw, opts).map_err(wrap)?;
                Ok((m, raw.dialogue))
            })
            .collect()
    });
    let mut trials = Vec::with_capacity(results.len());
    let mut dialogues = Vec::new();
    for r in results {
        let (m, d) = r?;
        trials.push(m);
        dialogues.extend(d);
    }

    let survey = match &opts.survey {
        Some(p) => Some(curation::survey_stats(&curation::read_survey_csv(p)?)?),
        None => None,
    };
    Ok(PipelineReport::assemble(
        task_distribution,
        MetricsReport::from_trials(trials),
        &dialogues,
        survey,
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn aggregate_csv(rows: &[TaskAggregate]) -> String {
    let mut out = String::from("task,n,mean,sd\n");
    for a in rows {
        out.push_str(&format!("{},{},{},{}\n", a.task, a.n_trial, a.mean, fmt_opt(a.sd)));
    }
    out
}

impl PipelineReport {
    /// Combines the outputs of the individual stages.
    pub fn assemble(
        task_distribution: DatasetStats,
        metrics: MetricsReport,
        dialogues: &[AnnotatedDialogue],
        survey: Option<SurveySummary>,
    ) -> Self {
        let AmbiguityDistribution {
            matrix,
            utterance_counts,
            type_task_shares,
        } = ambiguity_distribution(dialogues);
        Self {
            task_distribution,
            completion_time: metrics.duration,
            ee_path_length: metrics.ee_path_length,
            wheelchair_mean_jerk: metrics.wheelchair_mean_jerk,
            ee_mean_jerk: metrics.ee_mean_jerk,
            task_share_by_ambiguity: type_task_shares,
            utterance_counts,
            ambiguity_by_task: matrix,
            trials: metrics.trials,
            comfort: metrics.comfort,
            survey,
        }
    }

    /// One row per analyzed task: trial count and mean/SD of each metric.
    pub fn task_summary_csv(&self) -> String {
        let mut out = String::from(
            "task,n,duration_mean,duration_sd,ee_path_mean,ee_path_sd,ee_jerk_mean,ee_jerk_sd,wc_jerk_mean,wc_jerk_sd\n",
        );
        let rows = self
            .completion_time
            .iter()
            .zip(&self.ee_path_length)
            .zip(&self.ee_mean_jerk)
            .zip(&self.wheelchair_mean_jerk);
        for (((d, p), e), w) in rows {
            out.push_str(&format!("{},{}", d.task, d.n_trial));
            for a in [d, p, e, w] {
                out.push_str(&format!(",{},{}", a.mean, fmt_opt(a.sd)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One CSV table per panel, keyed by file name.
    pub fn csv_tables(&self) -> BTreeMap<&'static str, String> {
        let mut t = BTreeMap::new();
        t.insert("a_task_distribution.csv", self.task_distribution.to_csv());
        t.insert("b_completion_time.csv", aggregate_csv(&self.completion_time));
        t.insert("c_ee_path_length.csv", aggregate_csv(&self.ee_path_length));
        t.insert("d_wheelchair_mean_jerk.csv", aggregate_csv(&self.wheelchair_mean_jerk));
        t.insert("e_ee_mean_jerk.csv", aggregate_csv(&self.ee_mean_jerk));

        let mut f = String::from("class,task,share\n");
        for (class, row) in &self.task_share_by_ambiguity {
            for (task, share) in row {
                f.push_str(&format!("{},{task},{share}\n", class.as_str()));
            }
        }
        t.insert("f_task_share_by_ambiguity.csv", f);

        let mut g = String::from("task,utterances\n");
        for (task, n) in &self.utterance_counts {
            g.push_str(&format!("{task},{n}\n"));
        }
        t.insert("g_utterance_counts.csv", g);

        let mut h = String::from("task");
        for c in LabelClass::ALL {
            h.push(',');
            h.push_str(c.as_str());
        }
        h.push('\n');
        for (task, row) in &self.ambiguity_by_task {
            h.push_str(task.as_str());
            for c in LabelClass::ALL {
                h.push_str(&format!(",{}", row.get(&c).copied().unwrap_or(0)));
            }
            h.push('\n');
        }
        t.insert("h_ambiguity_by_task.csv", h);

        let mut trials = String::from("trial_id,task,duration,ee_path_length,ee_mean_jerk,wheelchair_mean_jerk\n");
        for m in &self.trials {
            trials.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.trial_id, m.task, m.duration, m.ee_path_length, m.ee_mean_jerk, m.wheelchair_mean_jerk
            ));
        }
        t.insert("trials.csv", trials);
        t.insert("task_summary.csv", self.task_summary_csv());

        if let Some(survey) = &self.survey {
            let mut s = String::from("question_id,n,median,top_box_percent\n");
            for (q, r) in survey {
                s.push_str(&format!("{q},{},{},{}\n", r.n, r.median, r.top_box_percent));
            }
            t.insert("i_survey.csv", s);
        }
        t
    }

    /// Writes `report.json` and/or the CSV tables into `dir`.
    pub fn write(&self, dir: &Path, json: bool, csv: bool) -> Result<Vec<PathBuf>, PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        if json {
            let p = dir.join("report.json");
            fs::write(&p, self.to_json()).map_err(io(&p))?;
            written.push(p);
        }
        if csv {
            for (name, body) in self.csv_tables() {
                let p = dir.join(name);
                fs::write(&p, body).map_err(io(&p))?;
                written.push(p);
            }
        }
        Ok(written)
    }
}
