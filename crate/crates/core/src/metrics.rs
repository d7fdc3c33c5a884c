//! Motion-quality metrics on synchronized, denoised sessions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCode;
use crate::sync::SyncedSession;
use crate::task::Task;

pub const EE_POSITION: [&str; 3] = ["ee_x", "ee_y", "ee_z"];
pub const WHEELCHAIR_POSITION: [&str; 2] = ["wc_x", "wc_y"];

/// Comfort band for wheelchair jerk, m/s^3, both bounds inclusive.
pub const COMFORT_BAND: (f64, f64) = (0.3, 0.9);
/// Whole-body vibration comfort figure in m/s^2. Carried as context only:
/// it is an acceleration and is never compared with jerk values.
pub const ISO_COMFORT_ACCEL: f64 = 0.315;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("no values to aggregate")]
    Empty,

    #[error("channel '{0}' not found in session")]
    MissingChannel(String),

    #[error("sample step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("axes have different lengths")]
    RaggedAxes,
}

impl ErrorCode for MetricsError {
    fn module(&self) -> &'static str {
        "kinematics_metrics"
    }

    fn code(&self) -> &'static str {
        match self {
            MetricsError::TooFewSamples { .. } => "too_few_samples",
            MetricsError::Empty => "empty",
            MetricsError::MissingChannel(_) => "missing_channel",
            MetricsError::InvalidStep(_) => "invalid_step",
            MetricsError::RaggedAxes => "ragged_axes",
        }
    }
}

fn sample_count(axes: &[&[f64]]) -> Result<usize, MetricsError> {
    let k = axes.first().map_or(0, |a| a.len());
    if axes.iter().any(|a| a.len() != k) {
        return Err(MetricsError::RaggedAxes);
    }
    Ok(k)
}

/// Jerk magnitude at each of the first `K - 3` samples.
///
/// `axes` holds one position column per Cartesian axis on a uniform grid
/// with step `dt`. Each axis is differentiated with the third-order forward
/// difference `(x[k+3] - 3 x[k+2] + 3 x[k+1] - x[k]) / dt^3`.
pub fn jerk_series(axes: &[&[f64]], dt: f64) -> Result<Vec<f64>, MetricsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MetricsError::InvalidStep(dt));
    }
    let k = sample_count(axes)?;
    if k < 4 {
        return Err(MetricsError::TooFewSamples { need: 4, got: k });
    }
    let dt3 = dt * dt * dt;
    Ok((0..k - 3)
        .map(|i| {
            axes.iter()
                .map(|x| {
                    let d = (x[i + 3] - 3.0 * x[i + 2] + 3.0 * x[i + 1] - x[i]) / dt3;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

pub fn trial_mean_jerk(jerk: &[f64]) -> Result<f64, MetricsError> {
    if jerk.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(jerk.iter().sum::<f64>() / jerk.len() as f64)
}

/// Polyline length through the samples.
pub fn path_length(axes: &[&[f64]]) -> Result<f64, MetricsError> {
    let k = sample_count(axes)?;
    if k < 2 {
        return Err(MetricsError::TooFewSamples { need: 2, got: k });
    }
    Ok((1..k)
        .map(|i| {
            axes.iter()
                .map(|x| (x[i] - x[i - 1]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAggregate {
    pub task: Task,
    pub n_trial: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single trial.
    pub sd: Option<f64>,
}

/// Mean and sample standard deviation (n - 1 denominator) of per-trial values.
pub fn task_aggregate(task: Task, values: &[f64]) -> Result<TaskAggregate, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(TaskAggregate {
        task,
        n_trial: n,
        mean,
        sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComfortBand {
    Below,
    Within,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortAssessment {
    pub wheelchair_mean_jerk: f64,
    pub wheelchair_band: ComfortBand,
    /// m/s^2, for context next to the jerk band.
    pub iso_reference: f64,
}

pub fn comfort_check(wheelchair_mean_jerk: f64) -> ComfortAssessment {
    let (lo, hi) = COMFORT_BAND;
    let band = if wheelchair_mean_jerk < lo {
        ComfortBand::Below
    } else if wheelchair_mean_jerk <= hi {
        ComfortBand::Within
    } else {
        ComfortBand::Above
    };
    ComfortAssessment {
        wheelchair_mean_jerk,
        wheelchair_band: band,
        iso_reference: ISO_COMFORT_ACCEL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial_id: String,
    pub task: Task,
    /// s
    pub duration: f64,
    /// m
    pub ee_path_length: f64,
    /// m/s^3
    pub ee_mean_jerk: f64,
    /// m/s^3, from planar wheelchair position
    pub wheelchair_mean_jerk: f64,
}

fn channels<'a, const N: usize>(s: &'a SyncedSession, names: [&str; N]) -> Result<Vec<&'a [f64]>, MetricsError> {
    names
        .iter()
        .map(|n| s.channel(n).ok_or_else(|| MetricsError::MissingChannel((*n).to_owned())))
        .collect()
}

/// Duration, end-effector path length and mean jerk of the end effector and
/// wheelchair for one synced (and normally denoised) trial.
pub fn compute_trial_metrics(session: &SyncedSession) -> Result<TrialMetrics, MetricsError> {
    let ee = channels(session, EE_POSITION)?;
    let wc = channels(session, WHEELCHAIR_POSITION)?;
    let ts = &session.grid.timestamps;
    let duration = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) => b - a,
        _ => return Err(MetricsError::TooFewSamples { need: 4, got: 0 }),
    };
    let dt = session.grid.dt();
    Ok(TrialMetrics {
        trial_id: session.manifest.session_id.clone(),
        task: session.manifest.task.clone(),
        duration,
        ee_path_length: path_length(&ee)?,
        ee_mean_jerk: trial_mean_jerk(&jerk_series(&ee, dt)?)?,
        wheelchair_mean_jerk: trial_mean_jerk(&jerk_series(&wc, dt)?)?,
    })
}

/// Per-task aggregates of every trial metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trials: Vec<TrialMetrics>,
    pub duration: Vec<TaskAggregate>,
    pub ee_path_length: Vec<TaskAggregate>,
    pub ee_mean_jerk: Vec<TaskAggregate>,
    pub wheelchair_mean_jerk: Vec<TaskAggregate>,
    /// Comfort band of the largest per-task mean wheelchair jerk.
    pub comfort: Option<ComfortAssessment>,
}

impl MetricsReport {
    /// Groups trials by task (sorted by task, then trial id).
    pub fn from_trials(mut trials: Vec<TrialMetrics>) -> Self {
        trials.sort_by(|a, b| (&a.task, &a.trial_id).cmp(&(&b.task, &b.trial_id)));
        let mut by_task: BTreeMap<&Task, Vec<&TrialMetrics>> = BTreeMap::new();
        for t in &trials {
            by_task.entry(&t.task).or_default().push(t);
        }
        let agg = |f: fn(&TrialMetrics) -> f64| -> Vec<TaskAggregate> {
            by_task
                .iter()
                .map(|(task, ts)| {
                    let v: Vec<f64> = ts.iter().map(|t| f(t)).collect();
                    task_aggregate((*task).clone(), &v).expect("groups are non-empty")
                })
                .collect()
        };
        let duration = agg(|t| t.duration);
        let ee_path_length = agg(|t| t.ee_path_length);
        let ee_mean_jerk = agg(|t| t.ee_mean_jerk);
        let wheelchair_mean_jerk = agg(|t| t.wheelchair_mean_jerk);
        let comfort = wheelchair_mean_jerk
            .iter()
            .map(|a| a.mean)
            .max_by(f64::total_cmp)
            .map(comfort_check);
        Self {
            trials,
            duration,
            ee_path_length,
            ee_mean_jerk,
            wheelchair_mean_jerk,
            comfort,
        }
    }
}
