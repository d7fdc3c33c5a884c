//! Alignment of multi-rate streams onto a common reference grid.
//!
//! The grid runs at the lowest video frame rate over the interval where all
//! streams overlap. Each grid step picks the nearest frame of every video
//! stream, keeping the previous selection when the nearest frame is further
//! than the tolerance `tau`. Numeric channels are linearly interpolated onto
//! the grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCode;
use crate::session::{FrameTimestampLog, RawSession, SessionManifest, StreamKind, TimedSeries};

pub const SYNCED_FILE: &str = "synced.json";
pub const SYNC_REPORT_FILE: &str = "sync_report.json";

/// Longest NaN run (seconds between the bracketing valid samples) that
/// interpolation bridges.
pub const DEFAULT_MAX_GAP: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("streams do not overlap: latest start {start} >= earliest end {end}")]
    NoOverlap { start: f64, end: f64 },

    #[error("overlap needs at least two non-empty streams, got {0}")]
    TooFewStreams(usize),

    #[error("stream '{0}' has no samples")]
    EmptyStream(String),

    #[error("frame log '{0}' is empty")]
    EmptyFrameLog(String),

    #[error("grid rate must be positive and finite, got {0}")]
    InvalidRate(f64),

    #[error("tolerance must be >= 0, got {0}")]
    InvalidTolerance(f64),

    #[error("grid [{grid_start}, {grid_end}] lies outside series '{stream}' [{first}, {last}]")]
    GridOutsideSeries {
        stream: String,
        grid_start: f64,
        grid_end: f64,
        first: f64,
        last: f64,
    },

    #[error("gap in '{stream}.{channel}' around t={at} spans {span} s (max {max_gap} s)")]
    UnbridgeableGap {
        stream: String,
        channel: String,
        at: f64,
        span: f64,
        max_gap: f64,
    },

    #[error("session has no {0} stream")]
    MissingStreamKind(&'static str),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed synced session {}: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },
}

impl ErrorCode for SyncError {
    fn module(&self) -> &'static str {
        "sync_engine"
    }

    fn code(&self) -> &'static str {
        match self {
            SyncError::NoOverlap { .. } => "no_overlap",
            SyncError::TooFewStreams(_) => "too_few_streams",
            SyncError::EmptyStream(_) => "empty_stream",
            SyncError::EmptyFrameLog(_) => "empty_frame_log",
            SyncError::InvalidRate(_) => "invalid_rate",
            SyncError::InvalidTolerance(_) => "invalid_tolerance",
            SyncError::GridOutsideSeries { .. } => "grid_outside_series",
            SyncError::UnbridgeableGap { .. } => "unbridgeable_gap",
            SyncError::MissingStreamKind(_) => "missing_stream_kind",
            SyncError::Io { .. } => "io_error",
            SyncError::Malformed { .. } => "malformed_synced_session",
        }
    }
}

/// First and last timestamp of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub first: f64,
    pub last: f64,
}

/// Anything with sorted timestamps.
pub trait Timeline {
    fn name(&self) -> &str;
    fn timestamps(&self) -> &[f64];

    fn span(&self) -> Option<Span> {
        let ts = self.timestamps();
        Some(Span {
            first: *ts.first()?,
            last: *ts.last()?,
        })
    }
}

impl Timeline for FrameTimestampLog {
    fn name(&self) -> &str {
        &self.stream
    }

    fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }
}

/// A numeric series paired with its stream name.
pub struct NamedSeries<'a>(pub &'a str, pub &'a TimedSeries);

impl Timeline for NamedSeries<'_> {
    fn name(&self) -> &str {
        self.0
    }

    fn timestamps(&self) -> &[f64] {
        &self.1.timestamps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapWindow {
    pub t_ref_start: f64,
    pub t_ref_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub timestamps: Vec<f64>,
    pub rate: f64,
}

impl ReferenceGrid {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSelection {
    pub stream: String,
    /// Zero-based index into the stream's frame log, one per grid step.
    pub selected_indices: Vec<usize>,
    pub accepted_flags: Vec<bool>,
}

impl FrameSelection {
    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted_flags.is_empty() {
            return 0.0;
        }
        self.accepted_flags.iter().filter(|&&a| a).count() as f64 / self.accepted_flags.len() as f64
    }
}

pub fn compute_overlap<T: Timeline + ?Sized>(streams: &[&T]) -> Result<OverlapWindow, SyncError> {
    if streams.len() < 2 {
        return Err(SyncError::TooFewStreams(streams.len()));
    }
    let mut start = f64::NEG_INFINITY;
    let mut end = f64::INFINITY;
    for s in streams {
        let span = s.span().ok_or_else(|| SyncError::EmptyStream(s.name().to_owned()))?;
        start = start.max(span.first);
        end = end.min(span.last);
    }
    if start >= end {
        return Err(SyncError::NoOverlap { start, end });
    }
    Ok(OverlapWindow {
        t_ref_start: start,
        t_ref_end: end,
    })
}

/// Uniform grid `t_k = start + k / rate` for every `t_k <= end`.
pub fn build_reference_grid(window: OverlapWindow, rate: f64) -> Result<ReferenceGrid, SyncError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SyncError::InvalidRate(rate));
    }
    let start = window.t_ref_start;
    let at = |k: usize| start + k as f64 / rate;
    // floor((end - start) * rate) can land one off either way in floating point;
    // settle on the largest k with t_k <= end.
    let mut last = ((window.t_ref_end - start) * rate).floor().max(0.0) as usize;
    while at(last + 1) <= window.t_ref_end {
        last += 1;
    }
    while last > 0 && at(last) > window.t_ref_end {
        last -= 1;
    }
    Ok(ReferenceGrid {
        timestamps: (0..=last).map(at).collect(),
        rate,
    })
}

/// Index of the frame nearest to `t`; ties go to the earlier frame.
fn nearest(ts: &[f64], t: f64) -> usize {
    let j = ts.partition_point(|&x| x < t);
    if j == 0 {
        0
    } else if j == ts.len() || t - ts[j - 1] <= ts[j] - t {
        j - 1
    } else {
        j
    }
}

/// Tolerance-gated nearest-frame selection.
///
/// At the first grid step a failed tolerance test still selects the nearest
/// frame (there is no previous selection to hold) but flags it unaccepted.
pub fn match_frames(frames: &FrameTimestampLog, grid: &ReferenceGrid, tau: f64) -> Result<FrameSelection, SyncError> {
    if frames.is_empty() {
        return Err(SyncError::EmptyFrameLog(frames.stream.clone()));
    }
    if !(tau >= 0.0) {
        return Err(SyncError::InvalidTolerance(tau));
    }
    let ts = &frames.timestamps;
    let mut selected_indices = Vec::with_capacity(grid.len());
    let mut accepted_flags = Vec::with_capacity(grid.len());
    for &t in &grid.timestamps {
        let i = nearest(ts, t);
        let ok = (ts[i] - t).abs() <= tau;
        let chosen = match selected_indices.last() {
            Some(&prev) if !ok => prev,
            _ => i,
        };
        selected_indices.push(chosen);
        accepted_flags.push(ok);
    }
    Ok(FrameSelection {
        stream: frames.stream.clone(),
        selected_indices,
        accepted_flags,
    })
}

/// For every sample, the closest non-NaN sample at or before it, and at or after it.
fn valid_neighbours(col: &[f64]) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut prev = Vec::with_capacity(col.len());
    let mut last = None;
    for (i, v) in col.iter().enumerate() {
        if !v.is_nan() {
            last = Some(i);
        }
        prev.push(last);
    }
    let mut next = vec![None; col.len()];
    let mut upcoming = None;
    for (i, v) in col.iter().enumerate().rev() {
        if !v.is_nan() {
            upcoming = Some(i);
        }
        next[i] = upcoming;
    }
    (prev, next)
}

/// Linear interpolation of every channel at the grid timestamps.
///
/// NaN gaps are bridged when the valid samples on either side are at most
/// `max_gap` seconds apart. Quaternion channel groups (`*_qx`, `*_qy`,
/// `*_qz`, `*_qw`) are renormalized afterwards.
pub fn interpolate_numeric(
    name: &str,
    series: &TimedSeries,
    grid: &ReferenceGrid,
    max_gap: f64,
) -> Result<TimedSeries, SyncError> {
    let ts = &series.timestamps;
    let (Some(&g0), Some(&g1)) = (grid.timestamps.first(), grid.timestamps.last()) else {
        return Ok(TimedSeries::empty(series.channels.clone()));
    };
    let outside = || SyncError::GridOutsideSeries {
        stream: name.to_owned(),
        grid_start: g0,
        grid_end: g1,
        first: ts.first().copied().unwrap_or(f64::NAN),
        last: ts.last().copied().unwrap_or(f64::NAN),
    };
    if ts.is_empty() || ts[0] > g0 || ts[ts.len() - 1] < g1 {
        return Err(outside());
    }

    let mut columns = Vec::with_capacity(series.columns.len());
    for (desc, col) in series.channels.iter().zip(&series.columns) {
        let (prev, next) = valid_neighbours(col);
        let mut out = Vec::with_capacity(grid.len());
        for &t in &grid.timestamps {
            // last sample at or before t, first sample at or after t
            let before = ts.partition_point(|&x| x <= t) - 1;
            let after = ts.partition_point(|&x| x < t);
            let gap = |at: f64, span: f64| SyncError::UnbridgeableGap {
                stream: name.to_owned(),
                channel: desc.name.clone(),
                at,
                span,
                max_gap,
            };
            let (Some(a), Some(b)) = (prev[before], next[after]) else {
                return Err(gap(t, f64::INFINITY));
            };
            let (ta, tb) = (ts[a], ts[b]);
            if b > a + 1 && tb - ta > max_gap {
                return Err(gap(t, tb - ta));
            }
            let v = if a == b || t == ta {
                col[a]
            } else if t == tb {
                col[b]
            } else {
                let w = (t - ta) / (tb - ta);
                col[a] + (col[b] - col[a]) * w
            };
            out.push(v);
        }
        columns.push(out);
    }
    let mut result = TimedSeries::new(grid.timestamps.clone(), series.channels.clone(), columns);
    renormalize_quaternions(&mut result);
    Ok(result)
}

/// Channel indices of each `<prefix>_q{x,y,z,w}` group.
pub fn quaternion_groups(series: &TimedSeries) -> Vec<[usize; 4]> {
    let mut groups = Vec::new();
    for (i, c) in series.channels.iter().enumerate() {
        if let Some(prefix) = c.name.strip_suffix("_qx") {
            let find = |s: &str| series.channel_index(&format!("{prefix}_{s}"));
            if let (Some(y), Some(z), Some(w)) = (find("qy"), find("qz"), find("qw")) {
                groups.push([i, y, z, w]);
            }
        }
    }
    groups
}

pub fn renormalize_quaternions(series: &mut TimedSeries) {
    for group in quaternion_groups(series) {
        for k in 0..series.len() {
            let norm = group.iter().map(|&c| series.columns[c][k].powi(2)).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                for &c in &group {
                    series.columns[c][k] /= norm;
                }
            }
        }
    }
}

/// Where a channel was low-pass filtered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterStage {
    /// At the stream's own sample rate, before interpolation.
    Native,
    /// At the reference grid rate, after interpolation.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub stage: FilterStage,
    pub order: usize,
    pub cutoff: f64,
    pub sample_rate: f64,
    /// The policy asked for a cutoff at or above Nyquist and it was clamped.
    #[serde(default)]
    pub clamped: bool,
}

/// A session aligned to its reference grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncedSession {
    pub manifest: SessionManifest,
    pub window: OverlapWindow,
    pub grid: ReferenceGrid,
    pub tau: f64,
    pub selections: Vec<FrameSelection>,
    /// Numeric streams resampled on the grid, keyed by stream name.
    pub streams: BTreeMap<String, TimedSeries>,
    /// Filtering applied so far, keyed by `stream/channel`.
    #[serde(default)]
    pub filtered: BTreeMap<String, FilterRecord>,
}

pub fn channel_key(stream: &str, channel: &str) -> String {
    format!("{stream}/{channel}")
}

impl SyncedSession {
    /// Finds a channel by name across all streams.
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.streams.values().find_map(|s| s.column(name))
    }

    pub fn report(&self) -> SyncReport {
        SyncReport {
            session_id: self.manifest.session_id.clone(),
            grid_rate: self.grid.rate,
            grid_len: self.grid.len(),
            t_ref_start: self.window.t_ref_start,
            t_ref_end: self.window.t_ref_end,
            tau: self.tau,
            acceptance: self
                .selections
                .iter()
                .map(|s| (s.stream.clone(), s.acceptance_rate()))
                .collect(),
            numeric_streams: self.streams.keys().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub session_id: String,
    pub grid_rate: f64,
    pub grid_len: usize,
    pub t_ref_start: f64,
    pub t_ref_end: f64,
    pub tau: f64,
    /// Fraction of grid steps whose frame passed the tolerance test, per video stream.
    pub acceptance: BTreeMap<String, f64>,
    pub numeric_streams: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncOptions {
    /// `None` selects half the reference frame period.
    pub tau: Option<f64>,
    pub max_gap: f64,
}

impl Default for SyncOptions {
    fn default() -> Self {
        Self {
            tau: None,
            max_gap: DEFAULT_MAX_GAP,
        }
    }
}

/// Half the grid period: at most one frame of the grid-rate stream can pass.
pub fn default_tau(grid_rate: f64) -> f64 {
    0.5 / grid_rate
}

/// Overlap, grid at the lowest video rate, frame matching and interpolation.
/// Audio is not part of the alignment.
pub fn sync_session(session: &RawSession, opts: SyncOptions) -> Result<SyncedSession, SyncError> {
    let m = &session.manifest;
    let videos: Vec<_> = m
        .streams
        .iter()
        .filter(|d| d.kind == StreamKind::VideoFrames)
        .collect();
    let numerics: Vec<_> = m.streams.iter().filter(|d| d.kind == StreamKind::Numeric).collect();
    if videos.is_empty() {
        return Err(SyncError::MissingStreamKind("video"));
    }
    if numerics.is_empty() {
        return Err(SyncError::MissingStreamKind("numeric"));
    }
    let rate = videos
        .iter()
        .map(|d| d.nominal_rate)
        .fold(f64::INFINITY, f64::min);

    let logs: Vec<&FrameTimestampLog> = videos
        .iter()
        .map(|d| session.frames.get(&d.name).ok_or_else(|| SyncError::EmptyFrameLog(d.name.clone())))
        .collect::<Result<_, _>>()?;
    let named: Vec<NamedSeries<'_>> = numerics
        .iter()
        .map(|d| {
            session
                .numeric
                .get(&d.name)
                .map(|s| NamedSeries(&d.name, s))
                .ok_or_else(|| SyncError::EmptyStream(d.name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let timelines: Vec<&dyn Timeline> = logs
        .iter()
        .map(|l| *l as &dyn Timeline)
        .chain(named.iter().map(|n| n as &dyn Timeline))
        .collect();

    let window = compute_overlap(&timelines)?;
    let grid = build_reference_grid(window, rate)?;
    let tau = opts.tau.unwrap_or_else(|| default_tau(rate));

    let selections = logs
        .iter()
        .map(|log| match_frames(log, &grid, tau))
        .collect::<Result<Vec<_>, _>>()?;
    let streams = named
        .iter()
        .map(|NamedSeries(name, s)| Ok(((*name).to_owned(), interpolate_numeric(name, s, &grid, opts.max_gap)?)))
        .collect::<Result<BTreeMap<_, _>, SyncError>>()?;

    Ok(SyncedSession {
        manifest: m.clone(),
        window,
        grid,
        tau,
        selections,
        streams,
        filtered: BTreeMap::new(),
    })
}

/// Writes `synced.json` and `sync_report.json` into `dir`.
pub fn write_synced(session: &SyncedSession, dir: &Path) -> Result<(), SyncError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SyncError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(SYNCED_FILE);
    let mut text = serde_json::to_string(session).map_err(|e| SyncError::Malformed {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(io(&path))?;
    let rpath = dir.join(SYNC_REPORT_FILE);
    let mut report = serde_json::to_string_pretty(&session.report()).expect("report serializes");
    report.push('\n');
    fs::write(&rpath, report).map_err(io(&rpath))
}

pub fn read_synced(dir: &Path) -> Result<SyncedSession, SyncError> {
    let path = dir.join(SYNCED_FILE);
    let text = fs::read_to_string(&path).map_err(|source| SyncError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| SyncError::Malformed {
        path,
        reason: e.to_string(),
    })
}

/// Channels that have been filtered, as a set of `stream/channel` keys.
pub fn filtered_keys(session: &SyncedSession) -> BTreeSet<&str> {
    session.filtered.keys().map(String::as_str).collect()
}
