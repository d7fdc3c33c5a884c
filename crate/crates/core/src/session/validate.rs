use std::collections::HashSet;
use std::fmt;
use std::path::{Component, Path};

use serde::Serialize;

use super::model::{AudioMeta, RawSession, SessionManifest, StreamDescriptor, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A broken invariant, reported as data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `streams[2].nominal_rate`.
    pub field: String,
    /// Stable kebab-case identifier.
    pub code: &'static str,
    /// The invariant, stated as it should hold.
    pub rule: &'static str,
    pub severity: Severity,
    /// Stream the violation belongs to, when there is one.
    pub stream: Option<String>,
}

impl Violation {
    fn error(field: impl Into<String>, code: &'static str, rule: &'static str) -> Self {
        Self {
            field: field.into(),
            code,
            rule,
            severity: Severity::Error,
            stream: None,
        }
    }

    fn warning(field: impl Into<String>, code: &'static str, rule: &'static str) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(field, code, rule)
        }
    }

    fn on(mut self, stream: &str) -> Self {
        self.stream = Some(stream.to_owned());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.field, self.rule, self.code)?;
        if let Some(s) = &self.stream {
            write!(f, " in stream '{s}'")?;
        }
        Ok(())
    }
}

fn path_is_contained(p: &str) -> bool {
    !p.is_empty()
        && Path::new(p)
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

fn validate_stream(i: usize, s: &StreamDescriptor, out: &mut Vec<Violation>) {
    let f = |name: &str| format!("streams[{i}].{name}");
    if s.name.is_empty() {
        out.push(Violation::error(f("name"), "stream-name-empty", "stream name non-empty"));
    }
    if !(s.nominal_rate.is_finite() && s.nominal_rate > 0.0) {
        out.push(
            Violation::error(f("nominal_rate"), "nominal-rate-invalid", "nominal_rate > 0").on(&s.name),
        );
    }
    if !path_is_contained(&s.file) {
        out.push(
            Violation::error(f("file"), "file-path-invalid", "file is a relative path inside the session root")
                .on(&s.name),
        );
    }
    match s.kind {
        StreamKind::VideoFrames if s.channels.len() != 1 => out.push(
            Violation::error(
                f("channels"),
                "video-channel-count",
                "VideoFrames streams have exactly one channel",
            )
            .on(&s.name),
        ),
        StreamKind::Numeric if s.channels.is_empty() => out.push(
            Violation::error(f("channels"), "numeric-channel-count", "Numeric streams have >= 1 channel")
                .on(&s.name),
        ),
        StreamKind::Audio => {
            if s.nominal_rate != f64::from(AudioMeta::CONFORMANT_RATE) {
                out.push(
                    Violation::warning(f("nominal_rate"), "audio-rate-nonconformant", "audio sampled at 48 kHz")
                        .on(&s.name),
                );
            }
            if s.channels.len() != 1 {
                out.push(
                    Violation::warning(f("channels"), "audio-channels-nonconformant", "audio recorded in mono")
                        .on(&s.name),
                );
            }
        }
        _ => {}
    }
    let mut names = HashSet::new();
    for (j, c) in s.channels.iter().enumerate() {
        if c.name.is_empty() || c.name == "t" || c.name.contains([',', '\n', '"']) {
            out.push(
                Violation::error(
                    format!("streams[{i}].channels[{j}].name"),
                    "channel-name-invalid",
                    "channel names are non-empty, not 't', and free of CSV delimiters",
                )
                .on(&s.name),
            );
        } else if !names.insert(c.name.as_str()) {
            out.push(
                Violation::error(
                    format!("streams[{i}].channels[{j}].name"),
                    "channel-name-duplicate",
                    "channel names unique within a stream",
                )
                .on(&s.name),
            );
        }
        if c.unit.trim().is_empty() {
            out.push(
                Violation::error(
                    format!("streams[{i}].channels[{j}].unit"),
                    "channel-unit-empty",
                    "units are non-empty SI strings",
                )
                .on(&s.name),
            );
        }
    }
}

/// Checks every manifest-level invariant. Returns an empty list iff all hold.
pub fn validate_manifest(m: &SessionManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.session_id.trim().is_empty() {
        out.push(Violation::error("session_id", "session-id-empty", "session_id non-empty"));
    }
    if !m.task.is_known() {
        out.push(Violation::error(
            "task",
            "task-not-in-taxonomy",
            "task is one of Cleaning, DoorOpening, DrawerOpening, Drinking, Feeding",
        ));
    }
    if m.success == Some(true) && !m.flags.is_empty() {
        out.push(Violation::error(
            "success",
            "success-contradicts-flags",
            "a trial is successful iff it carries no failure flags",
        ));
    }
    let mut names = HashSet::new();
    for (i, s) in m.streams.iter().enumerate() {
        if !s.name.is_empty() && !names.insert(s.name.as_str()) {
            out.push(
                Violation::error(format!("streams[{i}].name"), "stream-name-duplicate", "stream names unique")
                    .on(&s.name),
            );
        }
        validate_stream(i, s, &mut out);
    }
    out
}

fn strictly_increasing(ts: &[f64]) -> bool {
    ts.windows(2).all(|w| w[0] < w[1])
}

/// Manifest invariants plus invariants of the loaded data.
pub fn validate_session(s: &RawSession) -> Vec<Violation> {
    let mut out = validate_manifest(&s.manifest);
    for (i, d) in s.manifest.streams.iter().enumerate() {
        let field = format!("streams[{i}]");
        match d.kind {
            StreamKind::Numeric => match s.numeric.get(&d.name) {
                None => out.push(
                    Violation::error(field, "stream-data-missing", "every described stream has data").on(&d.name),
                ),
                Some(series) => {
                    if series.channels != d.channels
                        || series.columns.iter().any(|c| c.len() != series.timestamps.len())
                    {
                        out.push(
                            Violation::error(
                                field.clone(),
                                "shape-mismatch",
                                "series channels match the descriptor and every column has N values",
                            )
                            .on(&d.name),
                        );
                    }
                    check_timestamps(&field, &d.name, &series.timestamps, &mut out);
                    if series.columns.iter().flatten().any(|v| v.is_infinite()) {
                        out.push(
                            Violation::error(field, "values-not-finite", "values are finite or NaN gap markers")
                                .on(&d.name),
                        );
                    }
                }
            },
            StreamKind::VideoFrames => match s.frames.get(&d.name) {
                None => out.push(
                    Violation::error(field, "stream-data-missing", "every described stream has data").on(&d.name),
                ),
                Some(log) => {
                    if log.is_empty() {
                        out.push(Violation::error(field.clone(), "frame-log-empty", "N_c >= 1").on(&d.name));
                    }
                    if log.frame_numbers.len() != log.timestamps.len() {
                        out.push(
                            Violation::error(
                                field.clone(),
                                "shape-mismatch",
                                "one frame number per frame timestamp",
                            )
                            .on(&d.name),
                        );
                    }
                    check_timestamps(&field, &d.name, &log.timestamps, &mut out);
                }
            },
            StreamKind::Audio => match s.audio.get(&d.name) {
                None => out.push(
                    Violation::error(field, "stream-data-missing", "every described stream has data").on(&d.name),
                ),
                Some(track) => {
                    if f64::from(track.meta.sample_rate) != d.nominal_rate {
                        out.push(
                            Violation::error(
                                field.clone(),
                                "audio-rate-mismatch",
                                "WAV sample rate equals the descriptor's nominal_rate",
                            )
                            .on(&d.name),
                        );
                    }
                    if track.meta.bit_depth != AudioMeta::CONFORMANT_BIT_DEPTH {
                        out.push(
                            Violation::warning(field, "audio-bit-depth-nonconformant", "audio has 16-bit resolution")
                                .on(&d.name),
                        );
                    }
                }
            },
        }
    }
    let described = |name: &str| s.manifest.streams.iter().any(|d| d.name == name);
    for name in s
        .numeric
        .keys()
        .chain(s.frames.keys())
        .chain(s.audio.keys())
        .filter(|n| !described(n))
    {
        out.push(
            Violation::error("streams", "stream-undescribed", "every stream with data has a descriptor").on(name),
        );
    }
    if let Some(d) = &s.dialogue {
        if d.trial_id != s.manifest.session_id {
            out.push(Violation::error(
                "dialogue.trial_id",
                "dialogue-trial-mismatch",
                "dialogue trial_id equals session_id",
            ));
        }
        if let Err(e) = d.validate() {
            log::debug!("dialogue invalid: {e}");
            out.push(Violation::error(
                "dialogue",
                "dialogue-schema",
                "dialogue satisfies the annotation schema",
            ));
        }
    }
    out
}

fn check_timestamps(field: &str, stream: &str, ts: &[f64], out: &mut Vec<Violation>) {
    if ts.iter().any(|t| !t.is_finite()) {
        out.push(
            Violation::error(
                format!("{field}.timestamps"),
                "timestamps-not-finite",
                "no NaN/Inf in timestamps",
            )
            .on(stream),
        );
    } else if !strictly_increasing(ts) {
        out.push(
            Violation::error(
                format!("{field}.timestamps"),
                "timestamps-not-increasing",
                "timestamps strictly increasing",
            )
            .on(stream),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::model::{ChannelDescriptor, FailureFlag};
    use crate::task::Task;
    use chrono::TimeZone;

    fn feeding_manifest() -> SessionManifest {
        SessionManifest {
            session_id: "p01-feeding-01".into(),
            participant_id: "p01".into(),
            task: Task::Feeding,
            success: None,
            flags: vec![],
            created_at: chrono::Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap(),
            streams: vec![
                StreamDescriptor::video("ego", 12.0),
                StreamDescriptor::video("wrist", 15.0),
                StreamDescriptor::numeric(
                    "ee_pose",
                    100.0,
                    vec![
                        ChannelDescriptor::new("ee_x", "m"),
                        ChannelDescriptor::new("ee_y", "m"),
                        ChannelDescriptor::new("ee_z", "m"),
                    ],
                ),
                StreamDescriptor::audio("mic", 48_000),
            ],
            notes: String::new(),
        }
    }

    #[test]
    fn conformant_manifest_has_no_violations() {
        assert_eq!(validate_manifest(&feeding_manifest()), vec![]);
    }

    #[test]
    fn unknown_task_is_reported() {
        let mut m = feeding_manifest();
        m.task = "Walking".parse().unwrap();
        let v = validate_manifest(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "task-not-in-taxonomy");
    }

    #[test]
    fn cd_quality_audio_is_a_warning() {
        let mut m = feeding_manifest();
        m.streams[3] = StreamDescriptor::audio("mic", 44_100);
        let v = validate_manifest(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "audio-rate-nonconformant");
        assert_eq!(v[0].severity, Severity::Warning);
    }

    /// Each single-field corruption must be caught, and by the intended rule.
    #[test]
    fn every_manifest_invariant_is_detected() {
        type Mutation = (&'static str, fn(&mut SessionManifest));
        let mutations: Vec<Mutation> = vec![
            ("session-id-empty", |m| m.session_id.clear()),
            ("task-not-in-taxonomy", |m| m.task = Task::Other("Walking".into())),
            ("success-contradicts-flags", |m| {
                m.success = Some(true);
                m.flags = vec![FailureFlag::ObjectDrop];
            }),
            ("stream-name-empty", |m| m.streams[2].name.clear()),
            ("stream-name-duplicate", |m| m.streams[1].name = "ego".into()),
            ("nominal-rate-invalid", |m| m.streams[0].nominal_rate = 0.0),
            ("nominal-rate-invalid", |m| m.streams[2].nominal_rate = f64::NAN),
            ("file-path-invalid", |m| m.streams[2].file = "../outside.csv".into()),
            ("file-path-invalid", |m| m.streams[2].file = "/abs/path.csv".into()),
            ("video-channel-count", |m| {
                m.streams[0].channels.push(ChannelDescriptor::new("extra", "1"))
            }),
            ("numeric-channel-count", |m| m.streams[2].channels.clear()),
            ("channel-unit-empty", |m| m.streams[2].channels[0].unit = " ".into()),
            ("channel-name-invalid", |m| m.streams[2].channels[1].name = "a,b".into()),
            ("channel-name-duplicate", |m| m.streams[2].channels[1].name = "ee_x".into()),
            ("audio-rate-nonconformant", |m| m.streams[3].nominal_rate = 16_000.0),
            ("audio-channels-nonconformant", |m| {
                m.streams[3].channels.push(ChannelDescriptor::new("right", "1"))
            }),
        ];
        for (code, mutate) in mutations {
            let mut m = feeding_manifest();
            mutate(&mut m);
            let v = validate_manifest(&m);
            assert!(
                v.iter().any(|x| x.code == code),
                "mutation for {code} not detected: {v:?}"
            );
        }
    }
}
