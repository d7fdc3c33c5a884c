//! On-disk session container.
//!
//! ```text
//! <root>/
//!   manifest.json
//!   streams/<name>.csv            t,<ch1>,<ch2>,...   (17 significant digits)
//!   video/<name>.timestamps.csv   t,frame
//!   audio/<name>.wav              RIFF PCM
//!   dialogue.jsonl                at most one record (optional)
//! ```
//!
//! Paths are whatever the stream descriptors say; the layout above is what
//! the constructors in [`StreamDescriptor`](super::StreamDescriptor) produce.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::error::SessionError;
use super::model::{
    AudioEncoding, AudioMeta, AudioTrack, FrameTimestampLog, RawSession, SessionManifest, StreamDescriptor,
    StreamKind, TimedSeries,
};
use super::validate::{validate_manifest, validate_session, Violation};
use crate::dialogue::{self, AnnotatedDialogue};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIALOGUE_FILE: &str = "dialogue.jsonl";

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn first_error(violations: Vec<Violation>) -> Result<(), SessionError> {
    match violations.into_iter().find(Violation::is_error) {
        Some(v) => Err(SessionError::from(v)),
        None => Ok(()),
    }
}

pub fn read_manifest(root: &Path) -> Result<SessionManifest, SessionError> {
    let path = root.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(SessionError::MissingFile { path });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| SessionError::MalformedManifest {
        path,
        reason: e.to_string(),
    })
}

pub fn write_manifest(root: &Path, manifest: &SessionManifest) -> Result<(), SessionError> {
    let path = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

fn malformed(path: &Path, reason: impl Into<String>) -> SessionError {
    SessionError::MalformedData {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_f64(path: &Path, row: usize, field: &str) -> Result<f64, SessionError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| malformed(path, format!("row {row}: '{field}' is not a number")))
}

/// Reads a `t,<ch...>` table and checks its header against `expected`.
fn read_table(path: &Path, expected: &[&str]) -> Result<(Vec<f64>, Vec<Vec<f64>>), SessionError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| malformed(path, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let want: Vec<&str> = std::iter::once("t").chain(expected.iter().copied()).collect();
    if header != want {
        return Err(malformed(
            path,
            format!("header {header:?} does not match expected {want:?}"),
        ));
    }
    let mut ts = Vec::new();
    let mut cols = vec![Vec::new(); expected.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        ts.push(parse_f64(path, i, &rec[0])?);
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse_f64(path, i, &rec[c + 1])?);
        }
    }
    Ok((ts, cols))
}

fn write_table(path: &Path, names: &[&str], ts: &[f64], cols: &[Vec<String>]) -> Result<(), SessionError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| SessionError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut header = vec!["t"];
    header.extend_from_slice(names);
    w.write_record(&header).map_err(to_err)?;
    let mut row = Vec::with_capacity(names.len() + 1);
    for (i, t) in ts.iter().enumerate() {
        row.clear();
        row.push(format_f64(*t));
        row.extend(cols.iter().map(|c| c[i].clone()));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn resolve(root: &Path, rel: &str) -> Result<PathBuf, SessionError> {
    let path = root.join(rel);
    if path.is_file() {
        Ok(path)
    } else {
        Err(SessionError::MissingFile { path })
    }
}

fn read_numeric(root: &Path, d: &StreamDescriptor) -> Result<TimedSeries, SessionError> {
    let path = resolve(root, &d.file)?;
    let names: Vec<&str> = d.channels.iter().map(|c| c.name.as_str()).collect();
    let (ts, cols) = read_table(&path, &names)?;
    Ok(TimedSeries::new(ts, d.channels.clone(), cols))
}

fn read_frames(root: &Path, d: &StreamDescriptor) -> Result<FrameTimestampLog, SessionError> {
    let path = resolve(root, &d.file)?;
    let (ts, cols) = read_table(&path, &[d.channels[0].name.as_str()])?;
    let frame_numbers = cols[0]
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(53) {
                Ok(f as u64)
            } else {
                Err(malformed(&path, format!("row {i}: frame number {f} is not a non-negative integer")))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(FrameTimestampLog {
        stream: d.name.clone(),
        timestamps: ts,
        frame_numbers,
    })
}

pub fn read_wav(path: &Path, rel: &str) -> Result<AudioTrack, SessionError> {
    let reader = hound::WavReader::open(path).map_err(|e| malformed(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(malformed(path, "only 16-bit integer PCM is supported"));
    }
    let samples = reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| malformed(path, e.to_string()))?;
    Ok(AudioTrack {
        meta: AudioMeta {
            sample_rate: spec.sample_rate,
            bit_depth: spec.bits_per_sample,
            channels: spec.channels,
            encoding: AudioEncoding::Pcm,
            file: rel.to_owned(),
        },
        samples,
    })
}

pub fn write_wav(path: &Path, track: &AudioTrack) -> Result<(), SessionError> {
    let spec = hound::WavSpec {
        channels: track.meta.channels,
        sample_rate: track.meta.sample_rate,
        bits_per_sample: track.meta.bit_depth,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => SessionError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => malformed(path, other.to_string()),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    {
        let mut w16 = w.get_i16_writer(track.samples.len() as u32);
        for s in &track.samples {
            w16.write_sample(*s);
        }
        w16.flush().map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

/// Loads and validates a session directory.
pub fn load_session(root: impl AsRef<Path>) -> Result<RawSession, SessionError> {
    let root = root.as_ref();
    let manifest = read_manifest(root)?;
    first_error(validate_manifest(&manifest))?;

    let mut session = RawSession::new(manifest);
    for d in &session.manifest.streams {
        match d.kind {
            StreamKind::Numeric => {
                let s = read_numeric(root, d)?;
                session.numeric.insert(d.name.clone(), s);
            }
            StreamKind::VideoFrames => {
                let f = read_frames(root, d)?;
                session.frames.insert(d.name.clone(), f);
            }
            StreamKind::Audio => {
                let path = resolve(root, &d.file)?;
                let a = read_wav(&path, &d.file)?;
                session.audio.insert(d.name.clone(), a);
            }
        }
    }
    let dpath = root.join(DIALOGUE_FILE);
    if dpath.is_file() {
        let bytes = fs::read(&dpath).map_err(io_err(&dpath))?;
        let mut records: Vec<AnnotatedDialogue> =
            dialogue::import_jsonl(&bytes).map_err(|e| malformed(&dpath, e.to_string()))?;
        match records.len() {
            0 => {}
            1 => session.dialogue = records.pop(),
            n => return Err(malformed(&dpath, format!("expected one dialogue record, found {n}"))),
        }
    }
    first_error(validate_session(&session))?;
    Ok(session)
}

/// Writes a session directory. Fails without touching the disk if the
/// session breaks any invariant.
pub fn save_session(session: &RawSession, root: impl AsRef<Path>) -> Result<(), SessionError> {
    let root = root.as_ref();
    first_error(validate_session(session))?;
    fs::create_dir_all(root).map_err(io_err(root))?;

    for d in &session.manifest.streams {
        let path = root.join(&d.file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        match d.kind {
            StreamKind::Numeric => {
                let s = &session.numeric[&d.name];
                let names: Vec<&str> = s.channels.iter().map(|c| c.name.as_str()).collect();
                let cols: Vec<Vec<String>> = s
                    .columns
                    .iter()
                    .map(|c| c.iter().map(|v| format_f64(*v)).collect())
                    .collect();
                write_table(&path, &names, &s.timestamps, &cols)?;
            }
            StreamKind::VideoFrames => {
                let f = &session.frames[&d.name];
                let col: Vec<String> = f.frame_numbers.iter().map(u64::to_string).collect();
                write_table(&path, &[d.channels[0].name.as_str()], &f.timestamps, &[col])?;
            }
            StreamKind::Audio => write_wav(&path, &session.audio[&d.name])?,
        }
    }

    let dpath = root.join(DIALOGUE_FILE);
    match &session.dialogue {
        Some(d) => {
            let bytes = dialogue::export_jsonl(std::slice::from_ref(d))
                .map_err(|e| malformed(&dpath, e.to_string()))?;
            let mut f = fs::File::create(&dpath).map_err(io_err(&dpath))?;
            f.write_all(&bytes).map_err(io_err(&dpath))?;
        }
        None if dpath.exists() => fs::remove_file(&dpath).map_err(io_err(&dpath))?,
        None => {}
    }
    write_manifest(root, &session.manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::model::ChannelDescriptor;
    use crate::task::Task;
    use chrono::TimeZone;

    fn tiny_session() -> RawSession {
        let manifest = SessionManifest {
            session_id: "s1".into(),
            participant_id: "p1".into(),
            task: Task::Drinking,
            success: Some(true),
            flags: vec![],
            created_at: chrono::Utc.with_ymd_and_hms(2025, 1, 2, 3, 4, 5).unwrap(),
            streams: vec![
                StreamDescriptor::video("ego", 12.0),
                StreamDescriptor::numeric(
                    "imu",
                    100.0,
                    vec![ChannelDescriptor::new("imu_ax", "m/s^2"), ChannelDescriptor::new("imu_ay", "m/s^2")],
                ),
            ],
            notes: "tiny".into(),
        };
        let mut s = RawSession::new(manifest);
        s.frames
            .insert("ego".into(), FrameTimestampLog::new("ego", vec![0.0, 1.0 / 12.0, 2.0 / 12.0]));
        s.numeric.insert(
            "imu".into(),
            TimedSeries::new(
                vec![0.0, 0.01, 0.02],
                s.manifest.streams[1].channels.clone(),
                vec![vec![0.1, f64::NAN, 1.0 / 3.0], vec![-9.81, 1e-300, 2.5]],
            ),
        );
        s
    }

    #[test]
    fn format_round_trips_awkward_values() {
        for x in [0.1, 1.0 / 3.0, -2.5e-310, f64::MAX, f64::MIN_POSITIVE, 123456789.123456789] {
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert!(format_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn round_trip_preserves_bits_and_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_session();
        save_session(&s, dir.path()).unwrap();
        let back = load_session(dir.path()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn absent_csv_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        save_session(&tiny_session(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("streams/imu.csv")).unwrap();
        assert!(matches!(load_session(dir.path()), Err(SessionError::MissingFile { .. })));
    }

    #[test]
    fn missing_manifest_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_session(dir.path()), Err(SessionError::MissingFile { .. })));
    }

    #[test]
    fn non_monotonic_timestamps_are_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        save_session(&tiny_session(), dir.path()).unwrap();
        let p = dir.path().join("streams/imu.csv");
        let text = fs::read_to_string(&p).unwrap().replacen("1.0000000000000000e-2", "5.0000000000000000e-2", 1);
        fs::write(&p, text).unwrap();
        match load_session(dir.path()) {
            Err(SessionError::InvariantViolation { rule, stream, .. }) => {
                assert_eq!(rule, "timestamps strictly increasing");
                assert_eq!(stream.as_deref(), Some("imu"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_manifest_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "{ not json").unwrap();
        assert!(matches!(
            load_session(dir.path()),
            Err(SessionError::MalformedManifest { .. })
        ));
    }

    #[test]
    fn empty_session_id_is_refused_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = tiny_session();
        s.manifest.session_id.clear();
        let err = save_session(&s, dir.path().join("out")).unwrap_err();
        assert!(matches!(err, SessionError::InvariantViolation { .. }));
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn unwritable_destination_is_io_error() {
        // Permission bits do not stop root, so block the path with a regular file.
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("blocker");
        fs::write(&blocker, b"").unwrap();
        let err = save_session(&tiny_session(), blocker.join("session")).unwrap_err();
        assert!(matches!(err, SessionError::Io { .. }), "{err:?}");
    }
}
