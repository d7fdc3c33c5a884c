use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dialogue::AnnotatedDialogue;
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamKind {
    VideoFrames,
    Numeric,
    Audio,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelDescriptor {
    pub name: String,
    /// SI unit string, "1" for dimensionless.
    pub unit: String,
}

impl ChannelDescriptor {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDescriptor {
    pub name: String,
    pub kind: StreamKind,
    /// Hz.
    pub nominal_rate: f64,
    pub channels: Vec<ChannelDescriptor>,
    /// Path of the data file relative to the session root.
    pub file: String,
    /// Opaque reference to encoded video for `VideoFrames` streams. Never opened.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

impl StreamDescriptor {
    pub fn numeric(name: &str, nominal_rate: f64, channels: Vec<ChannelDescriptor>) -> Self {
        Self {
            name: name.to_owned(),
            kind: StreamKind::Numeric,
            nominal_rate,
            channels,
            file: format!("streams/{name}.csv"),
            media: None,
        }
    }

    pub fn video(name: &str, nominal_rate: f64) -> Self {
        Self {
            name: name.to_owned(),
            kind: StreamKind::VideoFrames,
            nominal_rate,
            channels: vec![ChannelDescriptor::new("frame", "1")],
            file: format!("video/{name}.timestamps.csv"),
            media: Some(format!("video/{name}.avi")),
        }
    }

    pub fn audio(name: &str, sample_rate: u32) -> Self {
        Self {
            name: name.to_owned(),
            kind: StreamKind::Audio,
            nominal_rate: f64::from(sample_rate),
            channels: vec![ChannelDescriptor::new("pcm", "1")],
            file: format!("audio/{name}.wav"),
            media: None,
        }
    }
}

/// Reason a trial is not counted as successful.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FailureFlag {
    ObjectDrop,
    ItemFell,
    EnvironmentCollision,
    InappropriateForce,
    Other(String),
}

impl std::str::FromStr for FailureFlag {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match key.as_str() {
            "objectdrop" => FailureFlag::ObjectDrop,
            "itemfell" => FailureFlag::ItemFell,
            "environmentcollision" | "collision" => FailureFlag::EnvironmentCollision,
            "inappropriateforce" => FailureFlag::InappropriateForce,
            _ => FailureFlag::Other(s.to_owned()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub participant_id: String,
    pub task: Task,
    /// `None` until the trial has been labeled.
    pub success: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<FailureFlag>,
    pub created_at: DateTime<Utc>,
    pub streams: Vec<StreamDescriptor>,
    #[serde(default)]
    pub notes: String,
}

impl SessionManifest {
    pub fn stream(&self, name: &str) -> Option<&StreamDescriptor> {
        self.streams.iter().find(|s| s.name == name)
    }
}

/// Timestamped samples of one numeric stream, stored column-wise.
///
/// NaN in a value column marks a sensor gap. Equality compares float bit
/// patterns so that gap markers compare equal after a round trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimedSeries {
    pub timestamps: Vec<f64>,
    pub channels: Vec<ChannelDescriptor>,
    pub columns: Vec<Vec<f64>>,
}

impl TimedSeries {
    pub fn new(timestamps: Vec<f64>, channels: Vec<ChannelDescriptor>, columns: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(channels.len(), columns.len());
        Self {
            timestamps,
            channels,
            columns,
        }
    }

    pub fn empty(channels: Vec<ChannelDescriptor>) -> Self {
        let columns = vec![Vec::new(); channels.len()];
        Self::new(Vec::new(), channels, columns)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.channel_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn push_row(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.timestamps.push(t);
        for (col, v) in self.columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn first_time(&self) -> Option<f64> {
        self.timestamps.first().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.timestamps.last().copied()
    }
}

impl PartialEq for TimedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.channels == other.channels
            && bits_eq(&self.timestamps, &other.timestamps)
            && self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| bits_eq(a, b))
    }
}

pub(crate) fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Capture times of the frames of one video stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameTimestampLog {
    pub stream: String,
    pub timestamps: Vec<f64>,
    /// Source frame number of each entry; normally `0..N`.
    pub frame_numbers: Vec<u64>,
}

impl FrameTimestampLog {
    pub fn new(stream: impl Into<String>, timestamps: Vec<f64>) -> Self {
        let frame_numbers = (0..timestamps.len() as u64).collect();
        Self {
            stream: stream.into(),
            timestamps,
            frame_numbers,
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

impl PartialEq for FrameTimestampLog {
    fn eq(&self, other: &Self) -> bool {
        self.stream == other.stream
            && self.frame_numbers == other.frame_numbers
            && bits_eq(&self.timestamps, &other.timestamps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AudioEncoding {
    Pcm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioMeta {
    pub sample_rate: u32,
    pub bit_depth: u16,
    pub channels: u16,
    pub encoding: AudioEncoding,
    pub file: String,
}

impl AudioMeta {
    pub const CONFORMANT_RATE: u32 = 48_000;
    pub const CONFORMANT_BIT_DEPTH: u16 = 16;

    pub fn pcm16_mono(sample_rate: u32, file: impl Into<String>) -> Self {
        Self {
            sample_rate,
            bit_depth: 16,
            channels: 1,
            encoding: AudioEncoding::Pcm,
            file: file.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioTrack {
    pub meta: AudioMeta,
    /// Interleaved samples.
    pub samples: Vec<i16>,
}

/// One recorded trial, fully in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSession {
    pub manifest: SessionManifest,
    pub numeric: BTreeMap<String, TimedSeries>,
    pub frames: BTreeMap<String, FrameTimestampLog>,
    pub audio: BTreeMap<String, AudioTrack>,
    pub dialogue: Option<AnnotatedDialogue>,
}

impl RawSession {
    pub fn new(manifest: SessionManifest) -> Self {
        Self {
            manifest,
            numeric: BTreeMap::new(),
            frames: BTreeMap::new(),
            audio: BTreeMap::new(),
            dialogue: None,
        }
    }

    pub fn stream_count(&self) -> usize {
        self.manifest.streams.len()
    }
}
