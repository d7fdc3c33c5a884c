use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::dialogue::template_dialogue;
use super::profile::{Profile, ProfileKind};
use super::rng::SplitMix64;
use super::SynthError;
use crate::session::{
    AudioMeta, AudioTrack, ChannelDescriptor, FrameTimestampLog, RawSession, SessionManifest, StreamDescriptor,
    TimedSeries,
};
use crate::task::Task;
use crate::transport::AudioDatagram;

pub const WHEEL_RADIUS: f64 = 0.17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// A sum of sinusoids with random frequencies in 25 %..35 % of the
    /// sample rate (25-35 Hz at 100 Hz) and random phases, scaled to the
    /// requested RMS. Models vibration and quantization well above the
    /// motion band.
    HighFrequency,
    /// Independent Gaussian samples.
    White,
}

pub const NOISE_TONES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub seed: u64,
    pub session_id: String,
    pub participant_id: String,
    pub task: Task,
    /// s
    pub duration: f64,
    /// End-effector position, 3 axes, m.
    pub ee_profile: Profile,
    /// Wheelchair planar position, 2 axes, m.
    pub wheelchair_profile: Profile,
    /// Hz; the first stream is named `ego`, the second `wrist`.
    pub video_rates: Vec<f64>,
    /// Hz, for every numeric stream.
    pub numeric_rate: f64,
    /// Seconds of numeric data recorded before the first and after the last
    /// camera frame. Robot state is streamed continuously while cameras
    /// cover the trial, so filter start-up transients fall outside the
    /// synchronized window.
    pub numeric_margin: f64,
    /// Standard deviation of frame timestamp jitter, s.
    pub timestamp_jitter_sd: f64,
    /// RMS noise on position channels (m).
    pub noise_sd: f64,
    /// Per-channel RMS noise, overriding `noise_sd`.
    pub channel_noise_sd: BTreeMap<String, f64>,
    pub noise_model: NoiseModel,
    pub imu: bool,
    pub audio: bool,
    /// Hz
    pub audio_rate: u32,
    /// Samples per UDP datagram.
    pub audio_chunk: usize,
    pub udp_loss_rate: f64,
    pub dialogue: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 0,
            session_id: "synth-000".into(),
            participant_id: "P01".into(),
            task: Task::Feeding,
            duration: 8.0,
            ee_profile: Profile::min_jerk(vec![0.40, -0.10, 0.90], vec![0.55, 0.20, 1.05], 2.0, 4.0),
            wheelchair_profile: Profile::min_jerk(vec![0.0, 0.0], vec![0.6, 0.2], 1.5, 5.0),
            video_rates: vec![12.0, 15.0],
            numeric_rate: 100.0,
            numeric_margin: 1.0,
            timestamp_jitter_sd: 0.0,
            noise_sd: 0.0,
            channel_noise_sd: BTreeMap::new(),
            noise_model: NoiseModel::HighFrequency,
            imu: false,
            audio: true,
            audio_rate: AudioMeta::CONFORMANT_RATE,
            audio_chunk: 960,
            udp_loss_rate: 0.0,
            dialogue: true,
        }
    }
}

impl Scenario {
    pub fn check(&self) -> Result<(), SynthError> {
        let bad = |what: String| Err(SynthError::InvalidScenario(what));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.video_rates.is_empty() || self.video_rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("video rates must be positive and non-empty".into());
        }
        if !(self.numeric_rate > 0.0 && self.numeric_rate.is_finite()) {
            return bad(format!("numeric rate must be positive, got {}", self.numeric_rate));
        }
        if !(0.0..1.0).contains(&self.udp_loss_rate) {
            return bad(format!("loss rate must lie in [0, 1), got {}", self.udp_loss_rate));
        }
        if !(self.timestamp_jitter_sd >= 0.0 && self.noise_sd >= 0.0 && self.numeric_margin >= 0.0) {
            return bad("jitter, noise and margin must be non-negative".into());
        }
        if self.ee_profile.dims() != 3 || self.ee_profile.pf.len() != 3 {
            return bad("end-effector profile needs 3 axes".into());
        }
        if self.wheelchair_profile.dims() != 2 || self.wheelchair_profile.pf.len() != 2 {
            return bad("wheelchair profile needs 2 axes".into());
        }
        for p in [&self.ee_profile, &self.wheelchair_profile] {
            if !(p.t_move > 0.0) || p.t_start < 0.0 || p.t_end() > self.duration {
                return bad("profile motion must lie inside the session".into());
            }
        }
        if self.audio && (self.audio_rate == 0 || self.audio_chunk == 0) {
            return bad("audio rate and chunk must be positive".into());
        }
        Ok(())
    }

    pub fn video_stream_name(i: usize) -> String {
        match i {
            0 => "ego".into(),
            1 => "wrist".into(),
            _ => format!("cam{i}"),
        }
    }

    fn noise_for(&self, channel: &str) -> f64 {
        self.channel_noise_sd.get(channel).copied().unwrap_or(match channel {
            "ee_x" | "ee_y" | "ee_z" | "wc_x" | "wc_y" => self.noise_sd,
            _ => 0.0,
        })
    }
}

/// Exact values the pipeline should recover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub session_id: String,
    pub task: Task,
    /// s
    pub duration: f64,
    /// m
    pub ee_path_length: f64,
    /// Mean of the continuous jerk magnitude over the session, m/s^3.
    pub ee_mean_jerk: f64,
    pub wheelchair_path_length: f64,
    pub wheelchair_mean_jerk: f64,
}

impl GroundTruth {
    fn of(s: &Scenario) -> Self {
        Self {
            session_id: s.session_id.clone(),
            task: s.task.clone(),
            duration: s.duration,
            ee_path_length: s.ee_profile.path_length(),
            ee_mean_jerk: s.ee_profile.jerk_integral() / s.duration,
            wheelchair_path_length: s.wheelchair_profile.path_length(),
            wheelchair_mean_jerk: s.wheelchair_profile.jerk_integral() / s.duration,
        }
    }
}

/// Samples of one profile with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub timestamps: Vec<f64>,
    /// One column per axis.
    pub positions: Vec<Vec<f64>>,
    pub mean_jerk: f64,
    pub path_length: f64,
    pub duration: f64,
}

/// Min-jerk motion from `p0` to `pf` over `[0, t]`, sampled at `k / fs`.
pub fn gen_min_jerk_trajectory(p0: &[f64], pf: &[f64], t: f64, fs: f64) -> Result<Trajectory, SynthError> {
    if !(t > 0.0 && fs > 0.0 && t.is_finite() && fs.is_finite()) || p0.len() != pf.len() {
        return Err(SynthError::InvalidScenario(format!("need T > 0, fs > 0 and matching endpoints (T={t}, fs={fs})")));
    }
    let profile = Profile::min_jerk(p0.to_vec(), pf.to_vec(), 0.0, t);
    let timestamps = sample_times(t, fs);
    let mut positions = vec![Vec::with_capacity(timestamps.len()); p0.len()];
    for &ts in &timestamps {
        for (col, v) in positions.iter_mut().zip(profile.position(ts)) {
            col.push(v);
        }
    }
    Ok(Trajectory {
        timestamps,
        positions,
        mean_jerk: profile.jerk_integral() / t,
        path_length: profile.path_length(),
        duration: t,
    })
}

/// `k / fs` for `k = 0..=floor(duration fs)`, guarding against `k / fs` landing just past the end.
fn sample_times(duration: f64, fs: f64) -> Vec<f64> {
    let mut n = (duration * fs).floor() as usize;
    while n > 0 && n as f64 / fs > duration {
        n -= 1;
    }
    while (n + 1) as f64 / fs <= duration {
        n += 1;
    }
    (0..=n).map(|k| k as f64 / fs).collect()
}

/// Additive noise for one channel.
fn noise(model: NoiseModel, sd: f64, times: &[f64], fs: f64, rng: &mut SplitMix64) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; times.len()];
    }
    match model {
        NoiseModel::White => times.iter().map(|_| sd * rng.normal()).collect(),
        NoiseModel::HighFrequency => {
            let amp = sd * (2.0 / NOISE_TONES as f64).sqrt();
            let tones: Vec<(f64, f64)> = (0..NOISE_TONES)
                .map(|_| (rng.uniform(0.25 * fs, 0.35 * fs), rng.uniform(0.0, TAU)))
                .collect();
            times
                .iter()
                .map(|&t| tones.iter().map(|(f, ph)| amp * (TAU * f * t + ph).sin()).sum())
                .collect()
        }
    }
}

/// Output of [`gen_session`].
#[derive(Debug, Clone)]
pub struct SynthSession {
    pub session: RawSession,
    pub truth: GroundTruth,
    /// The audio track cut into datagrams with the scenario's loss applied.
    pub datagrams: Vec<AudioDatagram>,
    pub lost_sequences: Vec<u32>,
}

/// Builds a session from a scenario. The same scenario always gives the
/// same session, bit for bit.
pub fn gen_session(sc: &Scenario) -> Result<SynthSession, SynthError> {
    sc.check()?;
    let mut jitter_rng = SplitMix64::fork(sc.seed, "jitter");
    let mut noise_rng = SplitMix64::fork(sc.seed, "noise");
    let mut audio_rng = SplitMix64::fork(sc.seed, "audio");
    let mut loss_rng = SplitMix64::fork(sc.seed, "loss");

    let mut streams = Vec::new();
    let mut frames = BTreeMap::new();
    for (i, &rate) in sc.video_rates.iter().enumerate() {
        let name = Scenario::video_stream_name(i);
        let mut ts: Vec<f64> = sample_times(sc.duration, rate)
            .into_iter()
            .map(|t| t + sc.timestamp_jitter_sd * jitter_rng.normal())
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        frames.insert(name.clone(), FrameTimestampLog::new(name.clone(), ts));
        streams.push(StreamDescriptor::video(&name, rate));
    }

    let times: Vec<f64> = sample_times(sc.duration + 2.0 * sc.numeric_margin, sc.numeric_rate)
        .into_iter()
        .map(|t| t - sc.numeric_margin)
        .collect();
    let mut numeric = BTreeMap::new();
    let mut add_numeric = |name: &str, cols: Vec<(ChannelDescriptor, Vec<f64>)>, rng: &mut SplitMix64| {
        let (channels, columns): (Vec<_>, Vec<_>) = cols
            .into_iter()
            .map(|(c, clean)| {
                let n = noise(sc.noise_model, sc.noise_for(&c.name), &times, sc.numeric_rate, rng);
                let v = clean.iter().zip(&n).map(|(a, b)| a + b).collect();
                (c, v)
            })
            .unzip();
        streams.push(StreamDescriptor::numeric(name, sc.numeric_rate, channels.clone()));
        numeric.insert(name.to_owned(), TimedSeries::new(times.clone(), channels, columns));
    };

    let column = |f: &dyn Fn(f64) -> f64| times.iter().map(|&t| f(t)).collect::<Vec<f64>>();
    let ee = &sc.ee_profile;
    let (ee_x, ee_y, ee_z) = (
        column(&|t| ee.position(t)[0]),
        column(&|t| ee.position(t)[1]),
        column(&|t| ee.position(t)[2]),
    );
    // the gripper yaws by up to 0.4 rad with the same timing as the reach
    let yaw = |t: f64| {
        if ee.kind == ProfileKind::Stationary {
            return 0.0;
        }
        let s = ((t - ee.t_start) / ee.t_move).clamp(0.0, 1.0);
        0.4 * s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    };
    let m = |n: &str| ChannelDescriptor::new(n, "m");
    let one = |n: &str| ChannelDescriptor::new(n, "1");
    add_numeric(
        "ee_pose",
        vec![
            (m("ee_x"), ee_x),
            (m("ee_y"), ee_y),
            (m("ee_z"), ee_z),
            (one("ee_qx"), column(&|_| 0.0)),
            (one("ee_qy"), column(&|_| 0.0)),
            (one("ee_qz"), column(&|t| (yaw(t) / 2.0).sin())),
            (one("ee_qw"), column(&|t| (yaw(t) / 2.0).cos())),
        ],
        &mut noise_rng,
    );

    let wc = &sc.wheelchair_profile;
    let heading = {
        let (dx, dy) = (wc.pf[0] - wc.p0[0], wc.pf[1] - wc.p0[1]);
        if dx == 0.0 && dy == 0.0 {
            0.0
        } else {
            dy.atan2(dx)
        }
    };
    let speed = |t: f64| {
        let v = wc.velocity(t);
        v[0].hypot(v[1]) / WHEEL_RADIUS
    };
    add_numeric(
        "wheelchair",
        vec![
            (m("wc_x"), column(&|t| wc.position(t)[0])),
            (m("wc_y"), column(&|t| wc.position(t)[1])),
            (ChannelDescriptor::new("wc_yaw", "rad"), column(&|_| heading)),
            (ChannelDescriptor::new("wheel_left", "rad/s"), column(&speed)),
            (ChannelDescriptor::new("wheel_right", "rad/s"), column(&speed)),
        ],
        &mut noise_rng,
    );

    if sc.imu {
        let acc = |i: usize| move |t: f64| ee.acceleration(t)[i];
        let ms2 = |n: &str| ChannelDescriptor::new(n, "m/s^2");
        add_numeric(
            "imu",
            vec![
                (ms2("imu_ax"), column(&acc(0))),
                (ms2("imu_ay"), column(&acc(1))),
                (ms2("imu_az"), column(&|t| acc(2)(t) + 9.81)),
            ],
            &mut noise_rng,
        );
    }

    // shift so the earliest timestamp is 0
    let t0 = frames
        .values()
        .filter_map(|l| l.timestamps.first().copied())
        .chain(times.first().copied())
        .fold(f64::INFINITY, f64::min);
    if t0 != 0.0 {
        for l in frames.values_mut() {
            l.timestamps.iter_mut().for_each(|t| *t -= t0);
        }
        for s in numeric.values_mut() {
            s.timestamps.iter_mut().for_each(|t| *t -= t0);
        }
    }

    let mut datagrams = Vec::new();
    let mut lost_sequences = Vec::new();
    let mut audio = BTreeMap::new();
    if sc.audio {
        let n = (sc.duration * f64::from(sc.audio_rate)).round() as usize;
        let f0 = 180.0 + 40.0 * audio_rng.next_f64();
        let samples: Vec<i16> = (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(sc.audio_rate);
                let v = 0.2 * (TAU * f0 * t).sin() * (0.5 + 0.5 * (PI * t).sin().abs()) + 0.01 * audio_rng.normal();
                (v.clamp(-1.0, 1.0) * f64::from(i16::MAX)).round() as i16
            })
            .collect();
        for (seq, chunk) in samples.chunks(sc.audio_chunk).enumerate() {
            if loss_rng.next_f64() < sc.udp_loss_rate {
                lost_sequences.push(seq as u32);
                continue;
            }
            datagrams.push(AudioDatagram {
                sequence: seq as u32,
                timestamp: (seq * sc.audio_chunk) as f64 / f64::from(sc.audio_rate) - t0,
                pcm: chunk.to_vec(),
            });
        }
        let desc = StreamDescriptor::audio("mic", sc.audio_rate);
        audio.insert(
            "mic".to_owned(),
            AudioTrack {
                meta: AudioMeta::pcm16_mono(sc.audio_rate, desc.file.clone()),
                samples,
            },
        );
        streams.push(desc);
    }

    let manifest = SessionManifest {
        session_id: sc.session_id.clone(),
        participant_id: sc.participant_id.clone(),
        task: sc.task.clone(),
        success: None,
        flags: Vec::new(),
        created_at: created_at(sc.seed),
        streams,
        notes: format!("synthetic, seed {}", sc.seed),
    };
    let mut session = RawSession::new(manifest);
    session.numeric = numeric;
    session.frames = frames;
    session.audio = audio;
    if sc.dialogue {
        let mut d = template_dialogue(&sc.session_id, &sc.task, sc.duration, sc.seed);
        for u in &mut d.turns {
            u.t_start -= t0;
            u.t_end -= t0;
        }
        session.dialogue = Some(d);
    }
    Ok(SynthSession {
        session,
        truth: GroundTruth::of(sc),
        datagrams,
        lost_sequences,
    })
}

/// A fixed date in 2024 plus a seed-dependent offset, so manifests are reproducible.
fn created_at(seed: u64) -> DateTime<Utc> {
    let base = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    base + chrono::Duration::seconds((seed % (365 * 86_400)) as i64)
}
