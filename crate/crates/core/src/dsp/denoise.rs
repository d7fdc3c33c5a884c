use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{design_butterworth_lowpass, filtfilt, DspError};
use crate::session::{RawSession, StreamKind, TimedSeries};
use crate::sync::{channel_key, renormalize_quaternions, FilterRecord, FilterStage, SyncedSession};

/// Filter family a channel belongs to, derived from its name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelClass {
    /// `ee_*`
    EEPose,
    /// `joint_*`, `arm_*`
    ArmJoints,
    /// `wc_*`, `wheel_*`: wheelchair pose and wheel states
    WheelchairWheels,
    /// `imu_*`
    #[serde(rename = "IMU")]
    Imu,
}

pub fn classify_channel(name: &str) -> Option<ChannelClass> {
    let prefix = |p: &str| name.starts_with(p);
    if prefix("ee_") {
        Some(ChannelClass::EEPose)
    } else if prefix("joint_") || prefix("arm_") {
        Some(ChannelClass::ArmJoints)
    } else if prefix("wc_") || prefix("wheel_") {
        Some(ChannelClass::WheelchairWheels)
    } else if prefix("imu_") {
        Some(ChannelClass::Imu)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassFilter {
    pub order: usize,
    /// Hz.
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoisePolicy {
    #[serde(flatten)]
    pub classes: BTreeMap<ChannelClass, ClassFilter>,
    /// Unclassified channels are an error when set, passed through otherwise.
    #[serde(default = "default_strict")]
    pub strict: bool,
}

fn default_strict() -> bool {
    true
}

/// Cutoffs this close to Nyquist or above are clamped to this fraction of the sample rate.
pub const CLAMP_FRACTION: f64 = 0.45;

impl Default for DenoisePolicy {
    /// 4th order everywhere; 5 Hz for arm and wheelchair kinematics, 10 Hz for the IMU.
    fn default() -> Self {
        let kin = ClassFilter { order: 4, cutoff: 5.0 };
        Self {
            classes: BTreeMap::from([
                (ChannelClass::EEPose, kin),
                (ChannelClass::ArmJoints, kin),
                (ChannelClass::WheelchairWheels, kin),
                (ChannelClass::Imu, ClassFilter { order: 4, cutoff: 10.0 }),
            ]),
            strict: true,
        }
    }
}

impl DenoisePolicy {
    /// Parses `{"EEPose": {"order": 4, "cutoff": 5.0}, ..., "strict": true}`.
    pub fn from_json(text: &str) -> Result<Self, DspError> {
        let p: DenoisePolicy = serde_json::from_str(text).map_err(|e| DspError::Policy(e.to_string()))?;
        for (class, f) in &p.classes {
            if f.order == 0 || !(f.cutoff > 0.0 && f.cutoff.is_finite()) {
                return Err(DspError::Policy(format!("{class:?}: order must be >= 1 and cutoff > 0")));
            }
        }
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self, DspError> {
        let text = std::fs::read_to_string(path).map_err(|e| DspError::Policy(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn filter_for(&self, channel: &str) -> Option<(ChannelClass, ClassFilter)> {
        let class = classify_channel(channel)?;
        self.classes.get(&class).map(|f| (class, *f))
    }
}

/// Fills NaN gaps by linear interpolation in sample index (ends are held)
/// so a channel can go through an IIR filter; returns the gap positions.
fn fill_gaps(col: &mut [f64]) -> Vec<usize> {
    let gaps: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_nan()).collect();
    if gaps.is_empty() || gaps.len() == col.len() {
        return gaps;
    }
    let valid: Vec<usize> = (0..col.len()).filter(|&i| !col[i].is_nan()).collect();
    for &g in &gaps {
        let after = valid.partition_point(|&v| v < g);
        col[g] = match (after.checked_sub(1).map(|i| valid[i]), valid.get(after)) {
            (Some(a), Some(&b)) => col[a] + (col[b] - col[a]) * (g - a) as f64 / (b - a) as f64,
            (Some(a), None) => col[a],
            (None, Some(&b)) => col[b],
            (None, None) => unreachable!(),
        };
    }
    gaps
}

/// Filters one channel, clamping the cutoff below Nyquist if needed.
fn filter_channel(
    col: &[f64],
    filter: ClassFilter,
    sample_rate: f64,
    stage: FilterStage,
    label: &str,
) -> Result<(Vec<f64>, FilterRecord), DspError> {
    let mut cutoff = filter.cutoff;
    let clamped = cutoff >= sample_rate / 2.0;
    if clamped {
        cutoff = CLAMP_FRACTION * sample_rate;
        log::warn!(
            "{label}: cutoff {} Hz is not below Nyquist at {sample_rate} Hz, clamped to {cutoff} Hz",
            filter.cutoff
        );
    }
    let spec = design_butterworth_lowpass(filter.order, cutoff, sample_rate)?;
    let y = filtfilt(&spec, col)?;
    Ok((
        y,
        FilterRecord {
            stage,
            order: filter.order,
            cutoff,
            sample_rate,
            clamped,
        },
    ))
}

/// Filters numeric channels at their native rate, ahead of interpolation.
///
/// A channel qualifies when its stream's nominal rate exceeds `grid_rate` and
/// its class cutoff is below the native Nyquist frequency; filtering it after
/// resampling would alias everything above the grid's Nyquist frequency into
/// the pass band. NaN gaps are bridged for filtering and restored afterwards.
pub fn prefilter_native(
    session: &RawSession,
    policy: &DenoisePolicy,
    grid_rate: f64,
) -> Result<(RawSession, BTreeMap<String, FilterRecord>), DspError> {
    let mut out = session.clone();
    let mut records = BTreeMap::new();
    for d in session.manifest.streams.iter().filter(|d| d.kind == StreamKind::Numeric) {
        if d.nominal_rate <= grid_rate {
            continue;
        }
        let series: &mut TimedSeries = match out.numeric.get_mut(&d.name) {
            Some(s) => s,
            None => continue,
        };
        for (c, desc) in series.channels.iter().enumerate() {
            let Some((_, filter)) = policy.filter_for(&desc.name) else {
                continue;
            };
            if filter.cutoff >= d.nominal_rate / 2.0 || series.columns[c].len() < 3 * filter.order + 1 {
                continue;
            }
            let mut col = series.columns[c].clone();
            let gaps = fill_gaps(&mut col);
            if gaps.len() == col.len() {
                continue;
            }
            let key = channel_key(&d.name, &desc.name);
            let (mut y, rec) = filter_channel(&col, filter, d.nominal_rate, FilterStage::Native, &key)?;
            for g in gaps {
                y[g] = f64::NAN;
            }
            series.columns[c] = y;
            records.insert(key, rec);
        }
        renormalize_quaternions(series);
    }
    Ok((out, records))
}

/// Filters every numeric channel not yet filtered at the grid sample rate.
///
/// Frame selections and timestamps are left untouched.
pub fn denoise_session(session: &SyncedSession, policy: &DenoisePolicy) -> Result<SyncedSession, DspError> {
    let mut out = session.clone();
    let fs = session.grid.rate;
    for (name, series) in out.streams.iter_mut() {
        for (c, desc) in series.channels.iter().enumerate() {
            let key = channel_key(name, &desc.name);
            if out.filtered.contains_key(&key) {
                continue;
            }
            let Some((_, filter)) = policy.filter_for(&desc.name) else {
                if policy.strict {
                    return Err(DspError::UnclassifiedChannel {
                        stream: name.clone(),
                        channel: desc.name.clone(),
                    });
                }
                log::warn!("{key}: no filter class, passed through");
                continue;
            };
            let (y, rec) = filter_channel(&series.columns[c], filter, fs, FilterStage::Grid, &key)?;
            series.columns[c] = y;
            out.filtered.insert(key, rec);
        }
        renormalize_quaternions(series);
    }
    Ok(out)
}
