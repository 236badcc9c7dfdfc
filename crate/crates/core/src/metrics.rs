//! Episode metrics: success, completion time, contact duration, peak wrist
//! force and peak bending torque at the grip.

use serde::{Deserialize, Serialize};

use crate::device::DeviceTelemetry;
use crate::error::{ConfigError, MetricsError};
use crate::frame::SensorFrame;
use crate::haptic::{Condition, HapticCue};
use crate::sim::{TaskEvent, TaskKind};
use crate::vec3::{Vec3, Wrench};

/// Grip-point offset and bending axis used to turn the wrist wrench into a
/// bending torque on the held object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLever", into = "RawLever")]
pub struct LeverConfig {
    r: Vec3,
    u_hat: Vec3,
}

#[derive(Serialize, Deserialize)]
struct RawLever {
    r: [f64; 3],
    u_hat: [f64; 3],
}

impl TryFrom<RawLever> for LeverConfig {
    type Error = ConfigError;
    fn try_from(raw: RawLever) -> Result<Self, ConfigError> {
        LeverConfig::new(Vec3::from_array(raw.r), Vec3::from_array(raw.u_hat))
    }
}

impl From<LeverConfig> for RawLever {
    fn from(l: LeverConfig) -> Self {
        RawLever { r: l.r.to_array(), u_hat: l.u_hat.to_array() }
    }
}

impl LeverConfig {
    /// `u_hat` must already be unit length (within 1e-9); it is not normalized.
    pub fn new(r: Vec3, u_hat: Vec3) -> Result<Self, ConfigError> {
        let lev = Self { r, u_hat };
        lev.validate()?;
        Ok(lev)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.r.is_finite() {
            return Err(ConfigError::param("lever.r", "must be finite"));
        }
        let err = (self.u_hat.magnitude() - 1.0).abs();
        if err.is_nan() || err > 1e-9 {
            return Err(ConfigError::param(
                "lever.u_hat",
                format!("must be a unit vector, norm is {}", self.u_hat.magnitude()),
            ));
        }
        Ok(())
    }

    pub fn r(&self) -> Vec3 {
        self.r
    }

    pub fn u_hat(&self) -> Vec3 {
        self.u_hat
    }
}

/// `|û · (τ − r × F)|`: wrist torque moved to the grip point, projected on
/// the bending axis.
pub fn bending_torque(w: &Wrench, lev: &LeverConfig) -> f64 {
    let tau_grip = w.torque - lev.r.cross(w.force);
    lev.u_hat.dot(tau_grip).abs()
}

/// Anything recorded in an episode besides frames, actions and cues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Success,
    Fracture,
    Timeout,
    /// Episode cut short (client disconnect, interrupt).
    Aborted {
        reason: String,
    },
    /// A stream skipped sequence numbers.
    SeqGap {
        stream: String,
        expected: u64,
        got: u64,
    },
}

impl EventKind {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, EventKind::SeqGap { .. })
    }
}

impl From<TaskEvent> for EventKind {
    fn from(e: TaskEvent) -> Self {
        match e {
            TaskEvent::Success => EventKind::Success,
            TaskEvent::Fracture => EventKind::Fracture,
            TaskEvent::Timeout => EventKind::Timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub task: TaskKind,
    pub condition: Condition,
    pub seed: u64,
    /// Fully resolved run configuration, embedded for provenance.
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Everything that happened in one episode, in tick order.
///
/// `frames[0]` is the observation at reset; `actions[i]` and `cues[i]` were
/// produced after `frames[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub meta: EpisodeMeta,
    pub frames: Vec<SensorFrame>,
    pub actions: Vec<Vec3>,
    pub cues: Vec<HapticCue>,
    /// Device state after each cue.
    pub telemetry: Vec<DeviceTelemetry>,
    pub events: Vec<LogEvent>,
}

impl EpisodeLog {
    pub fn new(meta: EpisodeMeta) -> Self {
        Self {
            meta,
            frames: Vec::new(),
            actions: Vec::new(),
            cues: Vec::new(),
            telemetry: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn terminal_event(&self) -> Option<&LogEvent> {
        self.events.iter().find(|e| e.kind.is_terminal())
    }

    /// Checks ordering and the single-terminal-event rule.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.frames.windows(2) {
            if w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater) {
                return Err(format!("frame timestamps not increasing at t = {}", w[1].t));
            }
        }
        let terminals = self.events.iter().filter(|e| e.kind.is_terminal()).count();
        if terminals > 1 {
            return Err(format!("{terminals} terminal events"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub success: bool,
    /// s
    pub completion_time: f64,
    /// s
    pub contact_duration: f64,
    /// N
    pub max_force: f64,
    /// N·m
    pub max_bending_torque: f64,
}

pub fn episode_metrics(
    log: &EpisodeLog,
    contact_threshold: f64,
    lev: &LeverConfig,
) -> Result<EpisodeMetrics, MetricsError> {
    let first = log.frames.first().ok_or(MetricsError::EmptyLog)?;
    let last = log.frames.last().expect("non-empty");
    let end = log.terminal_event().map_or(last.t, |e| e.t);
    let success = log.events.iter().any(|e| e.kind == EventKind::Success);

    let mut contact_duration = 0.0;
    for w in log.frames.windows(2) {
        if w[1].wrench.force.magnitude() > contact_threshold {
            contact_duration += w[1].t - w[0].t;
        }
    }
    let max_force = log.frames.iter().map(|f| f.wrench.force.magnitude()).fold(0.0, f64::max);
    let max_bending_torque = log.frames.iter().map(|f| bending_torque(&f.wrench, lev)).fold(0.0, f64::max);
    Ok(EpisodeMetrics { success, completion_time: end - first.t, contact_duration, max_force, max_bending_torque })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        if xs.is_empty() {
            return Self::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std =
            if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Self { mean, std }
    }
}

/// Per-condition aggregate in the column order of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub completion_time: MeanStd,
    pub contact_duration: MeanStd,
    pub max_force: MeanStd,
    pub max_bending_torque: MeanStd,
}

pub fn summarize(ms: &[EpisodeMetrics]) -> MetricsSummary {
    let successes = ms.iter().filter(|m| m.success).count();
    MetricsSummary {
        episodes: ms.len(),
        successes,
        success_rate: if ms.is_empty() { 0.0 } else { successes as f64 / ms.len() as f64 },
        completion_time: MeanStd::of(ms.iter().map(|m| m.completion_time)),
        contact_duration: MeanStd::of(ms.iter().map(|m| m.contact_duration)),
        max_force: MeanStd::of(ms.iter().map(|m| m.max_force)),
        max_bending_torque: MeanStd::of(ms.iter().map(|m| m.max_bending_torque)),
    }
}
