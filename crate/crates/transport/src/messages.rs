//! Payload bodies for the known envelope kinds.
//!
//! Frames, cues, poses and events reuse the core types directly so that the
//! wire and the episode log agree on field names.

use serde::{Deserialize, Serialize};

pub use compass_core::device::DeviceTelemetry;
pub use compass_core::frame::SensorFrame;
pub use compass_core::haptic::HapticCue as HapticCommandMsg;
pub use compass_core::metrics::{EpisodeMeta, LogEvent};
pub use compass_core::retarget::HandPose as HandPoseMsg;
use compass_core::vec3::Vec3;

/// Device state stamped with the simulation time of the tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryMsg {
    pub t: f64,
    #[serde(flatten)]
    pub device: DeviceTelemetry,
}

/// Displacement applied at the tick ending at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionMsg {
    pub t: f64,
    pub delta: Vec3,
}

/// Haptic command stamped with the simulation time of the tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CueMsg {
    pub t: f64,
    #[serde(flatten)]
    pub cue: HapticCommandMsg,
}

/// Round-trip timing probe. The client fills `id` and `t_client`; the
/// server echoes it back with `t_server` set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyProbe {
    pub id: u64,
    /// µs, client clock
    pub t_client: u64,
    /// µs, server clock
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_server: Option<u64>,
}
