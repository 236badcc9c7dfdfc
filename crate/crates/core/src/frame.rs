use serde::{Deserialize, Serialize};

use crate::vec3::{Force3, Vec3, Wrench};

/// One tick of the feedback path: fingertip tactile force, wrist wrench and
/// end-effector position, all sampled at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    /// Seconds since episode start.
    pub t: f64,
    /// Net fingertip force in the fingertip sensor frame (N).
    pub tactile: Force3,
    /// Wrench in the wrist F/T sensor frame.
    pub wrench: Wrench,
    /// Tool tip position in the world frame (m).
    pub ee_pose: Vec3,
}

impl SensorFrame {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.tactile.is_finite() && self.wrench.is_finite() && self.ee_pose.is_finite()
    }
}
