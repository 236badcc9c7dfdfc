//! Hand pose to end-effector displacement.
//!
//! Orientation is held fixed, so retargeting is translation only: each
//! pose contributes `scale · (position − previous position)`, clamped to
//! the simulator's max step.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::vec3::Vec3;

/// Operator hand sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    /// m, in the operator's tracking frame.
    pub position: Vec3,
    /// Gripper closure in `[0, 1]`.
    pub grip: f64,
}

impl HandPose {
    pub fn new(position: Vec3, grip: f64) -> Self {
        Self { position, grip }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.position.is_finite() {
            return Err(ConfigError::param("hand_pose.position", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.grip) {
            return Err(ConfigError::param("hand_pose.grip", format!("must be in [0, 1], got {}", self.grip)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetargetState {
    pub scale: f64,
    pub max_step: f64,
    /// Last pose seen; `None` until the session is anchored.
    pub previous: Option<Vec3>,
}

impl RetargetState {
    pub fn new(scale: f64, max_step: f64) -> Result<Self, ConfigError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ConfigError::param("retarget.scale", "must be > 0"));
        }
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(ConfigError::param("retarget.max_step", "must be > 0"));
        }
        Ok(Self { scale, max_step, previous: None })
    }
}

/// Displacement for `pose`. The first pose of a session only anchors.
pub fn retarget(pose: &HandPose, session: &mut RetargetState) -> Vec3 {
    let out = match session.previous {
        None => Vec3::ZERO,
        Some(prev) => (pose.position - prev).scale(session.scale).clamp_norm(session.max_step),
    };
    session.previous = Some(pose.position);
    out
}
