//! Observations, action chunks and the sliding-window dataset built from
//! episode logs.

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::haptic::{CueMode, PipelineConfig, TactileMapper};
use crate::metrics::EpisodeLog;
use crate::vec3::{Force3, Vec3};

/// Policy input: tactile change and proprioception.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Baseline-subtracted fingertip force, sensor frame (N).
    pub tactile_delta: Force3,
    /// Tool tip position (m).
    pub ee_position: Vec3,
}

impl Observation {
    pub fn is_finite(&self) -> bool {
        self.tactile_delta.is_finite() && self.ee_position.is_finite()
    }
}

/// `H` consecutive end-effector displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionChunk {
    pub deltas: Vec<Vec3>,
}

impl ActionChunk {
    /// Rescales every delta to at most `max_step`.
    pub fn clamped(mut self, max_step: f64) -> Self {
        for d in &mut self.deltas {
            *d = d.clamp_norm(max_step);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    pub chunk: ActionChunk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub horizon: usize,
    pub transitions: Vec<Transition>,
}

impl Dataset {
    /// One transition per frame: the observation at frame `i` and actions
    /// `i .. i + H`, padded with zero displacements past the episode end.
    ///
    /// Tactile deltas are recomputed by replaying the frames through a
    /// fresh mapper with `pipeline`, so they match what was seen live.
    pub fn from_logs(logs: &[EpisodeLog], pipeline: &PipelineConfig, horizon: usize) -> Result<Self, PolicyError> {
        if horizon == 0 {
            return Err(PolicyError::Shape("chunk horizon must be >= 1".into()));
        }
        let mut transitions = Vec::new();
        for log in logs {
            let mut mapper = TactileMapper::new(*pipeline, CueMode::Directional)?;
            for (i, frame) in log.frames.iter().enumerate() {
                mapper.step(frame).map_err(|e| PolicyError::Shape(format!("log frames out of order: {e}")))?;
                let obs = Observation { tactile_delta: mapper.delta(frame.tactile), ee_position: frame.ee_pose };
                let deltas = (i..i + horizon).map(|k| log.actions.get(k).copied().unwrap_or(Vec3::ZERO)).collect();
                transitions.push(Transition { obs, chunk: ActionChunk { deltas } });
            }
        }
        if transitions.is_empty() {
            return Err(PolicyError::EmptyDataset);
        }
        Ok(Self { horizon, transitions })
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}
