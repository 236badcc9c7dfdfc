//! Closed-loop policy execution with receding-horizon chunks.

use serde::{Deserialize, Serialize};

use super::expert::session_err;
use super::{Observation, Policy};
use crate::error::PolicyError;
use crate::metrics::{episode_metrics, EpisodeLog, EpisodeMetrics};
use crate::session::{Session, SessionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    /// Steps of each predicted chunk executed before replanning (`K`).
    pub replan_every: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self { replan_every: 5 }
    }
}

/// Runs one episode per seed and returns its log and metrics.
///
/// Every executed displacement is clamped to the simulator's max step.
pub fn rollout(
    policy: &Policy,
    base: &SessionSpec,
    seeds: &[u64],
    cfg: &RolloutConfig,
) -> Result<Vec<(EpisodeLog, EpisodeMetrics)>, PolicyError> {
    policy.validate()?;
    if cfg.replan_every == 0 || cfg.replan_every > policy.dims.horizon {
        return Err(PolicyError::Shape(format!(
            "replan interval {} must be in 1..={}",
            cfg.replan_every, policy.dims.horizon
        )));
    }
    seeds
        .iter()
        .map(|&seed| {
            let spec = SessionSpec { seed, ..base.clone() };
            let mut session = Session::new(&spec)?;
            let max_step = spec.task.max_step;
            'episode: while !session.is_finished() {
                let obs =
                    Observation { tactile_delta: session.tactile_delta(), ee_position: session.last().frame.ee_pose };
                let chunk = policy.predict(&obs).clamped(max_step);
                for d in chunk.deltas.iter().take(cfg.replan_every) {
                    if session.is_finished() {
                        break 'episode;
                    }
                    session.tick(*d).map_err(session_err)?;
                }
            }
            let log = session.into_log();
            let m = episode_metrics(&log, spec.pipeline.contact_threshold, &spec.task.lever)
                .expect("rollout logs hold the reset frame");
            Ok((log, m))
        })
        .collect()
}
