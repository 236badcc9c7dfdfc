//! Batch episodes with scripted operators, and open-loop replay of a
//! recorded hand-pose stream.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::haptic::Condition;
use crate::metrics::{episode_metrics, EpisodeLog, EpisodeMetrics};
use crate::operator::{OperatorConfig, OperatorView, ScriptedOperator};
use crate::retarget::{retarget, HandPose, RetargetState};
use crate::session::{Session, SessionError, SessionSpec};

/// Scale between hand and end-effector motion used by the scripted runs.
pub const DEFAULT_RETARGET_SCALE: f64 = 1.0;

/// One finished scripted episode with the hand poses that drove it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRun {
    pub log: EpisodeLog,
    pub poses: Vec<HandPose>,
}

/// Runs one closed-loop episode: the operator sees the latest frame and
/// cue, emits a hand pose, and each pose drives exactly one tick.
pub fn run_scripted_episode(spec: &SessionSpec, op_cfg: &OperatorConfig) -> Result<ScriptedRun, SessionError> {
    let mut session = Session::new(spec).map_err(config_err)?;
    let mut op = ScriptedOperator::new(*op_cfg, spec.condition, &spec.task, spec.seed).map_err(config_err)?;
    let mut rt = RetargetState::new(DEFAULT_RETARGET_SCALE, spec.task.max_step).map_err(config_err)?;
    let mut poses = Vec::new();
    while !session.is_finished() {
        let last = session.last();
        let pose = op.act(&OperatorView { ee_pose: last.frame.ee_pose, cue: last.cue });
        poses.push(pose);
        let action = retarget(&pose, &mut rt);
        session.tick(action)?;
    }
    Ok(ScriptedRun { log: session.into_log(), poses })
}

/// Feeds a recorded pose stream open loop; stops at the first terminal
/// event or when the stream runs out.
pub fn replay_poses(spec: &SessionSpec, poses: &[HandPose]) -> Result<EpisodeLog, SessionError> {
    let mut session = Session::new(spec).map_err(config_err)?;
    let mut rt = RetargetState::new(DEFAULT_RETARGET_SCALE, spec.task.max_step).map_err(config_err)?;
    for pose in poses {
        if session.is_finished() {
            break;
        }
        let action = retarget(pose, &mut rt);
        session.tick(action)?;
    }
    Ok(session.into_log())
}

/// Seed of episode `i` in a batch, so that every condition sees the same
/// start poses and operator draws for the same index.
pub fn episode_seed(base: u64, i: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

/// Per-episode metrics for `n` scripted episodes of one condition.
pub fn run_condition(
    base: &SessionSpec,
    condition: Condition,
    n: usize,
    op_cfg: &OperatorConfig,
) -> Result<Vec<(EpisodeLog, EpisodeMetrics)>, SessionError> {
    (0..n)
        .map(|i| {
            let spec = SessionSpec { condition, seed: episode_seed(base.seed, i), ..base.clone() };
            let run = run_scripted_episode(&spec, op_cfg)?;
            let m = episode_metrics(&run.log, spec.pipeline.contact_threshold, &spec.task.lever)
                .expect("scripted logs are never empty");
            Ok((run.log, m))
        })
        .collect()
}

fn config_err(e: ConfigError) -> SessionError {
    SessionError::Config(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EventKind;
    use crate::sim::TaskConfig;

    #[test]
    fn replay_reproduces_closed_loop_log() {
        let spec = SessionSpec::for_task(TaskConfig::key(), Condition::C4, 21);
        let run = run_scripted_episode(&spec, &OperatorConfig::default()).unwrap();
        let replayed = replay_poses(&spec, &run.poses).unwrap();
        assert_eq!(replayed, run.log);
    }

    #[test]
    fn every_episode_terminates() {
        let spec = SessionSpec::for_task(TaskConfig::key(), Condition::C1, 5);
        for (log, _) in run_condition(&spec, Condition::C1, 3, &OperatorConfig::default()).unwrap() {
            let last = log.terminal_event().unwrap();
            assert!(matches!(last.kind, EventKind::Success | EventKind::Fracture | EventKind::Timeout));
        }
    }
}
