//! Scripted demonstrators for the fixed-lock, pre-aligned key insertion.
//!
//! Both experts descend straight toward the keyhole with a little lateral
//! hand noise. The reactive one also slides sideways against the measured
//! lateral tactile change, which moves the key away from the wall it is
//! pressing on; the nonreactive one ignores touch entirely.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::haptic::Condition;
use crate::metrics::{EpisodeLog, EventKind};
use crate::session::{Session, SessionSpec};
use crate::vec3::{Force3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertMode {
    Reactive,
    Nonreactive,
}

impl ExpertMode {
    /// Feedback condition the demonstrations stand in for.
    pub fn condition(self) -> Condition {
        match self {
            ExpertMode::Reactive => Condition::C4,
            ExpertMode::Nonreactive => Condition::C3,
        }
    }
}

impl std::str::FromStr for ExpertMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reactive" => Ok(ExpertMode::Reactive),
            "nonreactive" | "non-reactive" => Ok(ExpertMode::Nonreactive),
            other => Err(format!("unknown expert mode `{other}` (expected reactive or nonreactive)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    /// m per tick
    pub descent_step: f64,
    /// Depth past the goal the expert aims for (m).
    pub push_margin: f64,
    /// Std of per-tick lateral hand noise (m).
    pub lateral_noise_std: f64,
    /// Lateral displacement per newton of lateral tactile change (m/N).
    pub correction_gain: f64,
    /// Cap on the lateral correction per tick (m).
    pub max_correction: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            descent_step: 0.001,
            push_margin: 0.001,
            lateral_noise_std: 0.00005,
            correction_gain: 0.0001,
            max_correction: 0.0005,
        }
    }
}

/// What the expert senses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateView {
    pub ee_pose: Vec3,
    /// Baseline-subtracted fingertip force, sensor frame (N).
    pub tactile_delta: Force3,
    pub insertion_depth_goal: f64,
}

/// Next displacement. `noise` is the lateral hand noise for this tick.
pub fn scripted_expert(mode: ExpertMode, view: &StateView, cfg: &ExpertConfig, noise: (f64, f64)) -> Vec3 {
    let floor = -view.insertion_depth_goal - cfg.push_margin;
    let dz = -(view.ee_pose.z - floor).clamp(0.0, cfg.descent_step);
    let mut a = Vec3::new(noise.0, noise.1, dz);
    if mode == ExpertMode::Reactive {
        let lateral = Vec3::new(view.tactile_delta.x, view.tactile_delta.y, 0.0);
        let c = lateral.scale(-cfg.correction_gain).clamp_norm(cfg.max_correction);
        a += c;
    }
    a
}

/// Runs one expert episode on `spec`.
pub fn run_expert_episode(mode: ExpertMode, spec: &SessionSpec, cfg: &ExpertConfig) -> Result<EpisodeLog, PolicyError> {
    let mut session = Session::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6578_7065_7274);
    let noise = Normal::new(0.0, cfg.lateral_noise_std.max(0.0)).map_err(|e| PolicyError::Shape(e.to_string()))?;
    while !session.is_finished() {
        let view = StateView {
            ee_pose: session.last().frame.ee_pose,
            tactile_delta: session.tactile_delta(),
            insertion_depth_goal: spec.task.insertion_depth_goal,
        };
        let n = if cfg.lateral_noise_std > 0.0 { (noise.sample(&mut rng), noise.sample(&mut rng)) } else { (0.0, 0.0) };
        let a = scripted_expert(mode, &view, cfg, n).clamp_norm(spec.task.max_step);
        session.tick(a).map_err(session_err)?;
    }
    Ok(session.into_log())
}

/// Collects `n` demonstrations, trying seeds `base_seed, base_seed + 1, …`.
///
/// With `successes_only`, failed attempts are discarded the way a
/// demonstrator would redo a botched take; at most `max_attempts` episodes
/// are tried.
pub fn collect_demos(
    mode: ExpertMode,
    base: &SessionSpec,
    cfg: &ExpertConfig,
    n: usize,
    successes_only: bool,
    max_attempts: usize,
) -> Result<Vec<EpisodeLog>, PolicyError> {
    let mut out = Vec::with_capacity(n);
    for i in 0..max_attempts {
        if out.len() == n {
            break;
        }
        let spec = SessionSpec { seed: base.seed.wrapping_add(i as u64), condition: mode.condition(), ..base.clone() };
        let log = run_expert_episode(mode, &spec, cfg)?;
        let ok = log.events.iter().any(|e| e.kind == EventKind::Success);
        if ok || !successes_only {
            out.push(log);
        }
    }
    if out.len() < n {
        return Err(PolicyError::Shape(format!(
            "only {} of {n} {mode:?} demonstrations succeeded within {max_attempts} attempts",
            out.len()
        )));
    }
    Ok(out)
}

pub(crate) fn session_err(e: crate::session::SessionError) -> PolicyError {
    use crate::session::SessionError;
    match e {
        SessionError::Sim(s) => PolicyError::Sim(s),
        SessionError::Config(c) => PolicyError::Config(c),
        other => PolicyError::Shape(other.to_string()),
    }
}
