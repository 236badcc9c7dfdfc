//! Scripted teleoperators standing in for human participants.
//!
//! Every operator approaches a visually estimated hole position and
//! descends. The estimate carries a persistent per-episode bias (misjudged
//! depth and parallax) plus fresh noise on each re-aim, and the commanded
//! hand position jitters every tick like a tracked hand does. What differs
//! between conditions is the reaction to the haptic channel:
//!
//! - cues off: no reaction; the operator only notices failure after
//!   pushing to full depth, then lifts and re-aims from the same estimate
//! - amplitude only: contact is noticed, so the operator lifts and tries a
//!   point on a widening spiral around the estimate
//! - directional: the operator slides along the cue direction, backs off
//!   when the cue is strong, and keeps the corrected aim

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::haptic::{Condition, CueMode, HapticCue};
use crate::retarget::HandPose;
use crate::sim::TaskConfig;
use crate::vec3::Vec3;

/// Golden angle, used to spread search points evenly over a disk.
const GOLDEN_ANGLE: f64 = PI * 0.763_932_022_500_210_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// Std of the per-episode bias of the visual hole estimate, per axis (m).
    pub aim_bias_std: f64,
    /// Std of the fresh error added on every (re-)aim, per axis (m).
    pub aim_noise_std: f64,
    /// Std of the per-tick lateral hand jitter (m).
    pub jitter_std: f64,
    /// Jitter used under C3 when `stable_tracking_c3` is set (m).
    pub stable_jitter_std: f64,
    /// Model the steadier hand tracking reported with the handheld controller.
    pub stable_tracking_c3: bool,
    /// Free-space hand speed (m per tick).
    pub travel_step: f64,
    /// Descent per tick while inserting (m).
    pub descent_step: f64,
    /// Height above the opening from which descents start (m).
    pub hover_height: f64,
    /// How far past the goal depth the operator pushes before giving up (m).
    pub push_margin: f64,
    /// Ticks spent pushing at full depth before noticing the object is not in.
    pub stuck_dwell_ticks: u32,
    /// Cue amplitude at which contact is noticed.
    pub contact_amplitude: f64,
    /// Cue amplitude at which a directional operator lifts off.
    pub backoff_amplitude: f64,
    /// Lateral correction per unit cue amplitude (m).
    pub correction_gain: f64,
    /// Cap on one lateral correction (m).
    pub max_correction: f64,
    /// Radial growth of the search spiral per attempt (m).
    pub search_step: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            aim_bias_std: 0.001,
            aim_noise_std: 0.0003,
            jitter_std: 0.0002,
            stable_jitter_std: 0.00005,
            stable_tracking_c3: true,
            travel_step: 0.003,
            descent_step: 0.001,
            hover_height: 0.004,
            push_margin: 0.001,
            stuck_dwell_ticks: 10,
            contact_amplitude: 0.04,
            backoff_amplitude: 0.3,
            correction_gain: 0.01,
            max_correction: 0.0005,
            search_step: 0.0005,
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let nonneg = [
            ("operator.aim_bias_std", self.aim_bias_std),
            ("operator.aim_noise_std", self.aim_noise_std),
            ("operator.jitter_std", self.jitter_std),
            ("operator.stable_jitter_std", self.stable_jitter_std),
            ("operator.hover_height", self.hover_height),
            ("operator.push_margin", self.push_margin),
            ("operator.correction_gain", self.correction_gain),
            ("operator.max_correction", self.max_correction),
            ("operator.search_step", self.search_step),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::param(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("operator.travel_step", self.travel_step),
            ("operator.descent_step", self.descent_step),
            ("operator.contact_amplitude", self.contact_amplitude),
            ("operator.backoff_amplitude", self.backoff_amplitude),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// What the operator perceives each tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorView {
    /// Seen end-effector position (m).
    pub ee_pose: Vec3,
    /// Cue as rendered on the device.
    pub cue: HapticCue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Approach,
    Descend,
    Dwell(u32),
    Retract,
}

#[derive(Debug, Clone)]
pub struct ScriptedOperator {
    cfg: OperatorConfig,
    mode: CueMode,
    jitter_std: f64,
    floor_z: f64,
    max_step: f64,
    rng: ChaCha8Rng,
    /// Persistent visual estimate of the hole center.
    estimate: Vec3,
    aim: Vec3,
    /// Intended end-effector position, before jitter.
    nominal: Option<Vec3>,
    phase: Phase,
    attempts: u32,
}

impl ScriptedOperator {
    pub fn new(cfg: OperatorConfig, condition: Condition, task: &TaskConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f70_6572_6174_6f72);
        let bias = normal_pair(&mut rng, cfg.aim_bias_std);
        let estimate = Vec3::new(bias.0, bias.1, 0.0);
        let jitter_std =
            if condition == Condition::C3 && cfg.stable_tracking_c3 { cfg.stable_jitter_std } else { cfg.jitter_std };
        let mut op = Self {
            cfg,
            mode: condition.cue_mode(),
            jitter_std,
            floor_z: -task.insertion_depth_goal - cfg.push_margin,
            max_step: task.max_step,
            rng,
            estimate,
            aim: estimate,
            nominal: None,
            phase: Phase::Approach,
            attempts: 0,
        };
        op.reaim(Vec3::ZERO);
        Ok(op)
    }

    /// Number of descents started so far.
    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    fn reaim(&mut self, offset: Vec3) {
        let n = normal_pair(&mut self.rng, self.cfg.aim_noise_std);
        self.aim = self.estimate + offset + Vec3::new(n.0, n.1, 0.0);
    }

    /// Next hand pose. The first call returns the current end-effector
    /// position, which anchors retargeting.
    pub fn act(&mut self, view: &OperatorView) -> HandPose {
        let Some(mut nominal) = self.nominal else {
            self.nominal = Some(view.ee_pose);
            return HandPose::new(view.ee_pose, 1.0);
        };
        let cfg = self.cfg;
        let hover = Vec3::new(self.aim.x, self.aim.y, cfg.hover_height);
        match self.phase {
            Phase::Approach => {
                nominal = toward(nominal, hover, cfg.travel_step);
                if (nominal - hover).magnitude() < 1e-9 {
                    self.phase = Phase::Descend;
                    self.attempts += 1;
                }
            }
            Phase::Descend => {
                let a = view.cue.amplitude;
                let touching = a >= cfg.contact_amplitude;
                match self.mode {
                    CueMode::Directional if touching => {
                        let step = (cfg.correction_gain * a).min(cfg.max_correction);
                        let (s, c) = view.cue.theta.sin_cos();
                        let shift = Vec3::new(c * step, s * step, 0.0);
                        nominal += shift;
                        self.aim += shift;
                        if a >= cfg.backoff_amplitude {
                            nominal.z += 0.5 * cfg.descent_step;
                        }
                    }
                    CueMode::AmplitudeOnly if touching => {
                        self.phase = Phase::Retract;
                    }
                    _ => {
                        nominal.z = (nominal.z - cfg.descent_step).max(self.floor_z);
                        if nominal.z <= self.floor_z {
                            self.phase = Phase::Dwell(cfg.stuck_dwell_ticks);
                        }
                    }
                }
                if self.phase == Phase::Retract {
                    let k = self.attempts as f64;
                    let r = cfg.search_step * k.sqrt();
                    let (s, c) = (k * GOLDEN_ANGLE).sin_cos();
                    self.reaim(Vec3::new(r * c, r * s, 0.0));
                }
            }
            Phase::Dwell(n) => {
                if n == 0 {
                    self.phase = Phase::Retract;
                    let offset = match self.mode {
                        CueMode::Off => Vec3::ZERO,
                        _ => {
                            let k = self.attempts as f64;
                            let r = self.cfg.search_step * k.sqrt();
                            let (s, c) = (k * GOLDEN_ANGLE).sin_cos();
                            Vec3::new(r * c, r * s, 0.0)
                        }
                    };
                    self.reaim(offset);
                } else {
                    self.phase = Phase::Dwell(n - 1);
                }
            }
            Phase::Retract => {
                let up = Vec3::new(nominal.x, nominal.y, cfg.hover_height);
                nominal = toward(nominal, up, cfg.travel_step);
                if (nominal - up).magnitude() < 1e-9 {
                    self.phase = Phase::Approach;
                }
            }
        }
        self.nominal = Some(nominal);
        let j = normal_pair(&mut self.rng, self.jitter_std);
        let hand = nominal + Vec3::new(j.0, j.1, 0.0);
        // Keep the resulting displacement inside the robot's per-tick limit.
        let step = (hand - view.ee_pose).clamp_norm(self.max_step);
        HandPose::new(view.ee_pose + step, 1.0)
    }
}

fn toward(from: Vec3, to: Vec3, max: f64) -> Vec3 {
    from + (to - from).clamp_norm(max)
}

fn normal_pair(rng: &mut ChaCha8Rng, std: f64) -> (f64, f64) {
    if std == 0.0 {
        return (0.0, 0.0);
    }
    let d = Normal::new(0.0, std).expect("finite std");
    (d.sample(rng), d.sample(rng))
}
