//! Tactile mapping: baseline tracking, sensor→device transform, planar
//! projection and cue computation.
//!
//! The pipeline turns the fingertip force change `ΔF = tactile − baseline`
//! into a rotor angle `θ = atan2(f_y, f_x)` and a vibration amplitude
//! `A = k·‖f_2D‖`, where `f_2D` is the x–y part of `R·ΔF` in the device frame.
//! The baseline snaps to the current tactile reading whenever the wrist
//! force has stayed below the contact threshold for the debounce interval.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, MonotonicityError};
use crate::frame::SensorFrame;
use crate::vec3::{wrap_angle, Force2, Force3, Rotation3, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HapticCue {
    /// Target rotor angle, radians in `[-π, π)`.
    pub theta: f64,
    /// Normalized vibration amplitude in `[0, 1]`.
    pub amplitude: f64,
}

impl HapticCue {
    pub const IDLE: HapticCue = HapticCue { theta: 0.0, amplitude: 0.0 };

    /// Wraps `theta` and clamps `amplitude` into range. Non-finite amplitude maps to 0.
    pub fn new(theta: f64, amplitude: f64) -> Self {
        let theta = if theta.is_finite() { wrap_angle(theta) } else { 0.0 };
        let amplitude = if amplitude.is_finite() { amplitude.clamp(0.0, 1.0) } else { 0.0 };
        Self { theta, amplitude }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Sensor→device rotation; given row-major in config files.
    pub rotation: Rotation3,
    /// Amplitude per newton of planar force.
    pub gain_k: f64,
    /// Wrist force magnitude (N) under which the gripper counts as in free space.
    pub contact_threshold: f64,
    /// Seconds the wrist force must stay below threshold before the baseline snaps.
    pub recal_debounce: f64,
    pub amplitude_max: f64,
    /// Planar force (N) under which the cue is silenced and θ is held.
    pub deadband: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rotation: Rotation3::IDENTITY,
            gain_k: 0.02,
            contact_threshold: 2.0,
            recal_debounce: 0.2,
            amplitude_max: 1.0,
            deadband: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        // Re-check R in case it was built by hand rather than deserialized.
        Rotation3::from_rows(self.rotation.rows())?;
        if !(self.gain_k.is_finite() && self.gain_k > 0.0) {
            return Err(ConfigError::param("gain_k", "must be > 0"));
        }
        if !(self.contact_threshold.is_finite() && self.contact_threshold > 0.0) {
            return Err(ConfigError::param("contact_threshold", "must be > 0"));
        }
        if !(self.recal_debounce.is_finite() && self.recal_debounce >= 0.0) {
            return Err(ConfigError::param("recal_debounce", "must be >= 0"));
        }
        if !(self.amplitude_max > 0.0 && self.amplitude_max <= 1.0) {
            return Err(ConfigError::param("amplitude_max", "must be in (0, 1]"));
        }
        if !(self.deadband.is_finite() && self.deadband >= 0.0) {
            return Err(ConfigError::param("deadband", "must be >= 0"));
        }
        Ok(())
    }
}

/// Baseline bookkeeping threaded through successive frames.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineState {
    pub baseline: Force3,
    /// Start of the current below-threshold interval, if one is running.
    pub below_threshold_since: Option<f64>,
    pub last_cue_theta: f64,
    /// Time of the last processed update, for monotonicity checks.
    pub last_update: Option<f64>,
}

pub fn transform_force(delta_f: Force3, r: &Rotation3) -> Force3 {
    r.apply(delta_f)
}

/// Drops z: the feedback plane is the device x–y plane.
pub fn project_to_plane(f_device: Force3) -> Force2 {
    Force2::new(f_device.x, f_device.y)
}

pub fn compute_cue(f2d: Force2, cfg: &PipelineConfig, prev: HapticCue) -> HapticCue {
    let mag = f2d.magnitude();
    if mag.is_nan() || mag < cfg.deadband {
        return HapticCue::new(prev.theta, 0.0);
    }
    let amplitude = (cfg.gain_k * mag).min(cfg.amplitude_max);
    HapticCue::new(f2d.fy.atan2(f2d.fx), amplitude)
}

pub fn update_baseline(
    state: BaselineState,
    wrench: &Wrench,
    tactile: Force3,
    now: f64,
    cfg: &PipelineConfig,
) -> Result<BaselineState, MonotonicityError> {
    if let Some(last) = state.last_update {
        if now < last {
            return Err(MonotonicityError { last, now });
        }
    }
    let mut next = state;
    next.last_update = Some(now);
    if wrench.force.magnitude() < cfg.contact_threshold {
        let since = *next.below_threshold_since.get_or_insert(now);
        if now - since >= cfg.recal_debounce {
            next.baseline = tactile;
        }
    } else {
        next.below_threshold_since = None;
    }
    Ok(next)
}

pub fn compute_delta(tactile: Force3, state: &BaselineState) -> Force3 {
    tactile - state.baseline
}

/// One full mapping step for a frame.
pub fn pipeline_step(
    state: BaselineState,
    frame: &SensorFrame,
    cfg: &PipelineConfig,
) -> Result<(BaselineState, HapticCue), MonotonicityError> {
    let mut next = update_baseline(state, &frame.wrench, frame.tactile, frame.t, cfg)?;
    let delta = compute_delta(frame.tactile, &next);
    let f2d = project_to_plane(transform_force(delta, &cfg.rotation));
    let prev = HapticCue::new(next.last_cue_theta, 0.0);
    let cue = compute_cue(f2d, cfg, prev);
    next.last_cue_theta = cue.theta;
    Ok((next, cue))
}

/// Feedback condition under which an episode is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    /// Vision only; the device stays inactive.
    C1,
    /// Non-directional vibration from the device, rotor held still.
    C2,
    /// Non-directional controller vibration with steadier tracking.
    C3,
    /// Full directional cues.
    C4,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::C1, Condition::C2, Condition::C3, Condition::C4];

    pub fn cue_mode(self) -> CueMode {
        match self {
            Condition::C1 => CueMode::Off,
            Condition::C2 | Condition::C3 => CueMode::AmplitudeOnly,
            Condition::C4 => CueMode::Directional,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "C1" => Ok(Condition::C1),
            "C2" => Ok(Condition::C2),
            "C3" => Ok(Condition::C3),
            "C4" => Ok(Condition::C4),
            other => Err(format!("unknown condition `{other}` (expected C1..C4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CueMode {
    Off,
    /// Amplitude follows the force; θ stays at the rotor's rest angle.
    AmplitudeOnly,
    Directional,
}

impl CueMode {
    pub fn apply(self, cue: HapticCue, rest_theta: f64) -> HapticCue {
        match self {
            CueMode::Off => HapticCue::new(rest_theta, 0.0),
            CueMode::AmplitudeOnly => HapticCue::new(rest_theta, cue.amplitude),
            CueMode::Directional => cue,
        }
    }
}

/// Stateful wrapper owning the baseline and the condition-specific cue mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileMapper {
    cfg: PipelineConfig,
    state: BaselineState,
    mode: CueMode,
    rest_theta: f64,
}

impl TactileMapper {
    pub fn new(cfg: PipelineConfig, mode: CueMode) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self { cfg, state: BaselineState::default(), mode, rest_theta: 0.0 })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BaselineState {
        &self.state
    }

    pub fn mode(&self) -> CueMode {
        self.mode
    }

    /// Current tactile change relative to the tracked baseline.
    pub fn delta(&self, tactile: Force3) -> Force3 {
        compute_delta(tactile, &self.state)
    }

    pub fn step(&mut self, frame: &SensorFrame) -> Result<HapticCue, MonotonicityError> {
        let (next, cue) = pipeline_step(self.state, frame, &self.cfg)?;
        self.state = next;
        Ok(self.mode.apply(cue, self.rest_theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn wrench_with(f: f64) -> Wrench {
        Wrench::new(Vec3::new(0.0, 0.0, f), Vec3::ZERO)
    }

    #[test]
    fn transform_identity_and_quarter_turn() {
        let f = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_force(f, &Rotation3::IDENTITY), f);
        let out = transform_force(Vec3::new(1.0, 0.0, 0.0), &Rotation3::about_z(FRAC_PI_2));
        assert!((out - Vec3::new(0.0, 1.0, 0.0)).magnitude() < 1e-15);
    }

    #[test]
    fn projection_drops_z() {
        assert_eq!(project_to_plane(Vec3::new(1.0, 2.0, 3.0)), Force2::new(1.0, 2.0));
        assert_eq!(project_to_plane(Vec3::new(0.0, 0.0, 5.0)), Force2::new(0.0, 0.0));
        assert_eq!(project_to_plane(Vec3::new(-0.3, 0.4, 7.0)), Force2::new(-0.3, 0.4));
    }

    #[test]
    fn cue_examples() {
        let mut c = cfg();
        c.gain_k = 1.0;
        let cue = compute_cue(Force2::new(1.0, 0.0), &c, HapticCue::IDLE);
        assert_eq!(cue, HapticCue { theta: 0.0, amplitude: 1.0 });

        let held = compute_cue(Force2::new(0.0, 0.0), &c, HapticCue::new(0.7, 0.3));
        assert_eq!(held, HapticCue { theta: 0.7, amplitude: 0.0 });

        c.gain_k = 0.5;
        let cue = compute_cue(Force2::new(-1.0, -1.0), &c, HapticCue::IDLE);
        let want_theta = -3.0 * PI / 4.0;
        let want_amp = (0.5 * 2f64.sqrt()).min(1.0);
        assert!((cue.theta - want_theta).abs() < 1e-15);
        assert!((cue.amplitude - want_amp).abs() < 1e-15);
    }

    #[test]
    fn cue_saturates() {
        let cue = compute_cue(Force2::new(0.0, -500.0), &cfg(), HapticCue::IDLE);
        assert_eq!(cue.amplitude, 1.0);
        assert!((cue.theta + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn cue_theta_pi_wraps_to_minus_pi() {
        let cue = compute_cue(Force2::new(-3.0, 0.0), &cfg(), HapticCue::IDLE);
        assert_eq!(cue.theta, -PI);
    }

    #[test]
    fn nan_force_is_treated_as_deadband() {
        let cue = compute_cue(Force2::new(f64::NAN, 1.0), &cfg(), HapticCue::new(0.2, 0.0));
        assert_eq!(cue, HapticCue::new(0.2, 0.0));
    }

    #[test]
    fn baseline_snaps_after_debounce() {
        let c = cfg();
        let tactile = Vec3::new(0.2, 0.0, 0.1);
        let mut s = BaselineState::default();
        s = update_baseline(s, &wrench_with(0.5), tactile, 0.0, &c).unwrap();
        assert_eq!(s.baseline, Vec3::ZERO);
        assert_eq!(s.below_threshold_since, Some(0.0));
        s = update_baseline(s, &wrench_with(0.5), tactile, 0.2, &c).unwrap();
        assert_eq!(s.baseline, tactile);
    }

    #[test]
    fn contact_clears_timer_and_keeps_baseline() {
        let c = cfg();
        let mut s = BaselineState {
            baseline: Vec3::new(0.1, 0.1, 0.1),
            below_threshold_since: Some(0.0),
            ..Default::default()
        };
        s = update_baseline(s, &wrench_with(10.0), Vec3::new(5.0, 0.0, 0.0), 0.1, &c).unwrap();
        assert_eq!(s.baseline, Vec3::new(0.1, 0.1, 0.1));
        assert_eq!(s.below_threshold_since, None);
    }

    #[test]
    fn backwards_time_is_rejected() {
        let c = cfg();
        let s = update_baseline(BaselineState::default(), &Wrench::ZERO, Vec3::ZERO, 1.0, &c).unwrap();
        let err = update_baseline(s, &Wrench::ZERO, Vec3::ZERO, 0.5, &c).unwrap_err();
        assert_eq!(err, MonotonicityError { last: 1.0, now: 0.5 });
    }

    #[test]
    fn delta_examples() {
        let s = BaselineState { baseline: Vec3::new(0.5, 0.0, 1.0), ..Default::default() };
        assert_eq!(compute_delta(Vec3::new(1.0, 1.0, 1.0), &s), Vec3::new(0.5, 1.0, 0.0));
        assert_eq!(compute_delta(s.baseline, &s), Vec3::ZERO);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = cfg();
        c.gain_k = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.contact_threshold = -1.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.recal_debounce = -0.1;
        assert!(TactileMapper::new(c, CueMode::Directional).is_err());
    }

    #[test]
    fn cue_modes() {
        let cue = HapticCue::new(1.0, 0.6);
        assert_eq!(CueMode::Off.apply(cue, 0.0), HapticCue::new(0.0, 0.0));
        assert_eq!(CueMode::AmplitudeOnly.apply(cue, 0.0), HapticCue::new(0.0, 0.6));
        assert_eq!(CueMode::Directional.apply(cue, 0.0), cue);
        assert_eq!(Condition::C3.cue_mode(), CueMode::AmplitudeOnly);
        assert_eq!("c4".parse::<Condition>().unwrap(), Condition::C4);
    }
}
