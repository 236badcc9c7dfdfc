//! Software model of the rotating-actuator haptic device: a rate-limited
//! servo rotor that orients the actuator axis, and an asymmetric sawtooth
//! drive signal for the linear resonant actuator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ConfigError, MonotonicityError};
use crate::haptic::HapticCue;
use crate::vec3::wrap_angle;

/// Command consumed by the device; identical in content to a rendered cue.
pub type HapticCommand = HapticCue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error(transparent)]
    Time(#[from] MonotonicityError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("amplitude {0} outside [0, 1]")]
    Amplitude(f64),
    #[error("duration must be positive, got {0}")]
    Duration(f64),
}

/// Rotor travel range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotorTravel {
    /// Any angle in `[-π, π)`, moving along the shorter arc.
    #[default]
    Full,
    /// Angles in `[0, π)`; the opposite half-plane is rendered by flipping
    /// waveform polarity.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorState {
    pub angle: f64,
    /// rad/s
    pub angular_velocity_limit: f64,
    pub last_update: f64,
    pub travel: RotorTravel,
}

impl RotorState {
    pub fn new(angular_velocity_limit: f64, travel: RotorTravel) -> Result<Self, ConfigError> {
        if !(angular_velocity_limit.is_finite() && angular_velocity_limit > 0.0) {
            return Err(ConfigError::param("angular_velocity_limit", "must be > 0"));
        }
        Ok(Self { angle: 0.0, angular_velocity_limit, last_update: 0.0, travel })
    }
}

/// Moves the rotor toward `theta_target`, at most `limit·dt` radians.
///
/// Full travel takes the shorter signed arc and wraps across ±π. Half travel
/// never wraps; the target is clamped into `[0, π)`.
pub fn step_rotor(state: RotorState, theta_target: f64, now: f64) -> Result<RotorState, MonotonicityError> {
    if now < state.last_update {
        return Err(MonotonicityError { last: state.last_update, now });
    }
    let max_move = state.angular_velocity_limit * (now - state.last_update);
    let (target, dist) = match state.travel {
        RotorTravel::Full => {
            let target = wrap_angle(theta_target);
            (target, wrap_angle(target - state.angle))
        }
        RotorTravel::Half => {
            let target = theta_target.clamp(0.0, std::f64::consts::PI.next_down());
            (target, target - state.angle)
        }
    };
    let angle = if dist.abs() <= max_move {
        target
    } else {
        let moved = state.angle + max_move.copysign(dist);
        match state.travel {
            RotorTravel::Full => wrap_angle(moved),
            RotorTravel::Half => moved,
        }
    };
    Ok(RotorState { angle, last_update: now, ..state })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformParams {
    pub resonance_hz: f64,
    pub sample_rate_hz: f64,
    /// Duration of the slow return divided by the duration of the fast stroke.
    pub asymmetry_ratio: f64,
    /// Whole periods per burst emitted on each device step.
    pub cycles_per_burst: u32,
}

impl Default for WaveformParams {
    fn default() -> Self {
        Self { resonance_hz: 170.0, sample_rate_hz: 8000.0, asymmetry_ratio: 3.0, cycles_per_burst: 3 }
    }
}

impl WaveformParams {
    pub fn new(
        resonance_hz: f64,
        sample_rate_hz: f64,
        asymmetry_ratio: f64,
        cycles_per_burst: u32,
    ) -> Result<Self, ConfigError> {
        let p = Self { resonance_hz, sample_rate_hz, asymmetry_ratio, cycles_per_burst };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.resonance_hz.is_finite() && self.resonance_hz > 0.0) {
            return Err(ConfigError::param("resonance_hz", "must be > 0"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz >= 10.0 * self.resonance_hz) {
            return Err(ConfigError::param("sample_rate_hz", "must be at least 10x resonance_hz"));
        }
        if !(self.asymmetry_ratio > 1.0 && self.asymmetry_ratio <= 10.0) {
            return Err(ConfigError::param("asymmetry_ratio", "must be in (1, 10]"));
        }
        if self.cycles_per_burst == 0 {
            return Err(ConfigError::param("cycles_per_burst", "must be >= 1"));
        }
        Ok(())
    }

    /// Samples in the fast stroke and in the slow return of one period.
    ///
    /// The period is quantized to whole samples so that every period has
    /// exactly zero mean and hits ±amplitude on sample boundaries.
    pub fn segment_lengths(&self) -> (usize, usize) {
        let ideal_period = self.sample_rate_hz / self.resonance_hz;
        let fast = ((ideal_period / (1.0 + self.asymmetry_ratio)).round() as usize).max(1);
        let slow = ((self.asymmetry_ratio * fast as f64).round() as usize).max(2);
        (fast, slow)
    }

    pub fn period_samples(&self) -> usize {
        let (f, s) = self.segment_lengths();
        f + s
    }

    /// Actual drive frequency after period quantization.
    pub fn realized_frequency_hz(&self) -> f64 {
        self.sample_rate_hz / self.period_samples() as f64
    }

    pub fn burst_duration(&self) -> f64 {
        (self.cycles_per_burst as usize * self.period_samples()) as f64 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl SampleBuffer {
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    fn negate(&mut self) {
        for s in &mut self.samples {
            *s = -*s;
        }
    }
}

/// Asymmetric sawtooth: a fast rise from −A to +A followed by a slow linear
/// return, repeating at the (quantized) resonance frequency.
pub fn synth_waveform(amplitude: f64, duration: f64, p: &WaveformParams) -> Result<SampleBuffer, DeviceError> {
    p.validate()?;
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(DeviceError::Amplitude(amplitude));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(DeviceError::Duration(duration));
    }
    let len = (duration * p.sample_rate_hz).round() as usize;
    let (fast, slow) = p.segment_lengths();
    let period = fast + slow;
    let samples = (0..len)
        .map(|k| {
            let m = k % period;
            if amplitude == 0.0 {
                0.0
            } else if m <= fast {
                amplitude * (2.0 * m as f64 / fast as f64 - 1.0)
            } else {
                amplitude * (1.0 - 2.0 * (m - fast) as f64 / slow as f64)
            }
        })
        .collect();
    Ok(SampleBuffer { samples, sample_rate_hz: p.sample_rate_hz })
}

/// Snapshot of the device after processing one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceOutput {
    /// Rotor angle actually reached (rate limited), not the commanded one.
    pub realized_angle: f64,
    pub target_angle: f64,
    pub amplitude: f64,
    /// +1 or −1; −1 only in half-travel mode for targets in the lower half-plane.
    pub polarity: i8,
    pub burst: SampleBuffer,
}

/// Device state reported to subscribers each tick, without the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceTelemetry {
    /// Rotor angle reached after the step (rad).
    pub rotor_angle: f64,
    pub target_angle: f64,
    pub amplitude: f64,
    pub polarity: i8,
}

impl From<&DeviceOutput> for DeviceTelemetry {
    fn from(o: &DeviceOutput) -> Self {
        Self {
            rotor_angle: o.realized_angle,
            target_angle: o.target_angle,
            amplitude: o.amplitude,
            polarity: o.polarity,
        }
    }
}

pub fn device_step(
    rotor: RotorState,
    cmd: HapticCommand,
    now: f64,
    p: &WaveformParams,
) -> Result<(RotorState, DeviceOutput), DeviceError> {
    let theta = wrap_angle(cmd.theta);
    let (target, polarity) = match rotor.travel {
        RotorTravel::Full => (theta, 1i8),
        RotorTravel::Half if theta >= 0.0 => (theta, 1),
        RotorTravel::Half => (theta + std::f64::consts::PI, -1),
    };
    let rotor = step_rotor(rotor, target, now)?;
    let amplitude = cmd.amplitude.clamp(0.0, 1.0);
    let mut burst = synth_waveform(amplitude, p.burst_duration(), p)?;
    if polarity < 0 {
        burst.negate();
    }
    let out = DeviceOutput { realized_angle: rotor.angle, target_angle: target, amplitude, polarity, burst };
    Ok((rotor, out))
}

/// Device service state: rotor plus waveform parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    rotor: RotorState,
    params: WaveformParams,
}

impl DeviceModel {
    pub fn new(rotor: RotorState, params: WaveformParams) -> Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self { rotor, params })
    }

    pub fn rotor(&self) -> &RotorState {
        &self.rotor
    }

    pub fn step(&mut self, cmd: HapticCommand, now: f64) -> Result<DeviceOutput, DeviceError> {
        let (rotor, out) = device_step(self.rotor, cmd, now, &self.params)?;
        self.rotor = rotor;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Servo speed limit in degrees per second.
    pub max_speed_deg_s: f64,
    pub travel: RotorTravel,
    pub waveform: WaveformParams,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { max_speed_deg_s: 600.0, travel: RotorTravel::Full, waveform: WaveformParams::default() }
    }
}

impl DeviceConfig {
    pub fn build(&self) -> Result<DeviceModel, ConfigError> {
        let rotor = RotorState::new(self.max_speed_deg_s.to_radians(), self.travel)?;
        DeviceModel::new(rotor, self.waveform)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rotor(limit: f64) -> RotorState {
        RotorState::new(limit, RotorTravel::Full).unwrap()
    }

    #[test]
    fn converges_with_large_dt() {
        let s = step_rotor(rotor(10.0), FRAC_PI_2, 10.0).unwrap();
        assert_eq!(s.angle, FRAC_PI_2);
    }

    #[test]
    fn crosses_pi_the_short_way() {
        let mut s = rotor(400f64.to_radians());
        s.angle = 170f64.to_radians();
        let target = (-170f64).to_radians();
        // Oracle: both candidate signed distances, pick the smaller magnitude.
        let ccw = (target - s.angle).rem_euclid(2.0 * PI);
        let cw = ccw - 2.0 * PI;
        let shortest = if ccw.abs() <= cw.abs() { ccw } else { cw };
        assert!((shortest - 20f64.to_radians()).abs() < 1e-12);
        let next = step_rotor(s, target, 0.1).unwrap();
        assert!((next.angle - target).abs() < 1e-12);
    }

    #[test]
    fn rate_limited_move() {
        let s = step_rotor(rotor(1.0), PI, 0.5).unwrap();
        assert!((s.angle.abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn time_regression_rejected() {
        let mut s = rotor(1.0);
        s.last_update = 2.0;
        assert!(step_rotor(s, 0.0, 1.0).is_err());
    }

    #[test]
    fn half_travel_stays_in_range_and_flips_polarity() {
        let r = RotorState::new(100.0, RotorTravel::Half).unwrap();
        let p = WaveformParams::default();
        let (r, out) = device_step(r, HapticCue::new(-FRAC_PI_2, 1.0), 1.0, &p).unwrap();
        assert_eq!(out.polarity, -1);
        assert!((r.angle - FRAC_PI_2).abs() < 1e-12);
        assert!(out.burst.samples[0] > 0.0);
        let (r, out) = device_step(r, HapticCue::new(-PI, 1.0), 2.0, &p).unwrap();
        assert_eq!(out.polarity, -1);
        assert_eq!(r.angle, 0.0);
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let buf = synth_waveform(0.0, 0.1, &WaveformParams::default()).unwrap();
        assert_eq!(buf.samples.len(), 800);
        assert!(buf.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn length_arithmetic() {
        let buf = synth_waveform(0.5, 0.1, &WaveformParams::default()).unwrap();
        assert_eq!(buf.samples.len(), 800);
        let buf = synth_waveform(0.5, 0.0123, &WaveformParams::default()).unwrap();
        assert_eq!(buf.samples.len(), 98);
    }

    #[test]
    fn slope_ratio_matches_asymmetry() {
        let buf = synth_waveform(1.0, 0.1, &WaveformParams::default()).unwrap();
        // Finite-difference oracle over consecutive samples.
        let diffs: Vec<f64> = buf.samples.windows(2).map(|w| w[1] - w[0]).collect();
        let up = diffs.iter().cloned().fold(f64::MIN, f64::max);
        let down = diffs.iter().cloned().fold(f64::MAX, f64::min).abs();
        assert!(((up / down) / 3.0 - 1.0).abs() < 0.02, "ratio {}", up / down);
    }

    #[test]
    fn periods_have_zero_mean_and_exact_peak() {
        for ratio in [1.5, 3.0, 7.0, 10.0] {
            let p = WaveformParams { asymmetry_ratio: ratio, ..Default::default() };
            let buf = synth_waveform(0.8, 0.05, &p).unwrap();
            let n = p.period_samples();
            for chunk in buf.samples.chunks_exact(n) {
                let mean = chunk.iter().sum::<f64>() / n as f64;
                assert!(mean.abs() <= 1e-6, "ratio {ratio}: mean {mean}");
            }
            assert_eq!(buf.peak(), 0.8);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(WaveformParams::new(170.0, 1000.0, 3.0, 1).is_err());
        assert!(WaveformParams::new(170.0, 8000.0, 1.0, 1).is_err());
        assert!(WaveformParams::new(170.0, 8000.0, 11.0, 1).is_err());
        assert!(WaveformParams::new(170.0, 8000.0, 3.0, 0).is_err());
        let p = WaveformParams::default();
        assert!(matches!(synth_waveform(1.5, 0.1, &p), Err(DeviceError::Amplitude(_))));
        assert!(matches!(synth_waveform(0.5, 0.0, &p), Err(DeviceError::Duration(_))));
    }

    #[test]
    fn silent_command_still_turns_rotor() {
        let mut dev = DeviceConfig::default().build().unwrap();
        let out = dev.step(HapticCue::new(1.0, 0.0), 1.0).unwrap();
        assert_eq!(out.realized_angle, 1.0);
        assert!(out.burst.samples.iter().all(|&s| s == 0.0));
    }
}
