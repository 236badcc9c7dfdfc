//! Core of a directional haptic teleoperation stack.
//!
//! - [`haptic`]: tactile baseline tracking and cue rendering (θ, A)
//! - [`device`]: rotor and asymmetric-waveform device model
//! - [`sim`]: seeded quasi-static contact simulator for the three tasks
//! - [`metrics`] and [`afc`]: episode metrics and forced-choice analysis
//! - [`session`]: one episode with the full feedback path, logged
//! - [`operator`] and [`experiment`]: scripted teleoperators and batches
//! - [`retarget`]: hand pose to end-effector displacement
//! - [`policy`]: behavior cloning with action chunking

pub mod afc;
pub mod device;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod haptic;
pub mod metrics;
pub mod operator;
pub mod policy;
pub mod retarget;
pub mod session;
pub mod sim;
pub mod vec3;

pub use error::{ConfigError, MetricsError, MonotonicityError, PolicyError, SimError};
pub use frame::SensorFrame;
pub use haptic::{Condition, HapticCue, PipelineConfig};
pub use vec3::{Force2, Force3, Rotation3, Torque3, Vec3, Wrench};
