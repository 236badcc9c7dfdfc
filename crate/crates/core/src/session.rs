//! One teleoperation episode: simulator, tactile mapper and device model
//! advanced together, with everything appended to an [`EpisodeLog`].
//!
//! This is the tick body shared by the batch experiment runner, the policy
//! rollouts and the networked node graph, so all of them produce logs with
//! the same layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceConfig, DeviceError, DeviceModel, DeviceOutput, DeviceTelemetry};
use crate::error::{ConfigError, MonotonicityError, SimError};
use crate::frame::SensorFrame;
use crate::haptic::{Condition, HapticCue, PipelineConfig, TactileMapper};
use crate::metrics::{EpisodeLog, EpisodeMeta, EventKind, LogEvent};
use crate::sim::{sim_reset, SimState, TaskConfig, TaskEvent};
use crate::vec3::{Force3, Vec3};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Time(#[from] MonotonicityError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episode already finished")]
    Finished,
}

/// Everything needed to start an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub task: TaskConfig,
    pub pipeline: PipelineConfig,
    pub device: DeviceConfig,
    pub condition: Condition,
    pub seed: u64,
    /// Resolved run configuration, copied verbatim into the log header.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl SessionSpec {
    /// Task preset with the default device rotation for that task.
    pub fn for_task(task: TaskConfig, condition: Condition, seed: u64) -> Self {
        let pipeline = PipelineConfig { rotation: task.default_device_rotation(), ..PipelineConfig::default() };
        Self { task, pipeline, device: DeviceConfig::default(), condition, seed, config: serde_json::Value::Null }
    }
}

/// What the operator receives after one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub frame: SensorFrame,
    pub cue: HapticCue,
    pub device: DeviceOutput,
    pub events: Vec<TaskEvent>,
}

#[derive(Debug, Clone)]
pub struct Session {
    sim: SimState,
    mapper: TactileMapper,
    device: DeviceModel,
    log: EpisodeLog,
    last: TickOutput,
    finished: bool,
}

impl Session {
    pub fn new(spec: &SessionSpec) -> Result<Self, ConfigError> {
        let sim = sim_reset(&spec.task, spec.seed)?;
        let mut mapper = TactileMapper::new(spec.pipeline, spec.condition.cue_mode())?;
        let mut device = spec.device.build()?;
        let meta = EpisodeMeta {
            task: spec.task.task_kind,
            condition: spec.condition,
            seed: spec.seed,
            config: spec.config.clone(),
        };
        let mut log = EpisodeLog::new(meta);
        let frame = sim.observe();
        // Fresh mapper and rotor at t = 0 cannot see time go backwards.
        let cue = mapper.step(&frame).expect("first frame");
        let out = device.step(cue, frame.t).expect("first command");
        log.frames.push(frame);
        log.cues.push(cue);
        log.telemetry.push(DeviceTelemetry::from(&out));
        let last = TickOutput { frame, cue, device: out, events: Vec::new() };
        Ok(Self { sim, mapper, device, log, last, finished: false })
    }

    pub fn sim(&self) -> &SimState {
        &self.sim
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn into_log(self) -> EpisodeLog {
        self.log
    }

    /// Output of the most recent tick (or of the reset).
    pub fn last(&self) -> &TickOutput {
        &self.last
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Baseline-subtracted tactile force for the latest frame (sensor frame).
    pub fn tactile_delta(&self) -> Force3 {
        self.mapper.delta(self.last.frame.tactile)
    }

    /// Applies one end-effector displacement and runs the feedback path.
    pub fn tick(&mut self, action: Vec3) -> Result<&TickOutput, SessionError> {
        if self.finished {
            return Err(SessionError::Finished);
        }
        let dt = self.sim.cfg.dt;
        let (sim, frame, events) = self.sim.step(action, dt)?;
        let cue = self.mapper.step(&frame)?;
        let out = self.device.step(cue, frame.t)?;
        self.sim = sim;
        self.log.actions.push(action);
        self.log.frames.push(frame);
        self.log.cues.push(cue);
        self.log.telemetry.push(DeviceTelemetry::from(&out));
        for e in &events {
            self.log.events.push(LogEvent { t: frame.t, kind: EventKind::from(*e) });
        }
        self.finished = self.sim.is_terminal();
        self.last = TickOutput { frame, cue, device: out, events };
        Ok(&self.last)
    }

    /// Ends the episode early and records why. No-op once finished.
    pub fn abort(&mut self, reason: &str) {
        if self.finished {
            return;
        }
        self.log
            .events
            .push(LogEvent { t: self.last.frame.t, kind: EventKind::Aborted { reason: reason.to_string() } });
        self.finished = true;
    }

    /// Records a non-terminal event at the current time.
    pub fn note(&mut self, kind: EventKind) {
        self.log.events.push(LogEvent { t: self.last.frame.t, kind });
    }
}
