//! The tick body of the node graph, free of any I/O.
//!
//! [`EpisodeDriver`] owns one session plus the retargeting state and turns
//! hand poses into ticks. The threaded graph and the single-threaded
//! lockstep schedule both call exactly these methods, which is what makes
//! their logs identical.

use compass_core::metrics::{EpisodeLog, EventKind};
use compass_core::retarget::{retarget, HandPose, RetargetState};
use compass_core::session::{Session, SessionError, SessionSpec};
use compass_core::vec3::Vec3;
use serde_json::value::RawValue;

use crate::envelope::Kind;
use crate::messages::{CueMsg, TelemetryMsg};

/// A kind and payload ready to be stamped with seq and time.
pub type Outgoing = (Kind, Box<RawValue>);

fn raw<T: serde::Serialize>(v: &T) -> Box<RawValue> {
    serde_json::value::to_raw_value(v).expect("graph payloads serialize to JSON")
}

pub struct EpisodeDriver {
    session: Session,
    retarget: RetargetState,
    latest: Option<HandPose>,
    events_sent: usize,
}

impl EpisodeDriver {
    pub fn new(spec: &SessionSpec, retarget_scale: f64) -> Result<Self, compass_core::error::ConfigError> {
        let session = Session::new(spec)?;
        let retarget = RetargetState::new(retarget_scale, spec.task.max_step)?;
        Ok(Self { session, retarget, latest: None, events_sent: 0 })
    }

    /// Messages describing the reset state.
    pub fn initial_outputs(&mut self) -> Vec<Outgoing> {
        self.outputs()
    }

    /// Latest pose wins; older unsampled poses are dropped.
    pub fn set_pose(&mut self, pose: HandPose) {
        self.latest = Some(pose);
    }

    /// Advances one tick using the latest pose. Without any pose yet the
    /// end effector holds still.
    pub fn tick(&mut self) -> Result<Vec<Outgoing>, SessionError> {
        let action = match &self.latest {
            Some(p) => retarget(p, &mut self.retarget),
            None => Vec3::ZERO,
        };
        self.session.tick(action)?;
        Ok(self.outputs())
    }

    fn outputs(&mut self) -> Vec<Outgoing> {
        let last = self.session.last();
        let t = last.frame.t;
        let mut out = vec![
            (Kind::SensorFrame, raw(&last.frame)),
            (Kind::HapticCmd, raw(&CueMsg { t, cue: last.cue })),
            (Kind::DeviceTelemetry, raw(&TelemetryMsg { t, device: (&last.device).into() })),
        ];
        out.extend(self.new_events());
        out
    }

    fn new_events(&mut self) -> Vec<Outgoing> {
        let events = &self.session.log().events[self.events_sent..];
        self.events_sent += events.len();
        events.iter().map(|e| (Kind::EpisodeEvent, raw(e))).collect()
    }

    /// Records a skipped-sequence event in the log.
    pub fn note_gap(&mut self, stream: String, expected: u64, got: u64) -> Vec<Outgoing> {
        self.session.note(EventKind::SeqGap { stream, expected, got });
        self.new_events()
    }

    /// Ends the episode as incomplete.
    pub fn abort(&mut self, reason: &str) -> Vec<Outgoing> {
        self.session.abort(reason);
        self.new_events()
    }

    pub fn is_finished(&self) -> bool {
        self.session.is_finished()
    }

    pub fn log(&self) -> &EpisodeLog {
        self.session.log()
    }

    pub fn into_log(self) -> EpisodeLog {
        self.session.into_log()
    }
}

/// Reason recorded when a pose stream ends before the episode does.
pub const STREAM_ENDED: &str = "client disconnected";

/// Runs the graph's tick body on one thread: every pose is ingested and
/// immediately followed by one tick, exactly as the driven graph does
/// when a single client streams `poses` and then disconnects.
pub fn run_lockstep(spec: &SessionSpec, retarget_scale: f64, poses: &[HandPose]) -> Result<EpisodeLog, SessionError> {
    let mut d = EpisodeDriver::new(spec, retarget_scale)?;
    d.initial_outputs();
    for pose in poses {
        if d.is_finished() {
            break;
        }
        d.set_pose(*pose);
        d.tick()?;
    }
    if !d.is_finished() {
        d.abort(STREAM_ENDED);
    }
    Ok(d.into_log())
}
