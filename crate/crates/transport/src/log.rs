//! Episode log files: gzip-compressed JSON lines, one envelope per line.
//!
//! The first line is `episode_meta`. Each tick then contributes, in order,
//! the applied `action` (except at reset), the `sensor_frame`, the
//! `haptic_cmd` and the `device_telemetry`, followed by any
//! `episode_event` stamped at or before that frame. `t_send` is the
//! simulation time in microseconds and `seq` counts lines from 0, so a
//! file is a pure function of the log it was written from.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use compass_core::metrics::EpisodeLog;
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use crate::envelope::{decode_json_at, encode_json, Envelope, Kind};
use crate::error::LogError;
use crate::messages::{ActionMsg, CueMsg, LogEvent, SensorFrame, TelemetryMsg};

fn micros(t: f64) -> u64 {
    (t * 1e6).round().max(0.0) as u64
}

/// The envelopes a log file holds, in file order.
pub fn log_envelopes(log: &EpisodeLog) -> Vec<Envelope> {
    let mut out = Vec::new();
    let mut push = |kind: Kind, t: f64, body: &dyn erased::Body| {
        let seq = out.len() as u64;
        out.push(Envelope { seq, t_send: micros(t), kind, payload: body.raw() });
    };
    push(Kind::EpisodeMeta, 0.0, &log.meta);
    let mut events = log.events.iter().peekable();
    for (i, frame) in log.frames.iter().enumerate() {
        if i > 0 {
            if let Some(delta) = log.actions.get(i - 1) {
                push(Kind::Action, frame.t, &ActionMsg { t: frame.t, delta: *delta });
            }
        }
        push(Kind::SensorFrame, frame.t, frame);
        if let Some(cue) = log.cues.get(i) {
            push(Kind::HapticCmd, frame.t, &CueMsg { t: frame.t, cue: *cue });
        }
        if let Some(dev) = log.telemetry.get(i) {
            push(Kind::DeviceTelemetry, frame.t, &TelemetryMsg { t: frame.t, device: *dev });
        }
        while let Some(e) = events.next_if(|e| e.t <= frame.t) {
            push(Kind::EpisodeEvent, e.t, e);
        }
    }
    for e in events {
        push(Kind::EpisodeEvent, e.t, e);
    }
    out
}

/// Serialization without naming the concrete payload type.
mod erased {
    pub trait Body {
        fn raw(&self) -> Box<serde_json::value::RawValue>;
    }
    impl<T: super::Serialize> Body for T {
        fn raw(&self) -> Box<serde_json::value::RawValue> {
            serde_json::value::to_raw_value(self).expect("log payloads serialize to JSON")
        }
    }
}

/// Rebuilds the log from envelopes in file order.
pub fn log_from_envelopes(envs: &[Envelope]) -> Result<EpisodeLog, LogError> {
    let mut log: Option<EpisodeLog> = None;
    for (line, e) in envs.iter().enumerate() {
        let line = line + 1;
        if e.seq != (line - 1) as u64 {
            return Err(LogError::SeqGap { line, expected: (line - 1) as u64, got: e.seq });
        }
        let bad =
            |err: serde_json::Error| LogError::Payload { line, kind: e.kind.to_string(), reason: err.to_string() };
        if e.kind == Kind::EpisodeMeta {
            log = Some(EpisodeLog::new(e.body().map_err(bad)?));
            continue;
        }
        let log = log.as_mut().ok_or(LogError::MissingMeta)?;
        match &e.kind {
            Kind::SensorFrame => log.frames.push(e.body::<SensorFrame>().map_err(bad)?),
            Kind::Action => log.actions.push(e.body::<ActionMsg>().map_err(bad)?.delta),
            Kind::HapticCmd => log.cues.push(e.body::<CueMsg>().map_err(bad)?.cue),
            Kind::DeviceTelemetry => log.telemetry.push(e.body::<TelemetryMsg>().map_err(bad)?.device),
            Kind::EpisodeEvent => log.events.push(e.body::<LogEvent>().map_err(bad)?),
            // Anything else is carried for other readers and skipped here.
            _ => {}
        }
    }
    log.ok_or(LogError::MissingMeta)
}

/// Uncompressed JSON-lines text of a log.
pub fn log_to_json_lines(log: &EpisodeLog) -> Vec<u8> {
    log_envelopes(log).iter().flat_map(encode_json).collect()
}

pub fn write_log_to<W: Write>(w: W, log: &EpisodeLog) -> Result<(), LogError> {
    let mut gz = GzEncoder::new(w, Compression::default());
    for e in log_envelopes(log) {
        gz.write_all(&encode_json(&e))?;
    }
    gz.finish()?.flush()?;
    Ok(())
}

pub fn write_log(path: &Path, log: &EpisodeLog) -> Result<(), LogError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_log_to(BufWriter::new(File::create(path)?), log)
}

pub fn read_log_from<R: std::io::Read>(r: R) -> Result<EpisodeLog, LogError> {
    let mut reader = BufReader::new(GzDecoder::new(r));
    let mut envs = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        let e = decode_json_at(&buf, offset).map_err(|source| LogError::Decode { line: envs.len() + 1, source })?;
        envs.push(e);
        offset += n as u64;
    }
    log_from_envelopes(&envs)
}

pub fn read_log(path: &Path) -> Result<EpisodeLog, LogError> {
    read_log_from(File::open(path)?)
}

/// File name for an episode log inside `dir`.
pub fn log_path(dir: &Path, log: &EpisodeLog, index: usize) -> PathBuf {
    let task =
        serde_json::to_value(log.meta.task).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    dir.join(format!("{task}-{}-seed{}-ep{index:04}.jsonl.gz", log.meta.condition, log.meta.seed))
}
