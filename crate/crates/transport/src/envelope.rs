//! The wire envelope and its two codecs.
//!
//! Every message is `{seq, t_send, kind, payload}`. The text codec writes
//! one compact JSON object per line; the binary codec writes a length
//! prefix followed by the same fields. Payload bytes are carried verbatim,
//! so an envelope of a kind this build does not know survives a decode and
//! re-encode unchanged.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::DecodeError;

/// Message kind. Unrecognized names are kept as [`Kind::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    HandPose,
    SensorFrame,
    HapticCmd,
    DeviceTelemetry,
    EpisodeEvent,
    LatencyProbe,
    /// Applied end-effector displacement; used in episode log files.
    Action,
    /// Episode header; first line of an episode log file.
    EpisodeMeta,
    Other(String),
}

impl Kind {
    pub const KNOWN: [Kind; 8] = [
        Kind::HandPose,
        Kind::SensorFrame,
        Kind::HapticCmd,
        Kind::DeviceTelemetry,
        Kind::EpisodeEvent,
        Kind::LatencyProbe,
        Kind::Action,
        Kind::EpisodeMeta,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            Kind::HandPose => "hand_pose",
            Kind::SensorFrame => "sensor_frame",
            Kind::HapticCmd => "haptic_cmd",
            Kind::DeviceTelemetry => "device_telemetry",
            Kind::EpisodeEvent => "episode_event",
            Kind::LatencyProbe => "latency_probe",
            Kind::Action => "action",
            Kind::EpisodeMeta => "episode_meta",
            Kind::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Kind {
        Kind::KNOWN.iter().find(|k| k.as_str() == s).cloned().unwrap_or_else(|| Kind::Other(s.to_string()))
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Kind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Kind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Kind::parse(&s))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    /// Strictly increasing per sender and kind.
    pub seq: u64,
    /// Sender's monotonic clock (µs).
    pub t_send: u64,
    pub kind: Kind,
    /// Kind-specific body, kept as the exact JSON text it arrived as.
    pub payload: Box<RawValue>,
}

impl PartialEq for Envelope {
    fn eq(&self, o: &Self) -> bool {
        self.seq == o.seq && self.t_send == o.t_send && self.kind == o.kind && self.payload.get() == o.payload.get()
    }
}

impl Envelope {
    /// Builds an envelope around a serializable body.
    pub fn new<T: Serialize>(seq: u64, t_send: u64, kind: Kind, body: &T) -> Self {
        let payload = serde_json::value::to_raw_value(body).expect("payload types serialize to JSON");
        Self { seq, t_send, kind, payload }
    }

    /// Parses the payload as `T`.
    pub fn body<T: DeserializeOwned>(&self) -> Result<T, serde_json::Error> {
        serde_json::from_str(self.payload.get())
    }
}

/// One envelope as a compact JSON line, newline included.
pub fn encode_json(e: &Envelope) -> Vec<u8> {
    let mut out = serde_json::to_vec(e).expect("envelopes serialize to JSON");
    out.push(b'\n');
    out
}

/// Decodes exactly one line. `bytes` must end with the newline; a missing
/// newline is reported as truncation.
pub fn decode_json(bytes: &[u8]) -> Result<Envelope, DecodeError> {
    decode_json_at(bytes, 0)
}

/// Like [`decode_json`], with error offsets shifted by `base`.
pub fn decode_json_at(bytes: &[u8], base: u64) -> Result<Envelope, DecodeError> {
    let Some((&b'\n', body)) = bytes.split_last() else {
        return Err(DecodeError::Truncated { offset: base + bytes.len() as u64, needed: 1 });
    };
    if let Some(i) = body.iter().position(|&b| b == b'\n') {
        return Err(DecodeError::Malformed { offset: base + i as u64, reason: "embedded newline".into() });
    }
    serde_json::from_slice(body).map_err(|e| {
        let offset = base + byte_offset(body, e.line(), e.column());
        if e.is_eof() {
            DecodeError::Truncated { offset, needed: 1 }
        } else {
            DecodeError::Malformed { offset, reason: e.to_string() }
        }
    })
}

/// serde_json reports 1-based line and column; turn that into a byte index.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> u64 {
    let mut start = 0usize;
    for _ in 1..line {
        match bytes[start..].iter().position(|&b| b == b'\n') {
            Some(i) => start += i + 1,
            None => break,
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len()) as u64
}

/// Splits a buffer of JSON lines, decoding each one.
pub fn decode_json_lines(bytes: &[u8]) -> Result<Vec<Envelope>, DecodeError> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i + 1);
        out.push(decode_json_at(&bytes[pos..end], pos as u64)?);
        pos = end;
    }
    Ok(out)
}

/// Binary frame: `u32` body length, then `u64` seq, `u64` t_send, `u16`
/// kind length, kind bytes and the payload JSON, all little-endian.
pub fn encode_binary(e: &Envelope) -> Vec<u8> {
    let kind = e.kind.as_str().as_bytes();
    let payload = e.payload.get().as_bytes();
    let body_len = 8 + 8 + 2 + kind.len() + payload.len();
    let mut out = Vec::with_capacity(4 + body_len);
    out.extend_from_slice(&(body_len as u32).to_le_bytes());
    out.extend_from_slice(&e.seq.to_le_bytes());
    out.extend_from_slice(&e.t_send.to_le_bytes());
    out.extend_from_slice(&(kind.len() as u16).to_le_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(payload);
    out
}

/// Decodes one binary frame and returns it with the number of bytes used.
pub fn decode_binary(bytes: &[u8]) -> Result<(Envelope, usize), DecodeError> {
    let mut r = Cursor { bytes, pos: 0 };
    let body_len = u32::from_le_bytes(r.take::<4>()?) as usize;
    let end = 4 + body_len;
    if bytes.len() < end {
        return Err(DecodeError::Truncated { offset: bytes.len() as u64, needed: (end - bytes.len()) as u64 });
    }
    let mut r = Cursor { bytes: &bytes[..end], pos: 4 };
    let seq = u64::from_le_bytes(r.take::<8>()?);
    let t_send = u64::from_le_bytes(r.take::<8>()?);
    let kind_len = u16::from_le_bytes(r.take::<2>()?) as usize;
    let kind_at = r.pos;
    let kind = std::str::from_utf8(r.slice(kind_len)?).map_err(|e| DecodeError::Malformed {
        offset: (kind_at + e.valid_up_to()) as u64,
        reason: "kind is not UTF-8".into(),
    })?;
    if kind.is_empty() {
        return Err(DecodeError::Malformed { offset: kind_at as u64, reason: "empty kind".into() });
    }
    let kind = Kind::parse(kind);
    let payload_at = r.pos;
    let text = std::str::from_utf8(&bytes[payload_at..end]).map_err(|e| DecodeError::Malformed {
        offset: (payload_at + e.valid_up_to()) as u64,
        reason: "payload is not UTF-8".into(),
    })?;
    let payload: Box<RawValue> = serde_json::from_str(text).map_err(|e| DecodeError::Malformed {
        offset: payload_at as u64 + byte_offset(text.as_bytes(), e.line(), e.column()),
        reason: e.to_string(),
    })?;
    if payload.get().len() != text.len() {
        return Err(DecodeError::Malformed {
            offset: payload_at as u64,
            reason: "payload has surrounding whitespace".into(),
        });
    }
    Ok((Envelope { seq, t_send, kind, payload }, end))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn slice(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.bytes.len() < self.pos + n {
            return Err(DecodeError::Truncated {
                offset: self.bytes.len() as u64,
                needed: (self.pos + n - self.bytes.len()) as u64,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.slice(N)?.try_into().expect("slice of length N"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Envelope {
        Envelope::new(3, 1_500, Kind::HapticCmd, &json!({"theta": 0.5, "amplitude": 0.25}))
    }

    #[test]
    fn json_round_trip() {
        let e = sample();
        let bytes = encode_json(&e);
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            "{\"seq\":3,\"t_send\":1500,\"kind\":\"haptic_cmd\",\"payload\":{\"amplitude\":0.25,\"theta\":0.5}}\n"
        );
        assert_eq!(decode_json(&bytes).unwrap(), e);
    }

    #[test]
    fn binary_round_trip() {
        let e = sample();
        let bytes = encode_binary(&e);
        let (back, used) = decode_binary(&bytes).unwrap();
        assert_eq!(back, e);
        assert_eq!(used, bytes.len());
    }

    #[test]
    fn unknown_kind_is_kept() {
        let line = b"{\"seq\":1,\"t_send\":2,\"kind\":\"gaze_ray\",\"payload\":{\"v\":[1,2.50,3]}}\n";
        let e = decode_json(line).unwrap();
        assert_eq!(e.kind, Kind::Other("gaze_ray".into()));
        assert_eq!(encode_json(&e), line.to_vec());
    }

    #[test]
    fn errors_carry_offsets() {
        let bytes = encode_json(&sample());
        assert!(matches!(decode_json(&bytes[..bytes.len() - 1]), Err(DecodeError::Truncated { .. })));
        let bad = b"{\"seq\":x}\n";
        match decode_json(bad) {
            Err(DecodeError::Malformed { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{other:?}"),
        }
        let bin = encode_binary(&sample());
        assert!(matches!(decode_binary(&bin[..2]), Err(DecodeError::Truncated { offset: 2, needed: 2 })));
        assert!(matches!(decode_binary(&bin[..bin.len() - 1]), Err(DecodeError::Truncated { needed: 1, .. })));
    }

    #[test]
    fn line_splitting_reports_absolute_offsets() {
        let mut buf = encode_json(&sample());
        let first = buf.len() as u64;
        buf.extend_from_slice(b"{\"seq\":true}\n");
        match decode_json_lines(&buf) {
            Err(DecodeError::Malformed { offset, .. }) => assert!(offset >= first),
            other => panic!("{other:?}"),
        }
    }
}
