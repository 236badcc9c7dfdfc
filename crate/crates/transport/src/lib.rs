//! Wire protocol, episode log files and the node graph that connects an
//! operator to the simulator, tactile mapping and device model.
//!
//! - [`envelope`]: the `{seq, t_send, kind, payload}` envelope, JSON-lines and binary codecs
//! - [`messages`]: payload bodies
//! - [`seq`]: per-stream sequence numbering and gap detection
//! - [`log`]: gzip JSON-lines episode logs
//! - [`driver`]: the I/O-free tick body and the lockstep schedule
//! - [`graph`]: TCP and web-socket service
//! - [`client`]: scripted TCP client

pub mod client;
pub mod driver;
pub mod envelope;
pub mod error;
pub mod graph;
pub mod log;
pub mod messages;
pub mod seq;

pub use envelope::{decode_binary, decode_json, encode_binary, encode_json, Envelope, Kind};
pub use error::{DecodeError, GraphError, LogError};
