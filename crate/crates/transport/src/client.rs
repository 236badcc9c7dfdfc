//! Minimal TCP client for scripted sessions, probes and tests.

use std::net::SocketAddr;
use std::time::Instant;

use compass_core::metrics::LogEvent;
use compass_core::retarget::HandPose;
use serde::Serialize;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;

use crate::envelope::{decode_json_at, encode_json, Envelope, Kind};
use crate::error::DecodeError;
use crate::seq::Sequencer;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("server closed the connection")]
    Closed,
}

/// Receiving half: decodes newline-delimited envelopes.
pub struct Receiver {
    reader: BufReader<OwnedReadHalf>,
    offset: u64,
    line: Vec<u8>,
}

impl Receiver {
    /// Next envelope, or `None` at a clean end of stream.
    pub async fn recv(&mut self) -> Result<Option<Envelope>, ClientError> {
        self.line.clear();
        let n = self.reader.read_until(b'\n', &mut self.line).await?;
        if n == 0 {
            return Ok(None);
        }
        let env = decode_json_at(&self.line, self.offset)?;
        self.offset += n as u64;
        Ok(Some(env))
    }
}

/// Sending half: numbers envelopes per kind and stamps client time.
pub struct Sender {
    writer: OwnedWriteHalf,
    seq: Sequencer,
    clock: Instant,
}

impl Sender {
    pub fn micros(&self) -> u64 {
        self.clock.elapsed().as_micros() as u64
    }

    pub async fn send<T: Serialize>(&mut self, kind: Kind, body: &T) -> Result<u64, ClientError> {
        let seq = self.seq.next(&kind);
        let env = Envelope::new(seq, self.micros(), kind, body);
        self.send_raw(&env).await?;
        Ok(seq)
    }

    /// Sends an envelope as is, without renumbering.
    pub async fn send_raw(&mut self, env: &Envelope) -> Result<(), ClientError> {
        self.writer.write_all(&encode_json(env)).await?;
        Ok(())
    }

    pub async fn close(mut self) -> Result<(), ClientError> {
        self.writer.shutdown().await?;
        Ok(())
    }
}

pub async fn connect(addr: SocketAddr) -> Result<(Sender, Receiver), ClientError> {
    let stream = TcpStream::connect(addr).await?;
    stream.set_nodelay(true)?;
    let (r, w) = stream.into_split();
    Ok((
        Sender { writer: w, seq: Sequencer::default(), clock: Instant::now() },
        Receiver { reader: BufReader::new(r), offset: 0, line: Vec::new() },
    ))
}

/// Streams `poses` and collects everything the server sends until the
/// episode's terminal event, then disconnects.
pub async fn drive_episode(addr: SocketAddr, poses: &[HandPose]) -> Result<Vec<Envelope>, ClientError> {
    let (mut tx, mut rx) = connect(addr).await?;
    let poses = poses.to_vec();
    let sender = tokio::spawn(async move {
        for p in &poses {
            tx.send(Kind::HandPose, p).await?;
        }
        Ok::<_, ClientError>(tx)
    });
    let mut got = Vec::new();
    loop {
        let env = rx.recv().await?.ok_or(ClientError::Closed)?;
        let terminal =
            env.kind == Kind::EpisodeEvent && env.body::<LogEvent>().map(|e| e.kind.is_terminal()).unwrap_or(false);
        got.push(env);
        if terminal {
            break;
        }
    }
    let tx = sender.await.map_err(|e| std::io::Error::other(e.to_string()))??;
    tx.close().await?;
    Ok(got)
}
