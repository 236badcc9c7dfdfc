//! The networked node graph.
//!
//! Ingest tasks (one per TCP or web-socket connection) decode envelopes,
//! track sequence numbers, answer latency probes and forward hand poses in
//! arrival order to a single tick loop. The tick loop owns the episode and
//! publishes frames, cues, telemetry and events on a broadcast queue that
//! every connection's writer drains. No state is shared between loops
//! except through these queues.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::routing::get;
use axum::Router;
use compass_core::metrics::{episode_metrics, EpisodeMetrics, EventKind};
use compass_core::retarget::HandPose;
use compass_core::session::SessionSpec;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc};
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use crate::driver::{EpisodeDriver, Outgoing, STREAM_ENDED};
use crate::envelope::{decode_json, encode_json, Envelope, Kind};
use crate::error::GraphError;
use crate::log::{log_path, write_log};
use crate::messages::LatencyProbe;
use crate::seq::{SeqStatus, SeqTracker, Sequencer};

pub const DEFAULT_TCP_PORT: u16 = 7421;
pub const DEFAULT_WS_PORT: u16 = 7422;
pub const DEFAULT_TICK_HZ: f64 = 50.0;

/// Broadcast queue depth; a subscriber further behind than this sees a seq gap.
const BROADCAST_DEPTH: usize = 1 << 14;

/// When the tick loop advances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Pacing {
    /// Fixed-rate wall-clock ticks; each tick samples the latest pose.
    RealTime { tick_hz: f64 },
    /// One tick per received hand pose. Used to replay recorded streams.
    Driven,
}

impl Default for Pacing {
    fn default() -> Self {
        Pacing::RealTime { tick_hz: DEFAULT_TICK_HZ }
    }
}

#[derive(Debug, Clone)]
pub struct GraphConfig {
    pub tcp_addr: SocketAddr,
    /// Web-socket endpoint (`/ws`) and static UI files (`/ui`).
    pub ws_addr: Option<SocketAddr>,
    pub ui_dir: PathBuf,
    pub spec: SessionSpec,
    pub pacing: Pacing,
    pub retarget_scale: f64,
    pub log_dir: PathBuf,
    /// Stop after this many episodes; `None` runs until shut down.
    pub max_episodes: Option<usize>,
}

impl GraphConfig {
    pub fn new(spec: SessionSpec, log_dir: PathBuf) -> Self {
        Self {
            tcp_addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_TCP_PORT)),
            ws_addr: Some(SocketAddr::from(([127, 0, 0, 1], DEFAULT_WS_PORT))),
            ui_dir: PathBuf::from("ui"),
            spec,
            pacing: Pacing::default(),
            retarget_scale: compass_core::experiment::DEFAULT_RETARGET_SCALE,
            log_dir,
            max_episodes: None,
        }
    }
}

/// Outcome of one served episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub index: usize,
    pub seed: u64,
    pub log_path: PathBuf,
    pub terminal: Option<EventKind>,
    /// False when the episode was aborted.
    pub complete: bool,
    pub metrics: EpisodeMetrics,
}

enum Inbound {
    Pose { peer: u64, pose: HandPose },
    Gap { peer: u64, kind: Kind, expected: u64, got: u64 },
    Closed { peer: u64 },
}

/// Time source shared by all loops; only used for `t_send` stamps.
#[derive(Clone, Copy)]
struct Clock(Instant);

impl Clock {
    fn micros(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }
}

#[derive(Clone)]
struct Shared {
    inbound: mpsc::UnboundedSender<Inbound>,
    outbound: broadcast::Sender<Arc<Envelope>>,
    peers: Arc<AtomicU64>,
    clock: Clock,
}

pub struct NodeGraph {
    cfg: GraphConfig,
    tcp: TcpListener,
    ws: Option<TcpListener>,
}

impl NodeGraph {
    pub async fn bind(cfg: GraphConfig) -> Result<Self, GraphError> {
        cfg.spec.task.validate()?;
        cfg.spec.pipeline.validate()?;
        if let Pacing::RealTime { tick_hz } = cfg.pacing {
            if !(tick_hz.is_finite() && tick_hz > 0.0) {
                return Err(GraphError::Config(compass_core::error::ConfigError::Param {
                    name: "tick_hz",
                    reason: "must be > 0".into(),
                }));
            }
        }
        let bind = |addr: SocketAddr| async move {
            TcpListener::bind(addr).await.map_err(|source| GraphError::Bind { addr: addr.to_string(), source })
        };
        let tcp = bind(cfg.tcp_addr).await?;
        let ws = match cfg.ws_addr {
            Some(a) => Some(bind(a).await?),
            None => None,
        };
        Ok(Self { cfg, tcp, ws })
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp.local_addr().expect("bound listener has an address")
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws.as_ref().map(|l| l.local_addr().expect("bound listener has an address"))
    }

    /// Serves until `max_episodes` have finished or `shutdown` resolves.
    /// An episode still running at shutdown is aborted and its log kept.
    pub async fn run<F, C>(self, shutdown: F, mut on_episode: C) -> Result<Vec<EpisodeReport>, GraphError>
    where
        F: Future<Output = ()>,
        C: FnMut(&EpisodeReport),
    {
        let (in_tx, mut in_rx) = mpsc::unbounded_channel();
        let (out_tx, _) = broadcast::channel(BROADCAST_DEPTH);
        let shared = Shared {
            inbound: in_tx,
            outbound: out_tx.clone(),
            peers: Arc::new(AtomicU64::new(0)),
            clock: Clock(Instant::now()),
        };

        let mut tasks: Vec<JoinHandle<()>> = Vec::new();
        let tcp_shared = shared.clone();
        let tcp = self.tcp;
        tasks.push(tokio::spawn(async move {
            while let Ok((stream, _)) = tcp.accept().await {
                let peer = tcp_shared.peers.fetch_add(1, Ordering::Relaxed);
                tokio::spawn(serve_tcp(stream, peer, tcp_shared.clone()));
            }
        }));
        if let Some(ws) = self.ws {
            let app = Router::new()
                .route("/ws", get(ws_upgrade))
                .nest_service("/ui", ServeDir::new(&self.cfg.ui_dir))
                .with_state(shared.clone());
            tasks.push(tokio::spawn(async move {
                let _ = axum::serve(ws, app).await;
            }));
        }
        drop(shared);

        let cfg = self.cfg;
        let mut seq = Sequencer::default();
        let clock = Clock(Instant::now());
        let publish = |seq: &mut Sequencer, outs: Vec<Outgoing>| {
            for (kind, payload) in outs {
                let env = Envelope { seq: seq.next(&kind), t_send: clock.micros(), kind, payload };
                // No subscribers is fine; the log still records everything.
                let _ = out_tx.send(Arc::new(env));
            }
        };
        let mut ticker = match cfg.pacing {
            Pacing::RealTime { tick_hz } => {
                let mut i = tokio::time::interval(Duration::from_secs_f64(1.0 / tick_hz));
                i.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
                Some(i)
            }
            Pacing::Driven => None,
        };

        struct Active {
            driver: EpisodeDriver,
            controller: u64,
            seed: u64,
        }
        let mut active: Option<Active> = None;
        let mut reports = Vec::new();
        tokio::pin!(shutdown);

        let limit_reached = |n: usize| cfg.max_episodes.is_some_and(|m| n >= m);
        let mut finish = |active: &mut Option<Active>, reports: &mut Vec<EpisodeReport>| -> Result<(), GraphError> {
            let Some(a) = active.take() else { return Ok(()) };
            let index = reports.len();
            let log = a.driver.into_log();
            let path = log_path(&cfg.log_dir, &log, index);
            write_log(&path, &log)?;
            let metrics = episode_metrics(&log, cfg.spec.pipeline.contact_threshold, &cfg.spec.task.lever)
                .expect("episodes start with a reset frame");
            let terminal = log.terminal_event().map(|e| e.kind.clone());
            let complete = !matches!(terminal, Some(EventKind::Aborted { .. }) | None);
            let report = EpisodeReport { index, seed: a.seed, log_path: path, terminal, complete, metrics };
            on_episode(&report);
            reports.push(report);
            Ok(())
        };

        while !limit_reached(reports.len()) {
            let tick_due = async {
                match ticker.as_mut() {
                    Some(t) => {
                        t.tick().await;
                    }
                    None => std::future::pending::<()>().await,
                }
            };
            tokio::select! {
                biased;
                _ = &mut shutdown => {
                    if let Some(a) = active.as_mut() {
                        publish(&mut seq, a.driver.abort("interrupted"));
                    }
                    finish(&mut active, &mut reports)?;
                    break;
                }
                msg = in_rx.recv() => {
                    let Some(msg) = msg else { break };
                    match msg {
                        Inbound::Pose { peer, pose } => {
                            if active.is_none() {
                                let seed = cfg.spec.seed.wrapping_add(reports.len() as u64);
                                let spec = SessionSpec { seed, ..cfg.spec.clone() };
                                let mut driver = EpisodeDriver::new(&spec, cfg.retarget_scale)?;
                                publish(&mut seq, driver.initial_outputs());
                                active = Some(Active { driver, controller: peer, seed });
                            }
                            let a = active.as_mut().expect("started above");
                            a.driver.set_pose(pose);
                            if cfg.pacing == Pacing::Driven {
                                publish(&mut seq, a.driver.tick()?);
                                if a.driver.is_finished() {
                                    finish(&mut active, &mut reports)?;
                                }
                            }
                        }
                        Inbound::Gap { peer, kind, expected, got } => {
                            if let Some(a) = active.as_mut() {
                                publish(&mut seq, a.driver.note_gap(format!("peer{peer}/{kind}"), expected, got));
                            }
                        }
                        Inbound::Closed { peer } => {
                            if let Some(a) = active.as_mut().filter(|a| a.controller == peer) {
                                publish(&mut seq, a.driver.abort(STREAM_ENDED));
                                finish(&mut active, &mut reports)?;
                            }
                        }
                    }
                }
                _ = tick_due => {
                    if let Some(a) = active.as_mut() {
                        publish(&mut seq, a.driver.tick()?);
                        if a.driver.is_finished() {
                            finish(&mut active, &mut reports)?;
                        }
                    }
                }
            }
        }
        for t in tasks {
            t.abort();
        }
        Ok(reports)
    }
}

/// Handles one decoded envelope from `peer`. Returns a probe echo, if any.
fn ingest(
    env: Envelope,
    peer: u64,
    tracker: &mut SeqTracker,
    echo_seq: &mut Sequencer,
    shared: &Shared,
) -> Option<Envelope> {
    match tracker.observe(&env.kind, env.seq) {
        SeqStatus::Gap { expected, got } => {
            let _ = shared.inbound.send(Inbound::Gap { peer, kind: env.kind.clone(), expected, got });
        }
        // Replayed or reordered envelopes are dropped rather than applied twice.
        SeqStatus::Stale { .. } => return None,
        SeqStatus::InOrder => {}
    }
    match env.kind {
        Kind::HandPose => {
            if let Ok(pose) = env.body::<HandPose>() {
                if pose.validate().is_ok() {
                    let _ = shared.inbound.send(Inbound::Pose { peer, pose });
                }
            }
            None
        }
        Kind::LatencyProbe => {
            let mut probe = env.body::<LatencyProbe>().ok()?;
            probe.t_server = Some(shared.clock.micros());
            let kind = Kind::LatencyProbe;
            Some(Envelope::new(echo_seq.next(&kind), shared.clock.micros(), kind, &probe))
        }
        // Other kinds from clients are accepted and ignored.
        _ => None,
    }
}

/// Next envelope for one connection: probe echoes first, then broadcasts.
async fn next_outgoing(
    outbound: &mut broadcast::Receiver<Arc<Envelope>>,
    echoes: &mut mpsc::UnboundedReceiver<Envelope>,
) -> Option<Arc<Envelope>> {
    loop {
        tokio::select! {
            biased;
            e = echoes.recv() => return e.map(Arc::new),
            e = outbound.recv() => match e {
                Ok(e) => return Some(e),
                // The subscriber will see the skipped seq numbers.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            },
        }
    }
}

async fn serve_tcp(stream: TcpStream, peer: u64, shared: Shared) {
    let _ = stream.set_nodelay(true);
    let (read, mut write) = stream.into_split();
    let (echo_tx, mut echo_rx) = mpsc::unbounded_channel();
    let mut outbound = shared.outbound.subscribe();
    let writer = tokio::spawn(async move {
        while let Some(env) = next_outgoing(&mut outbound, &mut echo_rx).await {
            if write.write_all(&encode_json(&env)).await.is_err() {
                return;
            }
        }
    });
    let mut reader = BufReader::new(read);
    let mut tracker = SeqTracker::default();
    let mut echo_seq = Sequencer::default();
    let mut line = Vec::new();
    loop {
        line.clear();
        match reader.read_until(b'\n', &mut line).await {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        // A line that does not decode is dropped; the sender's next
        // envelope then shows up as a seq gap.
        if let Ok(env) = decode_json(&line) {
            if let Some(echo) = ingest(env, peer, &mut tracker, &mut echo_seq, &shared) {
                let _ = echo_tx.send(echo);
            }
        }
    }
    let _ = shared.inbound.send(Inbound::Closed { peer });
    writer.abort();
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> axum::response::Response {
    let peer = shared.peers.fetch_add(1, Ordering::Relaxed);
    ws.on_upgrade(move |socket| serve_ws(socket, peer, shared))
}

/// Same envelopes as TCP, one JSON object per text message without the
/// trailing newline.
async fn serve_ws(socket: WebSocket, peer: u64, shared: Shared) {
    let (mut sink, mut stream) = socket.split();
    let (echo_tx, mut echo_rx) = mpsc::unbounded_channel();
    let mut outbound = shared.outbound.subscribe();
    let writer = tokio::spawn(async move {
        while let Some(env) = next_outgoing(&mut outbound, &mut echo_rx).await {
            let mut text = encode_json(&env);
            text.pop();
            let text = String::from_utf8(text).expect("JSON is UTF-8");
            if sink.send(Message::Text(text)).await.is_err() {
                return;
            }
        }
    });
    let mut tracker = SeqTracker::default();
    let mut echo_seq = Sequencer::default();
    while let Some(Ok(msg)) = stream.next().await {
        let mut bytes = match msg {
            Message::Text(t) => t.into_bytes(),
            Message::Binary(b) => b,
            Message::Close(_) => break,
            _ => continue,
        };
        if bytes.last() != Some(&b'\n') {
            bytes.push(b'\n');
        }
        if let Ok(env) = decode_json(&bytes) {
            if let Some(echo) = ingest(env, peer, &mut tracker, &mut echo_seq, &shared) {
                let _ = echo_tx.send(echo);
            }
        }
    }
    let _ = shared.inbound.send(Inbound::Closed { peer });
    writer.abort();
}
