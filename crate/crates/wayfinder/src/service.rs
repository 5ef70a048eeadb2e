//! Live sessions over a websocket: one engine per connection.
//!
//! The server sends the hello message, then the session-start envelopes, then
//! ticks at the configured rate. Every outbound message is one JSON object.
//! Inbound text messages hold one command per line.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use wayfinder_core::interaction::Page;
use wayfinder_core::pipeline::Clock;
use wayfinder_core::session::{Command, Envelope, SessionEngine};
use wayfinder_core::sim::Scene;

use crate::config::SessionConfig;
use crate::error::AppError;
use crate::headless::build_engine;
use crate::store::CalibrationStore;

/// Wall clock in milliseconds since the service started.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

/// Read-only state shared by all connections.
#[derive(Debug)]
pub struct ServiceState {
    pub config: SessionConfig,
    pub scene: Scene,
    pub store: Option<CalibrationStore>,
    started: Instant,
}

impl ServiceState {
    pub fn new(config: SessionConfig, scene: Scene) -> Result<Self, AppError> {
        let store = match config.calibration_path() {
            Some(p) => Some(CalibrationStore::open(&p)?),
            None => None,
        };
        // fail at startup rather than on the first connection
        build_engine(&config, scene.clone(), true)?;
        Ok(Self {
            config,
            scene,
            store,
            started: Instant::now(),
        })
    }

    fn intro_flag(&self) -> Option<PathBuf> {
        self.store.as_ref().map(CalibrationStore::intro_flag_path)
    }

    fn first_launch(&self) -> bool {
        self.intro_flag().is_none_or(|p| !p.exists())
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

/// Serve sessions until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<ServiceState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<ServiceState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| async move {
        if let Err(e) = run_session(socket, state).await {
            log::info!("session ended: {e}");
        }
    })
}

type Sink = futures::stream::SplitSink<WebSocket, Message>;

async fn send_all(tx: &mut Sink, envs: &[Envelope]) -> Result<(), axum::Error> {
    for e in envs {
        let text = serde_json::to_string(e).expect("envelopes serialize");
        tx.feed(Message::Text(text)).await?;
    }
    tx.flush().await
}

struct Live {
    engine: SessionEngine,
    state: Arc<ServiceState>,
    intro_recorded: bool,
}

impl Live {
    /// Persist new calibrations and the first-launch flag after each step.
    fn after(&mut self) {
        if let Some(store) = &self.state.store {
            if let Err(e) = store.append(&self.engine.drain_records()) {
                log::error!("calibration store: {e}");
            }
        }
        if !self.intro_recorded && self.engine.page() != Page::Intro {
            self.intro_recorded = true;
            if let Some(flag) = self.state.intro_flag() {
                if let Err(e) = std::fs::write(&flag, b"") {
                    log::error!("{}: {e}", flag.display());
                }
            }
        }
    }

    fn inbound(&mut self, text: &str) -> Vec<Envelope> {
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str::<Command>(line) {
                Ok(cmd) => out.extend(self.engine.handle(cmd)),
                Err(e) => out.extend(self.engine.report_error("bad_command", e.to_string())),
            }
        }
        self.after();
        out
    }
}

async fn run_session(socket: WebSocket, state: Arc<ServiceState>) -> Result<(), axum::Error> {
    let (mut tx, mut rx) = socket.split();
    let first_launch = state.first_launch();
    let engine = match build_engine(&state.config, state.scene.clone(), first_launch) {
        Ok(e) => e,
        Err(e) => {
            log::error!("cannot start session: {e}");
            return tx.send(Message::Close(None)).await;
        }
    };
    let clock = WallClock(state.started);
    let tick = Duration::from_millis(state.config.tick_ms());
    let mut live = Live {
        intro_recorded: !first_launch,
        engine,
        state,
    };

    let hello = serde_json::to_string(&live.engine.hello()).expect("hello serializes");
    tx.send(Message::Text(hello)).await?;
    let start = live.engine.start();
    live.after();
    send_all(&mut tx, &start).await?;

    let mut interval = tokio::time::interval_at(tokio::time::Instant::now() + tick, tick);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    loop {
        tokio::select! {
            _ = interval.tick() => {
                // a remote detector blocks for up to the latency budget
                let out = tokio::task::block_in_place(|| live.engine.tick(&clock));
                live.after();
                send_all(&mut tx, &out).await?;
            }
            msg = rx.next() => {
                let out = match msg {
                    Some(Ok(Message::Text(t))) => live.inbound(&t),
                    Some(Ok(Message::Binary(b))) => match std::str::from_utf8(&b) {
                        Ok(t) => live.inbound(t),
                        Err(_) => live.engine.report_error("bad_command", "binary message is not UTF-8".into()),
                    },
                    Some(Ok(Message::Close(_))) | None => return Ok(()),
                    Some(Ok(_)) => continue,
                    Some(Err(e)) => return Err(e),
                };
                send_all(&mut tx, &out).await?;
            }
        }
    }
}
