//! Mock of the remote detector service, for tests and local runs.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use base64::Engine as _;
use wayfinder_core::pipeline::DetectionScript;

use crate::remote::{DetectRequest, DetectResponse};

#[derive(Debug, Default)]
pub struct MockDetector {
    /// Detections served per frame id; frames without an entry get none.
    pub script: DetectionScript,
    /// Delay applied to the first `slow_requests` requests (all when `None`).
    pub delay: Duration,
    pub slow_requests: Option<u64>,
    /// Answer every request with this status instead.
    pub fail_status: Option<u16>,
    requests: AtomicU64,
}

impl MockDetector {
    pub fn new(script: DetectionScript) -> Self {
        Self {
            script,
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, delay: Duration, slow_requests: Option<u64>) -> Self {
        self.delay = delay;
        self.slow_requests = slow_requests;
        self
    }

    pub fn with_failure(mut self, status: u16) -> Self {
        self.fail_status = Some(status);
        self
    }

    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn router(self: Arc<Self>) -> Router {
        Router::new().route("/detect", post(detect)).with_state(self)
    }
}

async fn detect(
    State(mock): State<Arc<MockDetector>>,
    Json(req): Json<DetectRequest>,
) -> Result<Json<DetectResponse>, (StatusCode, String)> {
    let n = mock.requests.fetch_add(1, Ordering::SeqCst);
    if mock.slow_requests.is_none_or(|k| n < k) && !mock.delay.is_zero() {
        tokio::time::sleep(mock.delay).await;
    }
    if let Some(s) = mock.fail_status {
        let code = StatusCode::from_u16(s).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        return Err((code, "configured failure".into()));
    }
    if base64::engine::general_purpose::STANDARD.decode(&req.pixels_b64).is_err() {
        return Err((StatusCode::BAD_REQUEST, "pixels_b64 is not valid base64".into()));
    }
    Ok(Json(DetectResponse {
        detections: mock.script.get(req.frame_id).to_vec(),
    }))
}

/// Serve until the listener fails.
pub async fn serve_mock(listener: tokio::net::TcpListener, mock: Arc<MockDetector>) -> std::io::Result<()> {
    axum::serve(listener, mock.router()).await
}
