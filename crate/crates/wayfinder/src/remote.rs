//! HTTP detector client: `POST /detect`.

use std::io::ErrorKind;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use wayfinder_core::pipeline::{DetectorAdapter, DetectorError};
use wayfinder_core::{Detection, Frame, Space};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRequest {
    pub frame_id: u64,
    pub width_px: u32,
    pub height_px: u32,
    pub pixels_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub detections: Vec<Detection>,
}

/// Remote adapter. Each attempt may take half the latency budget, and a
/// timed-out attempt is retried once, so a call never exceeds the budget.
#[derive(Debug, Clone)]
pub struct RemoteDetector {
    agent: ureq::Agent,
    url: String,
}

impl RemoteDetector {
    /// `endpoint` is either the service root or the full `/detect` URL.
    pub fn new(endpoint: &str, latency_budget_ms: u32) -> Self {
        let attempt = Duration::from_millis((latency_budget_ms as u64 / 2).max(1));
        let agent = ureq::AgentBuilder::new().timeout(attempt).build();
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/detect") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/detect")
        };
        Self { agent, url }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, req: &DetectRequest) -> Result<Vec<Detection>, DetectorError> {
        let resp = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_json(req)
            .map_err(map_ureq)?;
        let body: DetectResponse = resp.into_json().map_err(|e| match e.kind() {
            ErrorKind::TimedOut | ErrorKind::WouldBlock => DetectorError::Timeout,
            _ => DetectorError::BadResponse(e.to_string()),
        })?;
        if let Some(d) = body.detections.iter().find(|d| d.bbox.space() != Space::Downscaled) {
            return Err(DetectorError::BadResponse(format!(
                "box for {:?} is not in the downscaled space",
                d.label
            )));
        }
        Ok(body.detections)
    }
}

fn map_ureq(e: ureq::Error) -> DetectorError {
    match e {
        ureq::Error::Status(code, _) => DetectorError::HttpError(code),
        ureq::Error::Transport(t) => {
            let timed_out = std::error::Error::source(&t)
                .and_then(|s| s.downcast_ref::<std::io::Error>())
                .is_some_and(|io| matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock));
            if timed_out {
                DetectorError::Timeout
            } else {
                DetectorError::Unavailable(t.to_string())
            }
        }
    }
}

impl DetectorAdapter for RemoteDetector {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        let pixels = frame
            .pixels
            .as_deref()
            .ok_or_else(|| DetectorError::Unavailable("frame has no pixel payload".into()))?;
        let req = DetectRequest {
            frame_id: frame.id,
            width_px: frame.width_px,
            height_px: frame.height_px,
            pixels_b64: base64::engine::general_purpose::STANDARD.encode(pixels),
        };
        match self.attempt(&req) {
            Err(DetectorError::Timeout) => {
                log::debug!("frame {}: detector timed out, retrying once", frame.id);
                self.attempt(&req)
            }
            other => other,
        }
    }
}

/// Stand-in pixel payload for simulated frames sent to a remote detector.
pub fn placeholder_pixels(frame: &Frame) -> Vec<u8> {
    let mut v = frame.id.to_le_bytes().to_vec();
    v.extend_from_slice(&frame.width_px.to_le_bytes());
    v.extend_from_slice(&frame.height_px.to_le_bytes());
    v
}
