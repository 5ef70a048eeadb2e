//! Live sessions over the websocket service.

mod common;

use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio_tungstenite::tungstenite::Message;
use wayfinder::config::SessionConfig;
use wayfinder::service::{serve, ServiceState};
use wayfinder_core::sim::{CameraSpec, NoiseModel, Scene, WorldObject};

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

const NEAR_M: f64 = 1.524;
const FAR_M: f64 = 3.048;

fn chair_scene() -> Scene {
    Scene {
        objects: vec![WorldObject {
            id: 1,
            label: "chair".into(),
            x: 0.0,
            z: 5.0,
            width_m: 0.45,
            height_m: 0.9,
        }],
        camera: CameraSpec {
            x: 0.0,
            z: 0.0,
            heading: 0.0,
            focal_px: 1108.5,
            frame_w: 1280,
            frame_h: 720,
            fov_deg: 60.0,
        },
        noise: NoiseModel::noiseless(3),
    }
}

async fn start(cfg: SessionConfig, scene: Scene) -> String {
    let state = Arc::new(ServiceState::new(cfg, scene).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state));
    format!("ws://{addr}/ws")
}

async fn connect(url: &str) -> Ws {
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("message within 5 s")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Read envelopes until `pred` holds, validating each one.
async fn until(ws: &mut Ws, seen: &mut Vec<Value>, pred: impl Fn(&Value) -> bool) -> Value {
    let schema = common::schema();
    loop {
        let v = next_json(ws).await;
        assert!(schema.is_valid(&v), "invalid envelope {v}");
        if let Some(last) = seen.last() {
            assert_eq!(v["seq"].as_u64().unwrap(), last["seq"].as_u64().unwrap() + 1);
        }
        seen.push(v.clone());
        if pred(&v) {
            return v;
        }
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

fn fast_config() -> SessionConfig {
    SessionConfig::parse("[service]\ntick_hz = 50\n", Default::default()).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn handshake_then_long_press_opens_page() {
    let url = start(fast_config(), chair_scene()).await;
    let mut ws = connect(&url).await;
    let hello = next_json(&mut ws).await;
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["protocol_version"], 1);
    assert_eq!(hello["config_summary"]["tick_ms"], 20);
    assert_eq!(hello["scene"]["objects"][0]["label"], "chair");

    let mut seen = Vec::new();
    let first = until(&mut ws, &mut seen, |_| true).await;
    assert_eq!(first["seq"], 1);
    assert_eq!(first["page"], "intro");

    send(&mut ws, r#"{"type":"gesture","kind":"long_press"}"#).await;
    until(&mut ws, &mut seen, |v| v["type"] == "state" && v["page"] == "home").await;
    send(&mut ws, r#"{"type":"gesture","kind":"long_press","target":"ocr"}"#).await;
    let mut opened = false;
    let state = until(&mut ws, &mut seen, |v| {
        v["type"] == "state" && v["page"] == "ocr"
    })
    .await;
    assert_eq!(state["page"], "ocr");
    // the page_open pulse precedes the new state
    for v in seen.iter().rev().take(4) {
        opened |= v["type"] == "haptic" && v["kind"] == "page_open" && v["segments"].as_array().unwrap().len() == 1;
    }
    assert!(opened);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_lines_yield_one_error_each() {
    let url = start(fast_config(), chair_scene()).await;
    let mut ws = connect(&url).await;
    next_json(&mut ws).await;
    let mut seen = Vec::new();
    until(&mut ws, &mut seen, |v| v["type"] == "speech").await;

    send(&mut ws, "{not json").await;
    let e = until(&mut ws, &mut seen, |v| v["type"] == "error").await;
    assert_eq!(e["code"], "bad_command");
    // unknown command, then a valid one in the same message
    send(&mut ws, "{\"type\":\"jump\"}\n{\"type\":\"mode\",\"mode\":\"currency\"}").await;
    until(&mut ws, &mut seen, |v| v["type"] == "error").await;
    until(&mut ws, &mut seen, |v| v["type"] == "state" && v["page"] == "currency").await;
    let errors = seen.iter().filter(|v| v["type"] == "error").count();
    assert_eq!(errors, 2);
    // the stream keeps ticking
    until(&mut ws, &mut seen, |v| v["type"] == "metrics").await;
}

#[tokio::test(flavor = "multi_thread")]
async fn approaching_raises_haptics_along_the_curve() {
    let url = start(fast_config(), chair_scene()).await;
    let mut ws = connect(&url).await;
    next_json(&mut ws).await;
    let mut seen = Vec::new();
    send(&mut ws, r#"{"type":"mode","mode":"object_detection"}"#).await;
    until(&mut ws, &mut seen, |v| v["type"] == "state" && v["page"] == "object_detection").await;
    for step in 1..=20 {
        send(&mut ws, r#"{"type":"move","forward":0.2}"#).await;
        until(&mut ws, &mut seen, |v| v["type"] == "state").await;
        if 5.0 - 0.2 * f64::from(step) < FAR_M - 0.05 {
            until(&mut ws, &mut seen, |v| v["type"] == "haptic" && v["kind"] == "proximity").await;
        }
    }

    let curve = |d: f64| {
        if d > FAR_M {
            0.0
        } else if d >= NEAR_M {
            0.5
        } else {
            0.5 + 0.5 * (NEAR_M - d) / NEAR_M
        }
    };
    let pose_at: std::collections::BTreeMap<u64, f64> = seen
        .iter()
        .filter(|v| v["type"] == "state")
        .map(|v| (v["t_ms"].as_u64().unwrap(), v["pose"]["z"].as_f64().unwrap()))
        .collect();
    let mut levels = Vec::new();
    for v in &seen {
        if v["type"] == "haptic" && v["kind"] == "proximity" {
            let got = v["segments"][0]["intensity"].as_f64().unwrap();
            levels.push(got);
            let t = v["t_ms"].as_u64().unwrap();
            let (_, z) = pose_at.range(..=t).next_back().unwrap();
            let d = 5.0 - z;
            if (d - FAR_M).abs() < 0.05 || (d - NEAR_M).abs() < 0.05 {
                continue;
            }
            assert!((got - curve(d)).abs() < 0.03, "{got} at depth {d}");
        }
    }
    assert!(levels.len() >= 5, "{levels:?}");
    assert!(levels.windows(2).all(|w| w[1] >= w[0]), "{levels:?}");
    assert!((levels.last().unwrap() - curve(1.0)).abs() < 0.03);
}

#[tokio::test(flavor = "multi_thread")]
async fn intro_is_shown_once_per_store() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SessionConfig::parse(
        "[service]\ntick_hz = 50\n[store]\ncalibration_path = \"calib.ndjson\"\n",
        dir.path().to_path_buf(),
    )
    .unwrap();
    let url = start(cfg, chair_scene()).await;

    let mut ws = connect(&url).await;
    next_json(&mut ws).await;
    let mut seen = Vec::new();
    let first = until(&mut ws, &mut seen, |_| true).await;
    assert_eq!(first["page"], "intro");
    send(&mut ws, r#"{"type":"gesture","kind":"long_press"}"#).await;
    until(&mut ws, &mut seen, |v| v["type"] == "state" && v["page"] == "home").await;
    // wait for calibrations to be persisted
    until(&mut ws, &mut seen, |v| v["type"] == "state" && !v["tracks"].as_array().unwrap().is_empty()).await;
    ws.close(None).await.unwrap();

    let mut ws = connect(&url).await;
    next_json(&mut ws).await;
    let mut seen = Vec::new();
    let first = until(&mut ws, &mut seen, |_| true).await;
    assert_eq!(first["page"], "home");
    assert!(dir.path().join(wayfinder::store::INTRO_FLAG_FILE).exists());
    let report = wayfinder::store::load(&dir.path().join("calib.ndjson")).unwrap();
    assert!(report.records.iter().any(|r| r.label == "chair"));
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_are_isolated() {
    let url = start(fast_config(), chair_scene()).await;
    let mut a = connect(&url).await;
    let mut b = connect(&url).await;
    next_json(&mut a).await;
    next_json(&mut b).await;
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    send(&mut a, r#"{"type":"move","forward":1.0}"#).await;
    let moved = until(&mut a, &mut sa, |v| v["type"] == "state" && v["pose"]["z"].as_f64() == Some(1.0)).await;
    assert_eq!(moved["seq"].as_u64().unwrap() as usize, sa.len());
    until(&mut b, &mut sb, |v| v["type"] == "metrics").await;
    assert!(sb.iter().filter(|v| v["type"] == "state").all(|v| v["pose"]["z"].as_f64() == Some(0.0)));
}
