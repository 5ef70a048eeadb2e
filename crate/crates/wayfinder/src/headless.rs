//! Engine construction from a config, and headless replay of walk scripts.

use std::io::Write;

use wayfinder_core::pipeline::{FrozenClock, ScriptedDetector};
use wayfinder_core::session::{DetectorSource, Envelope, SessionEngine};
use wayfinder_core::sim::Scene;

use crate::config::{DetectorKind, SessionConfig};
use crate::error::AppError;
use crate::formats::{self, WalkStep};
use crate::remote::{placeholder_pixels, RemoteDetector};
use crate::store::CalibrationStore;

pub fn detector_source(cfg: &SessionConfig) -> Result<DetectorSource, AppError> {
    Ok(match cfg.detector.kind {
        DetectorKind::Simulated => DetectorSource::Simulated,
        DetectorKind::Scripted => {
            let path = cfg.detector.script_path.as_deref().expect("validated");
            let script = formats::load_detection_script(&cfg.resolve(path))?;
            DetectorSource::External {
                adapter: Box::new(ScriptedDetector::new(script)),
                pixels: None,
            }
        }
        DetectorKind::Remote => {
            let endpoint = cfg.detector.endpoint.as_deref().expect("validated");
            DetectorSource::External {
                adapter: Box::new(RemoteDetector::new(endpoint, cfg.pipeline.latency_budget_ms)),
                pixels: Some(placeholder_pixels),
            }
        }
    })
}

pub fn build_engine(cfg: &SessionConfig, scene: Scene, first_launch: bool) -> Result<SessionEngine, AppError> {
    let mut ec = cfg.engine_config()?;
    ec.first_launch = first_launch;
    SessionEngine::new(scene, ec, detector_source(cfg)?).map_err(|e| AppError::config("scene", e))
}

/// Replay `walk` against `engine`, writing every envelope as one JSON line.
///
/// A `move` line queues the step and runs one tick; `wait` runs the given
/// number of ticks; other commands take effect without a tick. Ticks use a
/// frozen clock, so the log depends only on the inputs.
pub fn run_headless(
    mut engine: SessionEngine,
    walk: &[WalkStep],
    out: &mut dyn Write,
    store: Option<&CalibrationStore>,
) -> Result<u64, AppError> {
    let clock = FrozenClock(0);
    let mut written = 0u64;
    let mut emit = |engine: &mut SessionEngine, envs: Vec<Envelope>| -> Result<(), AppError> {
        for e in &envs {
            serde_json::to_writer(&mut *out, e).map_err(AppError::runtime)?;
            out.write_all(b"\n").map_err(AppError::runtime)?;
        }
        written += envs.len() as u64;
        if let Some(s) = store {
            s.append(&engine.drain_records())?;
        }
        Ok(())
    };
    let envs = engine.start();
    emit(&mut engine, envs)?;
    for step in walk {
        match step {
            WalkStep::Wait(n) => {
                for _ in 0..*n {
                    let envs = engine.tick(&clock);
                    emit(&mut engine, envs)?;
                }
            }
            WalkStep::Command(c) => {
                let is_move = matches!(c, wayfinder_core::session::Command::Move { .. });
                let envs = engine.handle(c.clone());
                emit(&mut engine, envs)?;
                if is_move {
                    let envs = engine.tick(&clock);
                    emit(&mut engine, envs)?;
                }
            }
        }
    }
    out.flush().map_err(AppError::runtime)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wayfinder_core::session::{Envelope, Payload};

    fn run(walk: &[WalkStep]) -> Vec<Envelope> {
        let cfg = SessionConfig::default();
        let engine = build_engine(&cfg, formats::bundled_scene(), true).unwrap();
        let mut buf = Vec::new();
        run_headless(engine, walk, &mut buf, None).unwrap();
        String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn empty_walk_only_starts() {
        let log = run(&[]);
        assert_eq!(log.len(), 2);
        assert!(matches!(log[0].payload, Payload::State(_)));
        match &log[1].payload {
            Payload::Speech { text, .. } => assert!(text.starts_with("Welcome")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bundled_walk_is_deterministic() {
        let walk = formats::bundled_walk();
        assert_eq!(run(&walk), run(&walk));
    }

    #[test]
    fn scripted_detector_from_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("d.ndjson"),
            "{\"frame_id\":1,\"detections\":[{\"box\":{\"x\":10,\"y\":10,\"w\":20,\"h\":20,\"space\":\"downscaled\"},\"label\":\"chair\",\"score\":0.9}]}\n",
        )
        .unwrap();
        let cfg = SessionConfig::parse(
            "[detector]\nkind = \"scripted\"\nscript_path = \"d.ndjson\"\n",
            dir.path().to_path_buf(),
        )
        .unwrap();
        let engine = build_engine(&cfg, formats::bundled_scene(), false).unwrap();
        let mut buf = Vec::new();
        run_headless(engine, &[WalkStep::Wait(2)], &mut buf, None).unwrap();
        let log: Vec<Envelope> = String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        let frames: Vec<usize> = log
            .iter()
            .filter_map(|e| match &e.payload {
                Payload::Detection { detections, .. } => Some(detections.len()),
                _ => None,
            })
            .collect();
        assert_eq!(frames, vec![1, 0]);
    }
}
