//! File formats: scene JSON, detection and walk scripts (NDJSON), the size
//! registry and the currency name table.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use wayfinder_core::currency::CurrencyNames;
use wayfinder_core::distance::ObjectSizeRegistry;
use wayfinder_core::pipeline::{DetectionScript, DetectionScriptEntry};
use wayfinder_core::session::Command;
use wayfinder_core::sim::Scene;

use crate::error::AppError;

pub const BUNDLED_SCENE: &str = include_str!("../assets/approach-chair.scene.json");
pub const BUNDLED_WALK: &str = include_str!("../assets/approach-chair.walk.ndjson");
pub const BUNDLED_CURRENCY_NAMES: &str = include_str!("../assets/currency_names.json");

fn read(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn json_error(path: &Path, line_offset: usize, e: serde_json::Error) -> AppError {
    AppError::Parse {
        path: path.to_path_buf(),
        line: line_offset + e.line().max(1),
        message: e.to_string(),
    }
}

/// Parse a whole-file JSON document; errors carry the offending line.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, AppError> {
    serde_json::from_str(text).map_err(|e| json_error(path, 0, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    parse_json(&read(path)?, path)
}

/// Parse newline-delimited JSON. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn parse_ndjson<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<(usize, T)>, AppError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| json_error(path, i, e))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

pub fn parse_scene(text: &str, path: &Path) -> Result<Scene, AppError> {
    let scene: Scene = parse_json(text, path)?;
    scene.validate().map_err(|e| AppError::config(path, e))?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene, AppError> {
    parse_scene(&read(path)?, path)
}

pub fn bundled_scene() -> Scene {
    parse_scene(BUNDLED_SCENE, Path::new("approach-chair.scene.json")).expect("bundled scene is valid")
}

pub fn parse_detection_script(text: &str, path: &Path) -> Result<DetectionScript, AppError> {
    let lines: Vec<(usize, DetectionScriptEntry)> = parse_ndjson(text, path)?;
    let line_of: Vec<usize> = lines.iter().map(|(l, _)| *l).collect();
    DetectionScript::from_entries(lines.into_iter().map(|(_, e)| e)).map_err(|e| AppError::Parse {
        path: path.to_path_buf(),
        line: line_of[e.index],
        message: e.to_string(),
    })
}

pub fn load_detection_script(path: &Path) -> Result<DetectionScript, AppError> {
    parse_detection_script(&read(path)?, path)
}

/// One line of a walk script: an inbound command, or a pause of some ticks.
#[derive(Debug, Clone, PartialEq)]
pub enum WalkStep {
    Command(Command),
    Wait(u64),
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct WaitLine {
    #[allow(dead_code)]
    #[serde(rename = "type")]
    kind: String,
    ticks: u64,
}

pub fn parse_walk(text: &str, path: &Path) -> Result<Vec<WalkStep>, AppError> {
    let mut out = Vec::new();
    for (line, v) in parse_ndjson::<serde_json::Value>(text, path)? {
        let err = |message: String| AppError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let step = if v.get("type").and_then(|t| t.as_str()) == Some("wait") {
            let w: WaitLine = serde_json::from_value(v).map_err(|e| err(e.to_string()))?;
            WalkStep::Wait(w.ticks)
        } else {
            WalkStep::Command(serde_json::from_value(v).map_err(|e| err(e.to_string()))?)
        };
        out.push(step);
    }
    Ok(out)
}

pub fn load_walk(path: &Path) -> Result<Vec<WalkStep>, AppError> {
    parse_walk(&read(path)?, path)
}

pub fn bundled_walk() -> Vec<WalkStep> {
    parse_walk(BUNDLED_WALK, Path::new("approach-chair.walk.ndjson")).expect("bundled walk is valid")
}

pub fn load_registry(path: &Path) -> Result<ObjectSizeRegistry, AppError> {
    load_json(path)
}

pub fn load_currency_names(path: &Path) -> Result<CurrencyNames, AppError> {
    let map: BTreeMap<String, String> = load_json(path)?;
    Ok(CurrencyNames::new(map))
}

pub fn bundled_currency_names() -> CurrencyNames {
    let map: BTreeMap<String, String> =
        serde_json::from_str(BUNDLED_CURRENCY_NAMES).expect("bundled currency names are valid");
    CurrencyNames::new(map)
}

/// Write one JSON value per line.
pub fn write_ndjson<T: Serialize>(out: &mut impl Write, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
