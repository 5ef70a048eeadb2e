#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::Value;
use wayfinder_core::session::Envelope;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("tests/fixtures").join(name)
}

pub fn golden_path() -> PathBuf {
    crate_dir().join("tests/golden/approach-chair.ndjson")
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_wayfinder"))
}

pub fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(crate_dir().join("assets/envelope.schema.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

/// Check every line against the schema and the gapless sequence rule.
pub fn check_log(text: &str) -> Result<Vec<Envelope>, String> {
    let schema = schema();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let v: Value = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        if let Err(errs) = schema.validate(&v) {
            let msgs: Vec<String> = errs.map(|e| e.to_string()).collect();
            return Err(format!("line {}: schema: {}", i + 1, msgs.join("; ")));
        }
        let env: Envelope = serde_json::from_value(v).map_err(|e| format!("line {}: {e}", i + 1))?;
        if env.seq != i as u64 + 1 {
            return Err(format!("line {}: seq {} breaks the sequence", i + 1, env.seq));
        }
        out.push(env);
    }
    Ok(out)
}
