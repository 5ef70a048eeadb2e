//! The `wayfinder` binary: subcommands, output and exit codes.

mod common;

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(common::bin()).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn ocr_reconstructs_shuffled_paragraph() {
    let o = run(&["ocr", common::fixture("ocr-shuffled-paragraph.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let expected = std::fs::read_to_string(common::fixture("ocr-shuffled-paragraph.txt")).unwrap();
    assert_eq!(stdout(&o), expected);
}

#[test]
fn currency_prints_tally() {
    let o = run(&["currency", common::fixture("currency-three-notes.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "USD: 45 (3 notes)\n");
}

#[test]
fn currency_respects_configured_min_score() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[pipeline]\nmin_score = 0.88\n").unwrap();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "currency",
        common::fixture("currency-three-notes.json").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "USD: 40 (2 notes)\n");
}

#[test]
fn simulate_empty_script_only_starts() {
    let dir = tempfile::tempdir().unwrap();
    let walk = dir.path().join("empty.ndjson");
    std::fs::write(&walk, "").unwrap();
    let o = run(&["simulate", "--script", walk.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = common::check_log(&stdout(&o)).unwrap();
    assert_eq!(log.len(), 2);
    let kinds: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["type"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds, ["state", "speech"]);
    assert!(stdout(&o).contains("\"page\":\"intro\""));
}

#[test]
fn simulate_default_matches_golden_and_writes_store() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[store]\ncalibration_path = \"data/calib.ndjson\"\n").unwrap();
    let out = dir.path().join("log.ndjson");
    let o = run(&["--config", cfg.to_str().unwrap(), "simulate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(common::golden_path()).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), golden);

    let store = dir.path().join("data/calib.ndjson");
    let o = run(&["calib", "dump", store.to_str().unwrap()]);
    assert!(o.status.success());
    let n = stdout(&o).lines().count();
    assert!(n >= 3, "{n} records");
    assert!(stderr(&o).contains(&format!("{n} records, 0 corrupt lines skipped")));
}

#[test]
fn seed_changes_the_log() {
    let a = stdout(&run(&["simulate", "--seed", "1"]));
    let b = stdout(&run(&["simulate", "--seed", "2"]));
    assert_ne!(a, b);
    common::check_log(&a).unwrap();
}

#[test]
fn calib_dump_skips_corrupt_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.ndjson");
    std::fs::write(
        &p,
        "{\"label\":\"chair\",\"w0_px\":10.0,\"d0_m\":2.0,\"created_ms\":1}\n###\n{\"label\":\"door\",\"w0_px\":5.0,\"d0_m\":3.0,\"created_ms\":2}\n{\"label\":\"x",
    )
    .unwrap();
    let o = run(&["calib", "dump", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
    let err = stderr(&o);
    assert!(err.contains("2 records, 1 corrupt lines skipped, truncated final line ignored"), "{err}");
}

#[test]
fn corrupt_scene_reports_line_and_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scene.json");
    std::fs::write(&p, "{\n  \"objects\": [\n    {\"id\": 1, \"label\": \"chair\",, }\n  ]\n}\n").unwrap();
    let o = run(&["simulate", "--scene", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("scene.json:3:"), "{}", stderr(&o));
}

#[test]
fn bad_walk_line_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("walk.ndjson");
    std::fs::write(&p, "{\"type\":\"wait\",\"ticks\":1}\n{\"type\":\"teleport\"}\n").unwrap();
    let o = run(&["simulate", "--script", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("walk.ndjson:2:"), "{}", stderr(&o));
}

#[test]
fn bad_config_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "[pipeline]\ntarget_long_edge_px = \"big\"\n").unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_input_exit_3() {
    let o = run(&["ocr", "/nonexistent/blocks.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["fly"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--seed", "x"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--frames", "0"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--targets", "8", "--frames", "1"]).status.code(), Some(2));
}

#[test]
fn port_in_use_exit_4() {
    let held = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let o = run(&["serve", "--port", &port]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = run(&["mock-detector", "--port", &port]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn bench_prints_csv() {
    let o = run(&["bench", "--targets", "320,160", "--frames", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(wayfinder::bench::CSV_HEADER));
    let targets: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(targets, ["320", "160"]);
}
