//! Command-line entry points.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use wayfinder_core::currency::{format_minor_units, tally};
use wayfinder_core::reading::{assemble, TextBlock};
use wayfinder_core::Detection;

use crate::bench;
use crate::config::SessionConfig;
use crate::error::AppError;
use crate::formats;
use crate::headless::{build_engine, run_headless};
use crate::mock::{serve_mock, MockDetector};
use crate::service::{serve, ServiceState};
use crate::store::{self, CalibrationStore};

#[derive(Debug, Parser)]
#[command(name = "wayfinder", version, about = "Assistive perception engine: simulator, service and tools")]
pub struct Cli {
    /// Session config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Replay a walk script headlessly and write the event log.
    Simulate {
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Walk script (NDJSON); defaults to the bundled approach walk.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Log destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the websocket session service.
    Serve {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the text assembled from a JSON list of text blocks.
    Ocr { blocks: PathBuf },
    /// Print per-currency totals for a JSON list of detections.
    Currency { detections: PathBuf },
    /// Calibration store tools.
    Calib {
        #[command(subcommand)]
        action: CalibCmd,
    },
    /// Sweep detector input resolutions and print CSV.
    Bench {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_TARGETS)]
        targets: Vec<u32>,
        #[arg(long, default_value_t = 200)]
        frames: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a mock of the remote detector service.
    MockDetector {
        #[arg(long, default_value_t = 9000)]
        port: u16,
        /// Detection script (NDJSON) served by frame id.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CalibCmd {
    /// Print every valid record as one JSON line.
    Dump { store: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<SessionConfig, AppError> {
    match path {
        Some(p) => SessionConfig::load(p),
        None => Ok(SessionConfig::default()),
    }
}

fn scene_for(cfg: &SessionConfig, flag: Option<&Path>) -> Result<wayfinder_core::sim::Scene, AppError> {
    match flag {
        Some(p) => formats::load_scene(p),
        None => match &cfg.simulator.scene_path {
            Some(p) => formats::load_scene(&cfg.resolve(p)),
            None => Ok(formats::bundled_scene()),
        },
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, AppError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| AppError::io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn runtime() -> Result<tokio::runtime::Runtime, AppError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(AppError::runtime)
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Cmd::Simulate { scene, script, seed, out } => {
            if seed.is_some() {
                cfg.session.seed = seed;
            }
            let scene = scene_for(&cfg, scene.as_deref())?;
            let walk = match script {
                Some(p) => formats::load_walk(&p)?,
                None => formats::bundled_walk(),
            };
            let store = match cfg.calibration_path() {
                Some(p) => Some(CalibrationStore::open(&p)?),
                None => None,
            };
            // replays always begin at first launch so the log is reproducible
            let engine = build_engine(&cfg, scene, true)?;
            let mut w = output(out.as_deref())?;
            let n = run_headless(engine, &walk, &mut w, store.as_ref())?;
            log::info!("wrote {n} envelopes");
            Ok(())
        }
        Cmd::Serve { scene, port, seed } => {
            if seed.is_some() {
                cfg.session.seed = seed;
            }
            if let Some(p) = port {
                cfg.service.port = p;
            }
            let scene = scene_for(&cfg, scene.as_deref())?;
            let port = cfg.service.port;
            let state = Arc::new(ServiceState::new(cfg, scene)?);
            runtime()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                    .await
                    .map_err(|e| AppError::runtime(format!("cannot listen on port {port}: {e}")))?;
                log::info!("listening on ws://{}/ws", listener.local_addr().map_err(AppError::runtime)?);
                serve(listener, state).await.map_err(AppError::runtime)
            })
        }
        Cmd::Ocr { blocks } => {
            let list: Vec<TextBlock> = formats::load_json(&blocks)?;
            let text = assemble(&list).map_err(|e| AppError::config(&blocks, e))?;
            println!("{text}");
            Ok(())
        }
        Cmd::Currency { detections } => {
            let dets: Vec<Detection> = formats::load_json(&detections)?;
            let t = tally(&dets, cfg.pipeline.min_score);
            let mut out = std::io::stdout().lock();
            if t.is_empty() {
                writeln!(out, "no currency detected").map_err(AppError::runtime)?;
            }
            for (code, total) in &t.totals {
                let notes = if total.note_count == 1 { "note" } else { "notes" };
                writeln!(out, "{code}: {} ({} {notes})", format_minor_units(total.minor_units), total.note_count)
                    .map_err(AppError::runtime)?;
            }
            Ok(())
        }
        Cmd::Calib {
            action: CalibCmd::Dump { store: path },
        } => {
            let report = store::load(&path)?;
            let mut out = BufWriter::new(std::io::stdout().lock());
            formats::write_ndjson(&mut out, &report.records).map_err(AppError::runtime)?;
            out.flush().map_err(AppError::runtime)?;
            eprintln!(
                "{} records, {} corrupt lines skipped{}",
                report.records.len(),
                report.corrupt_lines.len(),
                if report.truncated_tail { ", truncated final line ignored" } else { "" }
            );
            Ok(())
        }
        Cmd::Bench { scene, targets, frames, out } => {
            if frames == 0 {
                return Err(AppError::Usage("--frames must be positive".into()));
            }
            let scene = match scene {
                Some(p) => formats::load_scene(&p)?,
                None => bench::bench_scene(),
            };
            let rows = bench::run_bench(&scene, &targets, frames)?;
            let mut w = output(out.as_deref())?;
            bench::write_csv(&mut w, &rows).and_then(|_| w.flush()).map_err(AppError::runtime)
        }
        Cmd::MockDetector { port, script, delay_ms } => {
            let script = match script {
                Some(p) => formats::load_detection_script(&p)?,
                None => Default::default(),
            };
            let mock = Arc::new(MockDetector::new(script).with_delay(Duration::from_millis(delay_ms), None));
            runtime()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
                    .await
                    .map_err(|e| AppError::runtime(format!("cannot listen on port {port}: {e}")))?;
                log::info!("mock detector on http://{}/detect", listener.local_addr().map_err(AppError::runtime)?);
                serve_mock(listener, mock).await.map_err(AppError::runtime)
            })
        }
    }
}
