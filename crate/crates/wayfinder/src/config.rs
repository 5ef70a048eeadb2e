//! Session configuration file (TOML).
//!
//! Every section is optional; missing keys take the engine defaults. Relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use wayfinder_core::distance::{ObjectSizeRegistry, TrackerConfig, DEFAULT_D0_M, TRACK_EXPIRY_MS};
use wayfinder_core::interaction::GestureConfig;
use wayfinder_core::pipeline::PipelineConfig;
use wayfinder_core::session::EngineConfig;
use wayfinder_core::{CameraIntrinsics, Dims};

use crate::error::AppError;
use crate::formats;

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_TICK_HZ: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Scripted,
    #[default]
    Simulated,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub target_long_edge_px: u32,
    pub latency_budget_ms: u32,
    pub min_score: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            target_long_edge_px: p.target_long_edge_px,
            latency_budget_ms: p.latency_budget_ms,
            min_score: p.min_score,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    pub endpoint: Option<String>,
    pub script_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSection {
    pub registry_path: Option<PathBuf>,
    pub default_d0_m: f64,
    pub track_expiry_ms: u64,
    /// The three intrinsics keys override the scene camera when all are set.
    pub focal_px: Option<f64>,
    pub ref_width_px: Option<u32>,
    pub ref_height_px: Option<u32>,
}

impl Default for DistanceSection {
    fn default() -> Self {
        Self {
            registry_path: None,
            default_d0_m: DEFAULT_D0_M,
            track_expiry_ms: TRACK_EXPIRY_MS,
            focal_px: None,
            ref_width_px: None,
            ref_height_px: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionSection {
    pub tap_max_ms: u64,
    pub slop_px: f64,
    pub long_press_ms: u64,
    pub swipe_min_fraction: f64,
    pub swipe_max_ms: u64,
    pub screen_width_px: f64,
    pub screen_height_px: f64,
}

impl Default for InteractionSection {
    fn default() -> Self {
        let g = GestureConfig::default();
        Self {
            tap_max_ms: g.tap_max_ms,
            slop_px: g.slop_px,
            long_press_ms: g.long_press_ms,
            swipe_min_fraction: g.swipe_min_fraction,
            swipe_max_ms: g.swipe_max_ms,
            screen_width_px: g.screen_width_px,
            screen_height_px: g.screen_height_px,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorSection {
    pub scene_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub port: u16,
    pub tick_hz: u32,
    pub metrics_every: u64,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            tick_hz: DEFAULT_TICK_HZ,
            metrics_every: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreSection {
    pub calibration_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSection {
    pub seed: Option<u64>,
    pub currency_names_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub pipeline: PipelineSection,
    pub detector: DetectorSection,
    pub distance: DistanceSection,
    pub interaction: InteractionSection,
    pub simulator: SimulatorSection,
    pub service: ServiceSection,
    pub store: StoreSection,
    pub session: SessionSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SessionConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|m| AppError::config(path, m))
    }

    /// Parse TOML text; the message names the line and column on failure.
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, String> {
        let mut cfg: SessionConfig = toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        self.pipeline_config().validate().map_err(|e| e.to_string())?;
        if self.service.tick_hz == 0 || self.service.tick_hz > 1000 {
            return Err("service.tick_hz must lie in [1, 1000]".into());
        }
        if self.detector.kind == DetectorKind::Remote && self.detector.endpoint.is_none() {
            return Err("detector.kind = \"remote\" requires detector.endpoint".into());
        }
        if self.detector.kind == DetectorKind::Scripted && self.detector.script_path.is_none() {
            return Err("detector.kind = \"scripted\" requires detector.script_path".into());
        }
        let d = &self.distance;
        let set = [d.focal_px.is_some(), d.ref_width_px.is_some(), d.ref_height_px.is_some()];
        if set.iter().any(|s| *s) && !set.iter().all(|s| *s) {
            return Err("distance.focal_px, ref_width_px and ref_height_px must be given together".into());
        }
        Ok(())
    }

    /// Resolve a path from the config against its directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            target_long_edge_px: self.pipeline.target_long_edge_px,
            latency_budget_ms: self.pipeline.latency_budget_ms,
            min_score: self.pipeline.min_score,
            ..PipelineConfig::default()
        }
    }

    pub fn gesture_config(&self) -> GestureConfig {
        let i = &self.interaction;
        GestureConfig {
            tap_max_ms: i.tap_max_ms,
            slop_px: i.slop_px,
            long_press_ms: i.long_press_ms,
            swipe_min_fraction: i.swipe_min_fraction,
            swipe_max_ms: i.swipe_max_ms,
            screen_width_px: i.screen_width_px,
            screen_height_px: i.screen_height_px,
        }
    }

    pub fn tick_ms(&self) -> u64 {
        (1000 / self.service.tick_hz as u64).max(1)
    }

    pub fn calibration_path(&self) -> Option<PathBuf> {
        self.store.calibration_path.as_deref().map(|p| self.resolve(p))
    }

    /// Engine settings, reading the registry and currency name files if set.
    pub fn engine_config(&self) -> Result<EngineConfig, AppError> {
        let registry = match &self.distance.registry_path {
            Some(p) => formats::load_registry(&self.resolve(p))?,
            None => ObjectSizeRegistry::default(),
        };
        let registry = registry
            .with_default_d0(self.distance.default_d0_m)
            .map_err(|e| AppError::config("distance.default_d0_m", e))?;
        let currency_names = match &self.session.currency_names_path {
            Some(p) => formats::load_currency_names(&self.resolve(p))?,
            None => formats::bundled_currency_names(),
        };
        let d = &self.distance;
        let intrinsics = match (d.focal_px, d.ref_width_px, d.ref_height_px) {
            (Some(f), Some(w), Some(h)) => {
                let dims = Dims::new(w, h).map_err(|e| AppError::config("distance.ref_width_px", e))?;
                Some(CameraIntrinsics::new(f, dims).map_err(|e| AppError::config("distance.focal_px", e))?)
            }
            _ => None,
        };
        Ok(EngineConfig {
            pipeline: self.pipeline_config(),
            gestures: self.gesture_config(),
            tracker: TrackerConfig {
                expiry_ms: d.track_expiry_ms,
            },
            registry,
            intrinsics,
            tick_ms: self.tick_ms(),
            metrics_every: self.service.metrics_every,
            first_launch: true,
            currency_names,
            seed: self.session.seed,
        })
    }
}
