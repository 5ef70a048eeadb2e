//! Per-frame preprocess → detect → normalize flow over a pluggable detector.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{rescale_box, Detection, Dims, Frame, ModelError, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropPolicy {
    /// Only the newest pending frame is kept; older ones are discarded.
    DropStaleKeepLatest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub target_long_edge_px: u32,
    pub latency_budget_ms: u32,
    pub drop_policy: DropPolicy,
    pub min_score: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_long_edge_px: 640,
            latency_budget_ms: 200,
            drop_policy: DropPolicy::DropStaleKeepLatest,
            min_score: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.target_long_edge_px < 64 {
            return Err(PipelineError::InvalidConfig("target_long_edge_px must be >= 64"));
        }
        if self.latency_budget_ms < 1 {
            return Err(PipelineError::InvalidConfig("latency_budget_ms must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(PipelineError::InvalidConfig("min_score must lie in [0,1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorError {
    Timeout,
    BadResponse(String),
    HttpError(u16),
    Unavailable(String),
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorError::Timeout => f.write_str("detector timed out"),
            DetectorError::BadResponse(m) => write!(f, "bad detector response: {m}"),
            DetectorError::HttpError(s) => write!(f, "detector returned HTTP {s}"),
            DetectorError::Unavailable(m) => write!(f, "detector unavailable: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    DetectorUnavailable(DetectorError),
    BudgetExceeded { elapsed_ms: u64, budget_ms: u32 },
    /// The adapter answered in a coordinate space other than its input grid.
    Model(ModelError),
    InvalidConfig(&'static str),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::DetectorUnavailable(e) => write!(f, "detection unavailable: {e}"),
            PipelineError::BudgetExceeded {
                elapsed_ms,
                budget_ms,
            } => write!(f, "frame took {elapsed_ms} ms, budget {budget_ms} ms"),
            PipelineError::Model(e) => write!(f, "{e}"),
            PipelineError::InvalidConfig(m) => write!(f, "invalid pipeline config: {m}"),
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        PipelineError::Model(e)
    }
}

/// A detection backend. Receives the downscaled frame and answers with boxes
/// tagged [`Space::Downscaled`].
pub trait DetectorAdapter {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError>;
}

impl<T: DetectorAdapter + ?Sized> DetectorAdapter for &mut T {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        (**self).detect(frame)
    }
}

impl<T: DetectorAdapter + ?Sized> DetectorAdapter for alloc::boxed::Box<T> {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        (**self).detect(frame)
    }
}

/// Millisecond time source used for the latency budget.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// A clock that never advances on its own; headless runs use it so that no
/// frame is ever dropped for wall-clock reasons.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock(pub u64);

impl Clock for FrozenClock {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

/// Mapping between the original frame grid and the detector grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleInfo {
    pub original: Dims,
    pub scaled: Dims,
}

impl ScaleInfo {
    pub fn is_identity(&self) -> bool {
        self.original == self.scaled
    }
}

/// Shrink the frame so its long edge is at most `target_long_edge_px`.
/// Frames are never upscaled. The pixel payload is opaque and carried through
/// unchanged.
pub fn preprocess(frame: &Frame, cfg: &PipelineConfig) -> (Frame, ScaleInfo) {
    let original = frame.dims();
    let long = original.long_edge();
    let scaled = if long <= cfg.target_long_edge_px {
        original
    } else {
        let target = cfg.target_long_edge_px as u64;
        let scale_edge = |edge: u32| -> u32 {
            // round(edge * target / long) in integer arithmetic
            let v = (edge as u64 * target * 2 + long as u64) / (long as u64 * 2);
            v.max(1) as u32
        };
        Dims {
            width: scale_edge(original.width),
            height: scale_edge(original.height),
        }
    };
    let mut out = frame.clone();
    out.width_px = scaled.width;
    out.height_px = scaled.height;
    (out, ScaleInfo { original, scaled })
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub detector_errors: u64,
    pub last_latency_ms: u64,
}

/// Stateful wrapper holding config and counters.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    metrics: PipelineMetrics,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            metrics: PipelineMetrics::default(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn metrics(&self) -> PipelineMetrics {
        self.metrics
    }

    /// Record frames discarded before reaching the detector.
    pub fn note_dropped(&mut self, n: u64) {
        self.metrics.frames_dropped += n;
    }

    /// Run one frame. Output boxes are in original-frame coordinates, filtered
    /// by `min_score`, in adapter order.
    pub fn run_step(
        &mut self,
        frame: &Frame,
        adapter: &mut dyn DetectorAdapter,
        clock: &dyn Clock,
    ) -> Result<Vec<Detection>, PipelineError> {
        let started = clock.now_ms();
        let (small, scale) = preprocess(frame, &self.cfg);
        let raw = match adapter.detect(&small) {
            Ok(d) => d,
            Err(e) => {
                self.metrics.detector_errors += 1;
                return Err(PipelineError::DetectorUnavailable(e));
            }
        };
        let elapsed = clock.now_ms().saturating_sub(started);
        self.metrics.last_latency_ms = elapsed;
        if elapsed > self.cfg.latency_budget_ms as u64 {
            self.metrics.frames_dropped += 1;
            return Err(PipelineError::BudgetExceeded {
                elapsed_ms: elapsed,
                budget_ms: self.cfg.latency_budget_ms,
            });
        }
        let out = normalize(raw, scale, self.cfg.min_score)?;
        self.metrics.frames_processed += 1;
        Ok(out)
    }
}

/// Filter by score and map adapter boxes back to the original grid.
pub fn normalize(
    raw: Vec<Detection>,
    scale: ScaleInfo,
    min_score: f64,
) -> Result<Vec<Detection>, PipelineError> {
    let mut out = Vec::with_capacity(raw.len());
    for mut d in raw {
        d.bbox.ensure_space(Space::Downscaled)?;
        d.validate()?;
        if d.score < min_score {
            continue;
        }
        d.bbox = rescale_box(&d.bbox, scale.scaled, scale.original, Space::Original);
        out.push(d);
    }
    Ok(out)
}

/// Single-slot frame buffer implementing drop-stale-keep-latest.
#[derive(Debug, Default)]
pub struct FrameSlot {
    pending: Option<Frame>,
    dropped: u64,
}

impl FrameSlot {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store `frame`, returning the stale frame it replaced.
    pub fn offer(&mut self, frame: Frame) -> Option<Frame> {
        let stale = self.pending.replace(frame);
        if stale.is_some() {
            self.dropped += 1;
        }
        stale
    }

    pub fn take(&mut self) -> Option<Frame> {
        self.pending.take()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// One line of a detection script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScriptEntry {
    pub frame_id: u64,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptOrderError {
    /// Zero-based index of the offending entry.
    pub index: usize,
    pub frame_id: u64,
    pub previous: u64,
}

impl fmt::Display for ScriptOrderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frame_id {} after {} (entry {}): ids must be non-decreasing",
            self.frame_id, self.previous, self.index
        )
    }
}

/// Validated detection script, indexed by frame id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionScript {
    entries: BTreeMap<u64, Vec<Detection>>,
}

impl DetectionScript {
    /// Entries sharing a frame id are concatenated in file order.
    pub fn from_entries(
        entries: impl IntoIterator<Item = DetectionScriptEntry>,
    ) -> Result<Self, ScriptOrderError> {
        let mut map: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
        let mut last: Option<u64> = None;
        for (index, e) in entries.into_iter().enumerate() {
            if let Some(prev) = last {
                if e.frame_id < prev {
                    return Err(ScriptOrderError {
                        index,
                        frame_id: e.frame_id,
                        previous: prev,
                    });
                }
            }
            last = Some(e.frame_id);
            map.entry(e.frame_id).or_default().extend(e.detections);
        }
        Ok(Self { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, frame_id: u64) -> &[Detection] {
        self.entries.get(&frame_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Look up the scripted detections for `frame_id`; empty when absent.
pub fn scripted_detect(script: &DetectionScript, frame_id: u64) -> Vec<Detection> {
    script.get(frame_id).to_vec()
}

#[derive(Debug, Clone)]
pub struct ScriptedDetector {
    script: DetectionScript,
}

impl ScriptedDetector {
    pub fn new(script: DetectionScript) -> Self {
        Self { script }
    }
}

impl DetectorAdapter for ScriptedDetector {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        Ok(scripted_detect(&self.script, frame.id))
    }
}
