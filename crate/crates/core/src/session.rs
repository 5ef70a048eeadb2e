//! One user's session: simulator, pipeline, tracks, pages and speech,
//! advanced by explicit ticks and commands.
//!
//! Every output is an [`Envelope`] with a gapless sequence number. The same
//! envelopes serve as the live wire protocol and the headless log format.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::currency::{announce_tally, tally, CurrencyNames};
use crate::distance::{Confidence, ObjectSizeRegistry, Tracker, TrackerConfig};
use crate::feedback::{
    announce_object, proximity_pattern, Bucket, FeedbackEvent, HapticKind, HapticPattern,
    HapticSegment, Priority, SpeechCommand, SpeechItem, SpeechQueue,
};
use crate::interaction::{
    navigate, open_page, start_page, FeatureAction, Gesture, GestureConfig, GestureKind,
    GestureMachine, NavOutcome, Page, TouchEvent, TouchKind,
};
use crate::model::{CameraIntrinsics, Detection, Frame};
use crate::pipeline::{Clock, DetectorAdapter, Pipeline, PipelineConfig, PipelineError};
use crate::reading::{assemble, speak_text, TextBlock};
use crate::sim::{step, CameraPose, RasterDetector, Scene, SimulatedDetector, StepCommand};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TICK_MS: u64 = 100;
/// Frames a track must be matched in before it drives feedback; filters
/// one-frame misdetections.
pub const CONFIRM_HITS: u32 = 3;

/// Inbound commands from a client or a walk script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Touch {
        kind: TouchKind,
        x: f64,
        y: f64,
        t_ms: u64,
    },
    Gesture {
        kind: GestureKind,
        #[serde(default)]
        target: Option<String>,
    },
    Move {
        #[serde(default)]
        forward: f64,
        #[serde(default)]
        turn: f64,
    },
    Mode {
        mode: Page,
    },
    Reset {},
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseView {
    pub x: f64,
    pub z: f64,
    pub heading: f64,
}

impl From<CameraPose> for PoseView {
    fn from(p: CameraPose) -> Self {
        Self {
            x: p.x,
            z: p.z,
            heading: p.heading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackView {
    pub track_id: u64,
    pub label: String,
    pub distance_m: f64,
    pub bucket: String,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub page: Page,
    pub pose: PoseView,
    pub collision: bool,
    /// Proximity vibration strength for the nearest tracked object.
    pub intensity: f64,
    pub tracks: Vec<TrackView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsView {
    pub ticks: u64,
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub detector_errors: u64,
    pub last_latency_ms: u64,
    pub active_tracks: u64,
    pub speech_pending: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Speech {
        text: String,
        priority: u8,
        /// Text of the utterance this one cut off, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interrupted: Option<String>,
    },
    Haptic {
        kind: HapticKind,
        segments: Vec<HapticSegment>,
    },
    Detection {
        frame_id: u64,
        detections: Vec<Detection>,
    },
    State(StateView),
    Metrics(MetricsView),
    Error {
        code: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    pub t_ms: u64,
    #[serde(flatten)]
    pub payload: Payload,
}

/// Where detections come from.
pub enum DetectorSource {
    /// Geometric simulator with the scene's noise model.
    Simulated,
    /// Rendered label buffer; see [`RasterDetector`].
    Raster,
    /// Any other adapter, e.g. a scripted file or a remote service. The
    /// payload closure supplies pixel bytes for each frame.
    External {
        adapter: Box<dyn DetectorAdapter + Send>,
        pixels: Option<fn(&Frame) -> Vec<u8>>,
    },
}

impl core::fmt::Debug for DetectorSource {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            DetectorSource::Simulated => "Simulated",
            DetectorSource::Raster => "Raster",
            DetectorSource::External { .. } => "External",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub pipeline: PipelineConfig,
    pub gestures: GestureConfig,
    pub tracker: TrackerConfig,
    pub registry: ObjectSizeRegistry,
    /// Overrides the scene camera for distance calibration.
    pub intrinsics: Option<CameraIntrinsics>,
    pub tick_ms: u64,
    /// A metrics envelope every this many ticks; 0 disables them.
    pub metrics_every: u64,
    pub first_launch: bool,
    pub currency_names: CurrencyNames,
    /// Overrides the scene's noise seed.
    pub seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            gestures: GestureConfig::default(),
            tracker: TrackerConfig::default(),
            registry: ObjectSizeRegistry::default(),
            intrinsics: None,
            tick_ms: DEFAULT_TICK_MS,
            metrics_every: 10,
            first_launch: true,
            currency_names: CurrencyNames::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionError {
    Pipeline(PipelineError),
    Scene(crate::sim::SimError),
}

impl core::fmt::Display for SessionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SessionError::Pipeline(e) => write!(f, "{e}"),
            SessionError::Scene(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SessionError {}

/// Maps client touch timestamps onto session time so long-press timers can
/// be driven by ticks.
#[derive(Debug, Clone, Copy)]
struct TouchClock {
    client_ms: u64,
    session_ms: u64,
}

pub struct SessionEngine {
    cfg: EngineConfig,
    scene: Scene,
    initial_pose: CameraPose,
    pose: CameraPose,
    collision: bool,
    source: DetectorSource,
    sim: SimulatedDetector,
    raster: RasterDetector,
    pipeline: Pipeline,
    tracker: Tracker,
    speech: SpeechQueue,
    gestures: GestureMachine,
    page: Page,
    pending_moves: VecDeque<StepCommand>,
    touch_clock: Option<TouchClock>,
    last_detections: Vec<Detection>,
    hits: BTreeMap<u64, u32>,
    /// Tracks announced since the object detection page was opened.
    announced: BTreeSet<u64>,
    next_pulse_ms: u64,
    intensity: f64,
    pending_interrupt: Option<String>,
    t_ms: u64,
    ticks: u64,
    frame_id: u64,
    seq: u64,
}

impl SessionEngine {
    pub fn new(scene: Scene, cfg: EngineConfig, source: DetectorSource) -> Result<Self, SessionError> {
        scene.validate().map_err(SessionError::Scene)?;
        let mut scene = scene;
        if let Some(seed) = cfg.seed {
            scene.noise.seed = seed;
        }
        let pipeline = Pipeline::new(cfg.pipeline.clone()).map_err(SessionError::Pipeline)?;
        let intrinsics = cfg.intrinsics.unwrap_or_else(|| scene.camera.intrinsics());
        let tracker = Tracker::new(intrinsics, cfg.registry.clone(), cfg.tracker);
        let pose = scene.camera.pose();
        Ok(Self {
            sim: SimulatedDetector::from_scene(&scene),
            raster: RasterDetector::from_scene(&scene),
            gestures: GestureMachine::new(cfg.gestures),
            initial_pose: pose,
            pose,
            collision: false,
            source,
            pipeline,
            tracker,
            speech: SpeechQueue::new(),
            page: Page::Home,
            pending_moves: VecDeque::new(),
            touch_clock: None,
            last_detections: Vec::new(),
            hits: BTreeMap::new(),
            announced: BTreeSet::new(),
            next_pulse_ms: 0,
            intensity: 0.0,
            pending_interrupt: None,
            t_ms: 0,
            ticks: 0,
            frame_id: 0,
            seq: 0,
            scene,
            cfg,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }
    pub fn page(&self) -> Page {
        self.page
    }
    pub fn pose(&self) -> CameraPose {
        self.pose
    }
    pub fn now_ms(&self) -> u64 {
        self.t_ms
    }
    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }
    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Emit an error envelope for a problem found outside the engine, such
    /// as a malformed client message.
    pub fn report_error(&mut self, code: &str, message: String) -> Vec<Envelope> {
        let mut out = Vec::new();
        self.emit_error(&mut out, code, message);
        out
    }

    /// Calibration records created since the last call.
    pub fn drain_records(&mut self) -> Vec<crate::distance::CalibrationRecord> {
        self.tracker.drain_records()
    }

    fn emit(&mut self, out: &mut Vec<Envelope>, payload: Payload) {
        self.seq += 1;
        out.push(Envelope {
            seq: self.seq,
            t_ms: self.t_ms,
            payload,
        });
    }

    fn state_view(&self) -> StateView {
        let width = self.scene.camera.frame_w;
        StateView {
            page: self.page,
            pose: self.pose.into(),
            collision: self.collision,
            intensity: self.intensity,
            tracks: self
                .tracker
                .tracks()
                .map(|t| TrackView {
                    track_id: t.track_id,
                    label: t.label.clone(),
                    distance_m: t.last_distance_m,
                    bucket: Bucket::of(t.last_box.center_x(), width).as_str().to_string(),
                    confidence: t.confidence,
                })
                .collect(),
        }
    }

    fn emit_state(&mut self, out: &mut Vec<Envelope>) {
        let s = self.state_view();
        self.emit(out, Payload::State(s));
    }

    fn emit_error(&mut self, out: &mut Vec<Envelope>, code: &str, message: String) {
        self.emit(
            out,
            Payload::Error {
                code: code.to_string(),
                message,
            },
        );
    }

    fn apply_speech(&mut self, out: &mut Vec<Envelope>, cmds: Vec<SpeechCommand>) {
        for c in cmds {
            match c {
                SpeechCommand::Interrupt(item) => self.pending_interrupt = Some(item.text),
                SpeechCommand::Speak(item) => {
                    let interrupted = self.pending_interrupt.take();
                    self.emit(
                        out,
                        Payload::Speech {
                            text: item.text,
                            priority: item.priority.level(),
                            interrupted,
                        },
                    );
                }
            }
        }
    }

    fn say(&mut self, out: &mut Vec<Envelope>, item: SpeechItem) {
        let (_, cmds) = self.speech.enqueue(item, self.t_ms);
        self.apply_speech(out, cmds);
    }

    fn haptic(&mut self, out: &mut Vec<Envelope>, p: HapticPattern) {
        self.emit(
            out,
            Payload::Haptic {
                kind: p.kind,
                segments: p.segments,
            },
        );
    }

    fn apply_feedback(&mut self, out: &mut Vec<Envelope>, events: Vec<FeedbackEvent>) {
        for e in events {
            match e {
                FeedbackEvent::Speech(s) => self.say(out, s),
                FeedbackEvent::Haptic(h) => self.haptic(out, h),
            }
        }
    }

    /// Session-start envelopes: the initial state and the first page's speech.
    pub fn start(&mut self) -> Vec<Envelope> {
        let mut out = Vec::new();
        let (page, events) = start_page(self.cfg.first_launch);
        self.page = page;
        self.emit_state(&mut out);
        self.apply_feedback(&mut out, events);
        out
    }

    fn apply_nav(&mut self, out: &mut Vec<Envelope>, nav: NavOutcome) {
        let changed = nav.page != self.page;
        if changed {
            let cmds = self.speech.flush_non_critical();
            self.apply_speech(out, cmds);
            if self.page == Page::ObjectDetection {
                // obstacle warnings are only produced on this page
                self.speech.drop_queued_critical();
            }
            self.page = nav.page;
            self.next_pulse_ms = 0;
            self.announced.clear();
        }
        self.apply_feedback(out, nav.events);
        if changed {
            self.emit_state(out);
        }
        if let Some(action) = nav.action {
            self.run_action(out, action);
        }
    }

    fn run_action(&mut self, out: &mut Vec<Envelope>, action: FeatureAction) {
        let item = match action {
            FeatureAction::DescribeObjects => {
                let width = self.scene.camera.frame_w;
                let mut items: Vec<SpeechItem> = self
                    .tracker
                    .tracks()
                    .filter(|t| self.confirmed(t.track_id))
                    .map(|t| {
                        let mut s = announce_object(t, width);
                        s.dedupe_key = None;
                        s
                    })
                    .collect();
                if items.is_empty() {
                    items.push(content("no objects detected"));
                }
                for i in items {
                    self.say(out, i);
                }
                return;
            }
            FeatureAction::CountCurrency => {
                let t = tally(&self.last_detections, self.cfg.pipeline.min_score);
                announce_tally(&t, &self.cfg.currency_names)
            }
            FeatureAction::ReadText => {
                let blocks: Vec<TextBlock> =
                    self.last_detections.iter().filter_map(TextBlock::from_detection).collect();
                match assemble(&blocks) {
                    Ok(text) => speak_text(&text),
                    Err(e) => {
                        self.emit_error(out, "reading", e.to_string());
                        speak_text("")
                    }
                }
            }
        };
        self.say(out, item);
    }

    fn on_gesture(&mut self, out: &mut Vec<Envelope>, g: Gesture) {
        match navigate(self.page, &g, &self.cfg.gestures) {
            Ok(nav) => self.apply_nav(out, nav),
            Err(e) => {
                let fb = e.feedback();
                self.emit_error(out, "unknown_control", e.to_string());
                self.apply_feedback(out, alloc::vec![fb]);
            }
        }
    }

    /// Handle one inbound command. Moves are queued for the next tick;
    /// everything else takes effect at once.
    pub fn handle(&mut self, cmd: Command) -> Vec<Envelope> {
        let mut out = Vec::new();
        match cmd {
            Command::Touch { kind, x, y, t_ms } => {
                let ev = TouchEvent::new(kind, x, y, t_ms);
                match self.gestures.feed(ev) {
                    Ok(g) => {
                        self.touch_clock = Some(TouchClock {
                            client_ms: t_ms,
                            session_ms: self.t_ms,
                        });
                        if let Some(g) = g {
                            self.on_gesture(&mut out, g);
                        }
                    }
                    Err(e) => self.emit_error(&mut out, "gesture", e.to_string()),
                }
            }
            Command::Gesture { kind, target } => {
                self.on_gesture(&mut out, Gesture { kind, target, at: None });
            }
            Command::Move { forward, turn } => {
                let cmd = StepCommand { forward, turn };
                match cmd.validate() {
                    Ok(()) => self.pending_moves.push_back(cmd),
                    Err(e) => self.emit_error(&mut out, "move", e.to_string()),
                }
            }
            Command::Mode { mode } => {
                if mode == Page::Intro {
                    self.emit_error(&mut out, "mode", "the introduction is only shown on first launch".into());
                } else if mode == self.page {
                    let name = mode.spoken_name();
                    self.say(&mut out, navigation(name));
                } else {
                    self.apply_nav(&mut out, open_page(mode));
                }
            }
            Command::Reset {} => {
                self.pose = self.initial_pose;
                self.collision = false;
                self.tracker.clear();
                self.hits.clear();
                self.announced.clear();
                self.speech.clear();
                self.gestures.reset();
                self.pending_moves.clear();
                self.touch_clock = None;
                self.last_detections.clear();
                self.intensity = 0.0;
                self.next_pulse_ms = 0;
                self.pending_interrupt = None;
                self.page = Page::Home;
                self.emit_state(&mut out);
                self.say(&mut out, navigation(Page::Home.spoken_name()));
            }
        }
        out
    }

    fn frame_dims(&self) -> crate::model::Dims {
        self.scene.camera.dims()
    }

    /// Advance the session clock by one tick and run the full loop: moves,
    /// gesture timers, sensing, tracking and feedback.
    pub fn tick(&mut self, clock: &dyn Clock) -> Vec<Envelope> {
        let mut out = Vec::new();
        self.t_ms += self.cfg.tick_ms;
        self.ticks += 1;

        let mut moved = false;
        while let Some(cmd) = self.pending_moves.pop_front() {
            let before = (self.pose, self.collision);
            match step(&self.pose, &cmd, &self.scene.objects) {
                Ok(r) => {
                    self.pose = r.pose;
                    self.collision = r.collision;
                }
                Err(e) => self.emit_error(&mut out, "move", e.to_string()),
            }
            moved |= before != (self.pose, self.collision);
        }

        if let Some(tc) = self.touch_clock {
            if self.gestures.is_pressed() {
                let client_now = tc.client_ms + (self.t_ms - tc.session_ms);
                if let Ok(Some(g)) = self.gestures.tick(client_now) {
                    self.on_gesture(&mut out, g);
                }
            }
        }

        self.frame_id += 1;
        let mut frame = Frame::new(self.frame_id, self.t_ms, self.frame_dims());
        self.sim.pose = self.pose;
        self.raster.pose = self.pose;
        let result = match &mut self.source {
            DetectorSource::Simulated => self.pipeline.run_step(&frame, &mut self.sim, clock),
            DetectorSource::Raster => self.pipeline.run_step(&frame, &mut self.raster, clock),
            DetectorSource::External { adapter, pixels } => {
                if let Some(make) = pixels {
                    frame.pixels = Some(make(&frame));
                }
                self.pipeline.run_step(&frame, adapter.as_mut(), clock)
            }
        };

        let tracks_before = self.tracker.len();
        let mut updated: Vec<u64> = Vec::new();
        match result {
            Ok(dets) => {
                self.emit(
                    &mut out,
                    Payload::Detection {
                        frame_id: frame.id,
                        detections: dets.clone(),
                    },
                );
                match self.tracker.associate(&dets, frame.width_px, self.t_ms) {
                    Ok(a) => {
                        updated.extend(a.matched.iter().map(|m| m.0));
                        updated.extend(a.created.iter().map(|c| c.0));
                        for t in &a.expired {
                            self.hits.remove(&t.track_id);
                            self.announced.remove(&t.track_id);
                        }
                        for id in &updated {
                            *self.hits.entry(*id).or_insert(0) += 1;
                        }
                    }
                    Err(e) => self.emit_error(&mut out, "tracking", e.to_string()),
                }
                self.last_detections = dets;
            }
            Err(PipelineError::BudgetExceeded { .. }) => {}
            Err(e @ PipelineError::DetectorUnavailable(_)) => {
                self.emit_error(&mut out, "detector_unavailable", e.to_string());
                let item = navigation("detection unavailable").with_key("detector-unavailable");
                self.say(&mut out, item);
                // drop tracks that would otherwise only be refreshed by detections
                if let Ok(a) = self.tracker.associate(&[], frame.width_px, self.t_ms) {
                    for t in &a.expired {
                        self.hits.remove(&t.track_id);
                        self.announced.remove(&t.track_id);
                    }
                }
            }
            Err(e) => self.emit_error(&mut out, "pipeline", e.to_string()),
        }

        self.proximity_feedback(&mut out, &updated);

        let cmds = self.speech.advance(self.t_ms);
        self.apply_speech(&mut out, cmds);

        if moved || !updated.is_empty() || tracks_before != self.tracker.len() {
            self.emit_state(&mut out);
        }
        if self.cfg.metrics_every > 0 && self.ticks % self.cfg.metrics_every == 0 {
            let m = self.metrics();
            self.emit(&mut out, Payload::Metrics(m));
        }
        out
    }

    pub fn metrics(&self) -> MetricsView {
        let p = self.pipeline.metrics();
        MetricsView {
            ticks: self.ticks,
            frames_processed: p.frames_processed,
            frames_dropped: p.frames_dropped,
            detector_errors: p.detector_errors,
            last_latency_ms: p.last_latency_ms,
            active_tracks: self.tracker.len() as u64,
            speech_pending: self.speech.pending() as u64,
        }
    }

    fn confirmed(&self, track_id: u64) -> bool {
        self.hits.get(&track_id).is_some_and(|h| *h >= CONFIRM_HITS)
    }

    /// On the object detection page: pulse for the nearest confirmed object
    /// refreshed this tick. Each object is announced once per page visit, and
    /// again (as a critical warning) while nearer than the near threshold.
    fn proximity_feedback(&mut self, out: &mut Vec<Envelope>, updated: &[u64]) {
        if self.page != Page::ObjectDetection {
            self.intensity = 0.0;
            return;
        }
        let width = self.scene.camera.frame_w;
        let fresh: Vec<_> = updated
            .iter()
            .filter(|id| self.confirmed(**id))
            .filter_map(|id| self.tracker.get(*id))
            .cloned()
            .collect();
        let nearest = fresh
            .iter()
            .map(|t| t.last_distance_m)
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
        let pattern = nearest.and_then(|d| proximity_pattern(d).ok().flatten());
        match pattern {
            Some(p) => {
                self.intensity = p.segments[0].intensity;
                if self.t_ms >= self.next_pulse_ms {
                    self.next_pulse_ms = self.t_ms + p.total_duration_ms() as u64;
                    self.haptic(out, p);
                }
            }
            None => {
                self.intensity = 0.0;
                self.next_pulse_ms = 0;
            }
        }
        for t in &fresh {
            let item = announce_object(t, width);
            if self.announced.insert(t.track_id) || item.priority == Priority::CRITICAL {
                self.say(out, item);
            }
        }
    }
}

fn navigation(text: &str) -> SpeechItem {
    SpeechItem {
        text: String::from(text),
        priority: Priority::NAVIGATION,
        dedupe_key: None,
        enqueued_ms: 0,
    }
}

fn content(text: &str) -> SpeechItem {
    SpeechItem {
        text: String::from(text),
        priority: Priority::CONTENT,
        dedupe_key: None,
        enqueued_ms: 0,
    }
}

/// Summary of the engine settings a client may want to display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub tick_ms: u64,
    pub target_long_edge_px: u32,
    pub min_score: f64,
    pub detector: String,
    pub frame_w: u32,
    pub frame_h: u32,
}

/// First message on a live connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol_version: u32,
    pub config_summary: ConfigSummary,
    pub scene: Scene,
}

impl SessionEngine {
    pub fn hello(&self) -> Hello {
        Hello {
            kind: "hello".into(),
            protocol_version: PROTOCOL_VERSION,
            config_summary: ConfigSummary {
                tick_ms: self.cfg.tick_ms,
                target_long_edge_px: self.cfg.pipeline.target_long_edge_px,
                min_score: self.cfg.pipeline.min_score,
                detector: format!("{:?}", self.source).to_lowercase(),
                frame_w: self.scene.camera.frame_w,
                frame_h: self.scene.camera.frame_h,
            },
            scene: self.scene.clone(),
        }
    }
}
