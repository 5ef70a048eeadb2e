//! Haptic patterns and the prioritized speech queue.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceTrack;

/// 10 ft. Beyond this there is no proximity vibration.
pub const FAR_M: f64 = 3.048;
/// 5 ft. Between NEAR and FAR the vibration is medium; below it ramps up.
pub const NEAR_M: f64 = 1.524;
pub const MEDIUM_INTENSITY: f64 = 0.5;
pub const PULSE_MS: u32 = 100;
pub const MIN_GAP_MS: u32 = 100;
pub const MAX_GAP_MS: u32 = 500;
pub const MAX_PATTERN_MS: u32 = 3000;
pub const NAV_INTENSITY: f64 = 0.8;
pub const PAGE_OPEN_MS: u32 = 500;
pub const PAGE_BACK_PULSE_MS: u32 = 80;
pub const DEDUPE_WINDOW_MS: u64 = 3000;

#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackError {
    NegativeDistance(f64),
    InvalidSegment,
    PatternTooLong(u32),
    EmptyText,
    InvalidPriority(u8),
}

impl fmt::Display for FeedbackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedbackError::NegativeDistance(d) => write!(f, "distance {d} m is negative"),
            FeedbackError::InvalidSegment => f.write_str("haptic segment out of range"),
            FeedbackError::PatternTooLong(ms) => {
                write!(f, "pattern lasts {ms} ms, limit {MAX_PATTERN_MS} ms")
            }
            FeedbackError::EmptyText => f.write_str("speech text is empty"),
            FeedbackError::InvalidPriority(p) => write!(f, "priority {p} not in 0..=2"),
        }
    }
}

impl core::error::Error for FeedbackError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticSegment {
    pub intensity: f64,
    pub duration_ms: u32,
    pub gap_ms: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapticKind {
    Proximity,
    PageOpen,
    PageBack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapticPattern {
    pub kind: HapticKind,
    pub segments: Vec<HapticSegment>,
}

impl HapticPattern {
    pub fn new(kind: HapticKind, segments: Vec<HapticSegment>) -> Result<Self, FeedbackError> {
        for s in &segments {
            if !(0.0..=1.0).contains(&s.intensity) || s.duration_ms == 0 {
                return Err(FeedbackError::InvalidSegment);
            }
        }
        let p = Self { kind, segments };
        let total = p.total_duration_ms();
        if total > MAX_PATTERN_MS {
            return Err(FeedbackError::PatternTooLong(total));
        }
        Ok(p)
    }

    /// Sum of every segment's vibration and trailing gap.
    pub fn total_duration_ms(&self) -> u32 {
        self.segments.iter().map(|s| s.duration_ms + s.gap_ms).sum()
    }
}

/// Vibration strength for an obstacle `distance_m` away.
///
/// Zero beyond [`FAR_M`], medium across the 5-10 ft band, then a linear ramp
/// up to full strength at contact.
pub fn proximity_intensity(distance_m: f64) -> Result<f64, FeedbackError> {
    if !(distance_m >= 0.0) {
        return Err(FeedbackError::NegativeDistance(distance_m));
    }
    Ok(if distance_m > FAR_M {
        0.0
    } else if distance_m >= NEAR_M {
        MEDIUM_INTENSITY
    } else {
        MEDIUM_INTENSITY + MEDIUM_INTENSITY * (NEAR_M - distance_m) / NEAR_M
    })
}

/// Silence between proximity pulses; shrinks as the obstacle gets closer.
pub fn proximity_gap_ms(distance_m: f64) -> u32 {
    let raw = 100.0 + 400.0 * distance_m / FAR_M;
    libm::round(raw.clamp(MIN_GAP_MS as f64, MAX_GAP_MS as f64)) as u32
}

/// One proximity pulse, or `None` when the obstacle is out of range.
pub fn proximity_pattern(distance_m: f64) -> Result<Option<HapticPattern>, FeedbackError> {
    let intensity = proximity_intensity(distance_m)?;
    if intensity == 0.0 {
        return Ok(None);
    }
    let seg = HapticSegment {
        intensity,
        duration_ms: PULSE_MS,
        gap_ms: proximity_gap_ms(distance_m),
    };
    HapticPattern::new(HapticKind::Proximity, alloc::vec![seg]).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavigationEvent {
    PageOpen,
    PageBack,
}

/// One long vibration for opening a page, three short ones for going back.
pub fn navigation_pattern(event: NavigationEvent) -> HapticPattern {
    let segments = match event {
        NavigationEvent::PageOpen => alloc::vec![HapticSegment {
            intensity: NAV_INTENSITY,
            duration_ms: PAGE_OPEN_MS,
            gap_ms: 0,
        }],
        NavigationEvent::PageBack => (0..3)
            .map(|i| HapticSegment {
                intensity: NAV_INTENSITY,
                duration_ms: PAGE_BACK_PULSE_MS,
                gap_ms: if i < 2 { PAGE_BACK_PULSE_MS } else { 0 },
            })
            .collect(),
    };
    let kind = match event {
        NavigationEvent::PageOpen => HapticKind::PageOpen,
        NavigationEvent::PageBack => HapticKind::PageBack,
    };
    HapticPattern { kind, segments }
}

/// 0 = critical proximity, 1 = navigation/UI, 2 = description/content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Priority(u8);

impl Priority {
    pub const CRITICAL: Priority = Priority(0);
    pub const NAVIGATION: Priority = Priority(1);
    pub const CONTENT: Priority = Priority(2);

    pub fn level(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Priority {
    type Error = FeedbackError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        if v > 2 {
            return Err(FeedbackError::InvalidPriority(v));
        }
        Ok(Priority(v))
    }
}

impl From<Priority> for u8 {
    fn from(p: Priority) -> u8 {
        p.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechItem {
    pub text: String,
    pub priority: Priority,
    pub dedupe_key: Option<String>,
    pub enqueued_ms: u64,
}

impl SpeechItem {
    pub fn new(text: impl Into<String>, priority: Priority) -> Result<Self, FeedbackError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(FeedbackError::EmptyText);
        }
        Ok(Self {
            text,
            priority,
            dedupe_key: None,
            enqueued_ms: 0,
        })
    }

    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.dedupe_key = Some(key.into());
        self
    }

    pub fn at(mut self, t_ms: u64) -> Self {
        self.enqueued_ms = t_ms;
        self
    }
}

/// Instructions for a speech sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpeechCommand {
    /// Stop the current utterance; it is not resumed.
    Interrupt(SpeechItem),
    Speak(SpeechItem),
}

/// Playback time model: roughly 180 words per minute plus a lead-in.
pub fn utterance_duration_ms(text: &str) -> u64 {
    300 + 55 * text.chars().count() as u64
}

/// What happened to an enqueued item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Queued,
    Discarded,
}

#[derive(Debug, Clone)]
struct Playing {
    item: SpeechItem,
    ends_ms: u64,
}

/// Three FIFO lanes, one per priority. Critical items preempt anything less
/// urgent that is playing.
#[derive(Debug, Clone, Default)]
pub struct SpeechQueue {
    lanes: [VecDeque<SpeechItem>; 3],
    playing: Option<Playing>,
    recent: Vec<(String, u64)>,
}

impl SpeechQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn playing(&self) -> Option<&SpeechItem> {
        self.playing.as_ref().map(|p| &p.item)
    }

    pub fn pending(&self) -> usize {
        self.lanes.iter().map(VecDeque::len).sum()
    }

    fn is_duplicate(&self, key: &str, now_ms: u64) -> bool {
        let spoken = self
            .recent
            .iter()
            .any(|(k, t)| k == key && now_ms.saturating_sub(*t) < DEDUPE_WINDOW_MS);
        let waiting = self
            .lanes
            .iter()
            .flatten()
            .any(|i| i.dedupe_key.as_deref() == Some(key));
        spoken || waiting
    }

    /// Accept an item and return the commands it triggers right away.
    pub fn enqueue(&mut self, mut item: SpeechItem, now_ms: u64) -> (EnqueueOutcome, Vec<SpeechCommand>) {
        if let Some(key) = item.dedupe_key.as_deref() {
            if self.is_duplicate(key, now_ms) {
                return (EnqueueOutcome::Discarded, Vec::new());
            }
        }
        item.enqueued_ms = now_ms;
        let mut cmds = Vec::new();
        if item.priority == Priority::CRITICAL {
            if let Some(p) = &self.playing {
                if p.item.priority > Priority::CRITICAL {
                    let cut = self.playing.take().map(|p| p.item);
                    cmds.extend(cut.map(SpeechCommand::Interrupt));
                }
            }
        }
        self.lanes[item.priority.level() as usize].push_back(item);
        cmds.extend(self.advance(now_ms));
        (EnqueueOutcome::Queued, cmds)
    }

    /// Finish the current utterance if its time is up and start the next
    /// one, highest priority first.
    pub fn advance(&mut self, now_ms: u64) -> Vec<SpeechCommand> {
        let mut cmds = Vec::new();
        if let Some(p) = &self.playing {
            if now_ms < p.ends_ms {
                return cmds;
            }
            self.playing = None;
        }
        if let Some(next) = self.lanes.iter_mut().find_map(VecDeque::pop_front) {
            self.recent
                .retain(|(_, t)| now_ms.saturating_sub(*t) < DEDUPE_WINDOW_MS);
            if let Some(k) = &next.dedupe_key {
                self.recent.push((k.clone(), now_ms));
            }
            self.playing = Some(Playing {
                ends_ms: now_ms + utterance_duration_ms(&next.text),
                item: next.clone(),
            });
            cmds.push(SpeechCommand::Speak(next));
        }
        cmds
    }

    /// Drop queued navigation and content speech and cut a non-critical
    /// utterance in progress. Used when the page changes.
    pub fn flush_non_critical(&mut self) -> Vec<SpeechCommand> {
        self.lanes[1].clear();
        self.lanes[2].clear();
        match &self.playing {
            Some(p) if p.item.priority > Priority::CRITICAL => {
                let item = self.playing.take().map(|p| p.item);
                item.map(SpeechCommand::Interrupt).into_iter().collect()
            }
            _ => Vec::new(),
        }
    }

    /// Drop queued critical items; one already playing finishes.
    pub fn drop_queued_critical(&mut self) {
        self.lanes[0].clear();
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}

/// The engine's only outputs.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackEvent {
    Speech(SpeechItem),
    Haptic(HapticPattern),
}

/// Which third of the frame an object sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    Left,
    Center,
    Right,
}

impl Bucket {
    /// Half-open thirds `[0,1/3)`, `[1/3,2/3)`, `[2/3,1]`.
    pub fn of(center_x: f64, frame_width_px: u32) -> Bucket {
        let w = frame_width_px as f64;
        if center_x * 3.0 < w {
            Bucket::Left
        } else if center_x * 3.0 < 2.0 * w {
            Bucket::Center
        } else {
            Bucket::Right
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Left => "left",
            Bucket::Center => "center",
            Bucket::Right => "right",
        }
    }
}

/// Distance rounded to the nearest half meter, spoken without a trailing `.0`.
fn spoken_distance(distance_m: f64) -> String {
    let halves = libm::round(distance_m * 2.0).max(1.0) as u64;
    let unit = if halves == 2 { "meter" } else { "meters" };
    if halves % 2 == 0 {
        format!("{} {unit}", halves / 2)
    } else {
        format!("{}.5 {unit}", halves / 2)
    }
}

/// "<label>, <left|center|right>, <distance> meters".
pub fn announce_object(track: &DistanceTrack, frame_width_px: u32) -> SpeechItem {
    let bucket = Bucket::of(track.last_box.center_x(), frame_width_px);
    let label = track.label.replace('_', " ");
    let text = format!(
        "{label}, {}, {}",
        bucket.as_str(),
        spoken_distance(track.last_distance_m)
    );
    let priority = if track.last_distance_m < NEAR_M {
        Priority::CRITICAL
    } else {
        Priority::CONTENT
    };
    SpeechItem {
        text,
        priority,
        dedupe_key: Some(format!("{}:{}", track.label, bucket.as_str())),
        enqueued_ms: track.updated_ms,
    }
}
