//! Speech-first interaction: gesture recognition and the page graph.
//!
//! A tap speaks what a control does, pressing and holding activates it, and
//! an upward swipe goes back. Long presses fire from a timer while the finger
//! is still down; timers are delivered as explicit clock events so the
//! recognizer stays a pure function of its inputs.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::feedback::{navigation_pattern, FeedbackEvent, NavigationEvent, Priority, SpeechItem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureConfig {
    pub tap_max_ms: u64,
    pub slop_px: f64,
    pub long_press_ms: u64,
    /// Minimum upward travel as a fraction of screen height.
    pub swipe_min_fraction: f64,
    pub swipe_max_ms: u64,
    pub screen_width_px: f64,
    pub screen_height_px: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        Self {
            tap_max_ms: 400,
            slop_px: 24.0,
            long_press_ms: 600,
            swipe_min_fraction: 0.25,
            swipe_max_ms: 800,
            screen_width_px: 900.0,
            screen_height_px: 1600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchKind {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchEvent {
    pub kind: TouchKind,
    pub x: f64,
    pub y: f64,
    pub t_ms: u64,
}

impl TouchEvent {
    pub fn new(kind: TouchKind, x: f64, y: f64, t_ms: u64) -> Self {
        Self { kind, x, y, t_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    Tap,
    LongPress,
    SwipeUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gesture {
    pub kind: GestureKind,
    #[serde(default)]
    pub target: Option<String>,
    /// Where the finger first touched down.
    #[serde(default)]
    pub at: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GestureError {
    OutOfOrderEvent { last_ms: u64, got_ms: u64 },
    OutOfBounds { x: f64, y: f64 },
}

impl fmt::Display for GestureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GestureError::OutOfOrderEvent { last_ms, got_ms } => {
                write!(f, "event at {got_ms} ms arrived after {last_ms} ms")
            }
            GestureError::OutOfBounds { x, y } => write!(f, "touch ({x}, {y}) is off screen"),
        }
    }
}

impl core::error::Error for GestureError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    Pressed {
        x: f64,
        y: f64,
        t_ms: u64,
        max_disp: f64,
        long_fired: bool,
    },
}

/// Single-pointer gesture recognizer. Cloning it snapshots the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureMachine {
    cfg: GestureConfig,
    phase: Phase,
    last_ms: Option<u64>,
}

impl GestureMachine {
    pub fn new(cfg: GestureConfig) -> Self {
        Self {
            cfg,
            phase: Phase::Idle,
            last_ms: None,
        }
    }

    pub fn config(&self) -> &GestureConfig {
        &self.cfg
    }

    pub fn is_pressed(&self) -> bool {
        matches!(self.phase, Phase::Pressed { .. })
    }

    pub fn reset(&mut self) {
        self.phase = Phase::Idle;
    }

    fn check_time(&mut self, t_ms: u64) -> Result<(), GestureError> {
        if let Some(last) = self.last_ms {
            if t_ms < last {
                return Err(GestureError::OutOfOrderEvent {
                    last_ms: last,
                    got_ms: t_ms,
                });
            }
        }
        self.last_ms = Some(t_ms);
        Ok(())
    }

    /// Fires the pending long press if its deadline has passed.
    fn poll_long_press(&mut self, now_ms: u64) -> Option<Gesture> {
        if let Phase::Pressed {
            x,
            y,
            t_ms,
            max_disp,
            ref mut long_fired,
        } = self.phase
        {
            if !*long_fired
                && max_disp < self.cfg.slop_px
                && now_ms.saturating_sub(t_ms) >= self.cfg.long_press_ms
            {
                *long_fired = true;
                return Some(Gesture {
                    kind: GestureKind::LongPress,
                    target: None,
                    at: Some((x, y)),
                });
            }
        }
        None
    }

    /// Deliver a timer tick.
    pub fn tick(&mut self, now_ms: u64) -> Result<Option<Gesture>, GestureError> {
        self.check_time(now_ms)?;
        Ok(self.poll_long_press(now_ms))
    }

    pub fn feed(&mut self, ev: TouchEvent) -> Result<Option<Gesture>, GestureError> {
        let in_bounds = ev.x >= 0.0
            && ev.y >= 0.0
            && ev.x <= self.cfg.screen_width_px
            && ev.y <= self.cfg.screen_height_px;
        if !in_bounds {
            return Err(GestureError::OutOfBounds { x: ev.x, y: ev.y });
        }
        self.check_time(ev.t_ms)?;
        match ev.kind {
            TouchKind::Down => {
                self.phase = Phase::Pressed {
                    x: ev.x,
                    y: ev.y,
                    t_ms: ev.t_ms,
                    max_disp: 0.0,
                    long_fired: false,
                };
                Ok(None)
            }
            TouchKind::Move => {
                let fired = self.poll_long_press(ev.t_ms);
                if let Phase::Pressed {
                    x, y, ref mut max_disp, ..
                } = self.phase
                {
                    *max_disp = max_disp.max(libm::hypot(ev.x - x, ev.y - y));
                }
                Ok(fired)
            }
            TouchKind::Up => {
                if let Some(g) = self.poll_long_press(ev.t_ms) {
                    self.phase = Phase::Idle;
                    return Ok(Some(g));
                }
                let phase = core::mem::replace(&mut self.phase, Phase::Idle);
                let Phase::Pressed {
                    x,
                    y,
                    t_ms,
                    max_disp,
                    long_fired,
                } = phase
                else {
                    return Ok(None);
                };
                if long_fired {
                    return Ok(None);
                }
                let dt = ev.t_ms - t_ms;
                let (dx, dy) = (ev.x - x, ev.y - y);
                let disp = max_disp.max(libm::hypot(dx, dy));
                let at = Some((x, y));
                if dt <= self.cfg.tap_max_ms && disp < self.cfg.slop_px {
                    return Ok(Some(Gesture {
                        kind: GestureKind::Tap,
                        target: None,
                        at,
                    }));
                }
                let min_travel = self.cfg.swipe_min_fraction * self.cfg.screen_height_px;
                if dy <= -min_travel && dy.abs() >= 2.0 * dx.abs() && dt <= self.cfg.swipe_max_ms {
                    return Ok(Some(Gesture {
                        kind: GestureKind::SwipeUp,
                        target: None,
                        at,
                    }));
                }
                Ok(None)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Page {
    Intro,
    Home,
    ObjectDetection,
    Currency,
    Ocr,
}

impl Page {
    pub const ALL: [Page; 5] = [
        Page::Intro,
        Page::Home,
        Page::ObjectDetection,
        Page::Currency,
        Page::Ocr,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Page::Intro => "intro",
            Page::Home => "home",
            Page::ObjectDetection => "object_detection",
            Page::Currency => "currency",
            Page::Ocr => "ocr",
        }
    }

    pub fn spoken_name(self) -> &'static str {
        match self {
            Page::Intro => "introduction",
            Page::Home => "home page",
            Page::ObjectDetection => "object detection page",
            Page::Currency => "currency detection page",
            Page::Ocr => "text reader page",
        }
    }

    /// Page reached by swiping up; `None` where back is a no-op.
    pub fn parent(self) -> Option<Page> {
        match self {
            Page::Intro | Page::Home => None,
            Page::ObjectDetection | Page::Currency | Page::Ocr => Some(Page::Home),
        }
    }
}

/// The buttons on the home page, top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    ObjectDetection,
    Currency,
    Ocr,
    Social,
}

impl Control {
    pub const HOME: [Control; 4] = [
        Control::ObjectDetection,
        Control::Currency,
        Control::Ocr,
        Control::Social,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Control::ObjectDetection => "object_detection",
            Control::Currency => "currency",
            Control::Ocr => "ocr",
            Control::Social => "social",
        }
    }

    pub fn from_id(id: &str) -> Option<Control> {
        Control::HOME.into_iter().find(|c| c.id() == id)
    }

    /// What a single tap reads back.
    pub fn spoken_label(self) -> &'static str {
        match self {
            Control::ObjectDetection => "object detection",
            Control::Currency => "currency detection",
            Control::Ocr => "text reader",
            Control::Social => "social interaction",
        }
    }

    pub fn opens(self) -> Option<Page> {
        match self {
            Control::ObjectDetection => Some(Page::ObjectDetection),
            Control::Currency => Some(Page::Currency),
            Control::Ocr => Some(Page::Ocr),
            Control::Social => None,
        }
    }
}

/// Home buttons split the screen into four equal full-width rows.
pub fn hit_test(page: Page, x: f64, y: f64, cfg: &GestureConfig) -> Option<Control> {
    if page != Page::Home || x < 0.0 || x > cfg.screen_width_px {
        return None;
    }
    let row = (y / (cfg.screen_height_px / 4.0)) as i64;
    Control::HOME.get(row.clamp(0, 3) as usize).copied().filter(|_| y >= 0.0)
}

pub const INTRO_TEXT: &str = "Welcome. Tap a button once to hear what it does. \
Press and hold a button to open it. Swipe up to go back. \
Press and hold anywhere to begin.";

/// One-shot feature triggered from a feature page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureAction {
    DescribeObjects,
    CountCurrency,
    ReadText,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NavError {
    UnknownControl(String),
}

impl NavError {
    /// What the user hears instead of the action.
    pub fn feedback(&self) -> FeedbackEvent {
        FeedbackEvent::Speech(speech("unknown control"))
    }
}

impl fmt::Display for NavError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NavError::UnknownControl(id) => write!(f, "unknown control {id:?}"),
        }
    }
}

impl core::error::Error for NavError {}

#[derive(Debug, Clone, PartialEq)]
pub struct NavOutcome {
    pub page: Page,
    pub events: Vec<FeedbackEvent>,
    pub action: Option<FeatureAction>,
    pub transition: Option<NavigationEvent>,
}

fn speech(text: &str) -> SpeechItem {
    SpeechItem {
        text: String::from(text),
        priority: Priority::NAVIGATION,
        dedupe_key: None,
        enqueued_ms: 0,
    }
}

/// Where the session starts.
pub fn start_page(first_launch: bool) -> (Page, Vec<FeedbackEvent>) {
    if first_launch {
        (Page::Intro, alloc::vec![FeedbackEvent::Speech(speech(INTRO_TEXT))])
    } else {
        (Page::Home, alloc::vec![FeedbackEvent::Speech(speech(Page::Home.spoken_name()))])
    }
}

/// Open `page` directly, as a long press on its button would.
pub fn open_page(page: Page) -> NavOutcome {
    NavOutcome {
        page,
        events: alloc::vec![
            FeedbackEvent::Haptic(navigation_pattern(NavigationEvent::PageOpen)),
            FeedbackEvent::Speech(speech(page.spoken_name())),
        ],
        action: None,
        transition: Some(NavigationEvent::PageOpen),
    }
}

fn stay(page: Page, text: &str) -> NavOutcome {
    NavOutcome {
        page,
        events: alloc::vec![FeedbackEvent::Speech(speech(text))],
        action: None,
        transition: None,
    }
}

fn feature_of(page: Page) -> Option<FeatureAction> {
    match page {
        Page::ObjectDetection => Some(FeatureAction::DescribeObjects),
        Page::Currency => Some(FeatureAction::CountCurrency),
        Page::Ocr => Some(FeatureAction::ReadText),
        Page::Intro | Page::Home => None,
    }
}

/// Apply a recognized gesture to the current page.
///
/// A gesture's `target`, when set, names a home control; otherwise it is
/// resolved from the touch point with [`hit_test`].
pub fn navigate(page: Page, gesture: &Gesture, cfg: &GestureConfig) -> Result<NavOutcome, NavError> {
    if gesture.kind == GestureKind::SwipeUp {
        return Ok(match page.parent() {
            Some(parent) => NavOutcome {
                page: parent,
                events: alloc::vec![
                    FeedbackEvent::Haptic(navigation_pattern(NavigationEvent::PageBack)),
                    FeedbackEvent::Speech(speech(&alloc::format!("back to {}", parent.spoken_name()))),
                ],
                action: None,
                transition: Some(NavigationEvent::PageBack),
            },
            None if page == Page::Intro => stay(page, "press and hold anywhere to begin"),
            None => stay(page, "already on the home page"),
        });
    }

    let control = match (&gesture.target, gesture.at) {
        (Some(id), _) => Some(Control::from_id(id).ok_or_else(|| NavError::UnknownControl(id.clone()))?),
        (None, Some((x, y))) => hit_test(page, x, y, cfg),
        (None, None) => None,
    };

    match page {
        Page::Intro => {
            if control.is_some() {
                return Err(NavError::UnknownControl(String::from(control.map_or("", Control::id))));
            }
            Ok(match gesture.kind {
                GestureKind::LongPress => open_page(Page::Home),
                _ => stay(page, INTRO_TEXT),
            })
        }
        Page::Home => {
            let Some(control) = control else {
                return Err(NavError::UnknownControl(String::from("none")));
            };
            Ok(match (gesture.kind, control.opens()) {
                (GestureKind::Tap, _) => stay(page, control.spoken_label()),
                (_, Some(target)) => open_page(target),
                (_, None) => stay(page, "social interaction is not available in this build"),
            })
        }
        _ => {
            if let Some(c) = control {
                return Err(NavError::UnknownControl(String::from(c.id())));
            }
            let action = feature_of(page);
            Ok(NavOutcome {
                page,
                events: alloc::vec![FeedbackEvent::Speech(speech("scanning"))],
                action,
                transition: None,
            })
        }
    }
}
