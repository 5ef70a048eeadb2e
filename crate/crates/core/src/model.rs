//! Shared value types: frames, boxes, detections and camera intrinsics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Label carried by every OCR detection.
pub const TEXT_LABEL: &str = "text";

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Box extents must be finite and strictly positive.
    DegenerateBox { w: f64, h: f64 },
    NonFiniteCoordinate,
    /// Two values tagged with different coordinate spaces were combined.
    SpaceMismatch { left: Space, right: Space },
    ScoreOutOfRange(f64),
    /// `text` must be present exactly when the label is `"text"`.
    TextLabelMismatch,
    ZeroDims,
    NonPositiveFocal(f64),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DegenerateBox { w, h } => write!(f, "degenerate box {w}x{h}"),
            ModelError::NonFiniteCoordinate => f.write_str("non-finite box coordinate"),
            ModelError::SpaceMismatch { left, right } => {
                write!(f, "coordinate space mismatch: {left} vs {right}")
            }
            ModelError::ScoreOutOfRange(s) => write!(f, "score {s} outside [0,1]"),
            ModelError::TextLabelMismatch => {
                f.write_str("text must be present iff label is \"text\"")
            }
            ModelError::ZeroDims => f.write_str("frame dimensions must be positive"),
            ModelError::NonPositiveFocal(v) => write!(f, "focal length {v} must be positive"),
        }
    }
}

impl core::error::Error for ModelError {}

/// Which pixel grid a box is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Full camera resolution.
    Original,
    /// The detector's input grid after preprocessing.
    Downscaled,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Original => "original",
            Space::Downscaled => "downscaled",
        })
    }
}

/// Width and height of a pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub fn new(width: u32, height: u32) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::ZeroDims);
        }
        Ok(Self { width, height })
    }

    pub fn long_edge(&self) -> u32 {
        self.width.max(self.height)
    }
}

/// Axis-aligned box, top-left origin, floating-point pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    space: Space,
}

#[derive(Deserialize)]
struct RawBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    space: Space,
}

impl TryFrom<RawBox> for BoundingBox {
    type Error = ModelError;

    fn try_from(r: RawBox) -> Result<Self, Self::Error> {
        BoundingBox::new(r.x, r.y, r.w, r.h, r.space)
    }
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, space: Space) -> Result<Self, ModelError> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(ModelError::NonFiniteCoordinate);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(ModelError::DegenerateBox { w, h });
        }
        Ok(Self { x, y, w, h, space })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    /// Apparent width in pixels; the quantity the distance model tracks.
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn space(&self) -> Space {
        self.space
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
    pub fn center_x(&self) -> f64 {
        self.x + self.w / 2.0
    }
    pub fn center_y(&self) -> f64 {
        self.y + self.h / 2.0
    }
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Intersect with the frame rectangle. `None` when nothing of the box
    /// remains inside the frame.
    pub fn clamp_to(&self, dims: Dims) -> Option<BoundingBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(dims.width as f64);
        let y1 = self.bottom().min(dims.height as f64);
        BoundingBox::new(x0, y0, x1 - x0, y1 - y0, self.space).ok()
    }

    pub fn ensure_space(&self, expected: Space) -> Result<(), ModelError> {
        if self.space != expected {
            return Err(ModelError::SpaceMismatch {
                left: self.space,
                right: expected,
            });
        }
        Ok(())
    }
}

/// Intersection over union. Boxes must share a coordinate space.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64, ModelError> {
    if a.space != b.space {
        return Err(ModelError::SpaceMismatch {
            left: a.space,
            right: b.space,
        });
    }
    // overlap measured from each box's own extent, exact when a == b
    let overlap = |a0: f64, al: f64, b0: f64, bl: f64| {
        let start = a0.max(b0);
        (al - (start - a0)).min(bl - (start - b0)).max(0.0)
    };
    let iw = overlap(a.x, a.w, b.x, b.w);
    let ih = overlap(a.y, a.h, b.y, b.h);
    let inter = iw * ih;
    if inter == 0.0 {
        return Ok(0.0);
    }
    let union = a.area() + b.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Map a box between two pixel grids by independent per-axis scaling.
///
/// Multiplication happens before division so that a round trip between two
/// grids reproduces the input to within a couple of ulps.
pub fn rescale_box(b: &BoundingBox, from: Dims, to: Dims, to_space: Space) -> BoundingBox {
    let sx = |v: f64| v * to.width as f64 / from.width as f64;
    let sy = |v: f64| v * to.height as f64 / from.height as f64;
    BoundingBox {
        x: sx(b.x),
        y: sy(b.y),
        w: sx(b.w),
        h: sy(b.h),
        space: to_space,
    }
}

/// One unit of pipeline work. `pixels` is an opaque payload, absent for
/// detection-only flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: u64,
    pub timestamp_ms: u64,
    pub width_px: u32,
    pub height_px: u32,
    #[serde(skip)]
    pub pixels: Option<Vec<u8>>,
}

impl Frame {
    pub fn new(id: u64, timestamp_ms: u64, dims: Dims) -> Self {
        Self {
            id,
            timestamp_ms,
            width_px: dims.width,
            height_px: dims.height,
            pixels: None,
        }
    }

    pub fn with_pixels(mut self, pixels: Vec<u8>) -> Self {
        self.pixels = Some(pixels);
        self
    }

    pub fn dims(&self) -> Dims {
        Dims {
            width: self.width_px,
            height: self.height_px,
        }
    }
}

/// A labeled, scored box produced by a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetection")]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<u64>,
}

#[derive(Deserialize)]
struct RawDetection {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    label: String,
    score: f64,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    object_id: Option<u64>,
}

impl TryFrom<RawDetection> for Detection {
    type Error = ModelError;

    fn try_from(r: RawDetection) -> Result<Self, Self::Error> {
        let d = Detection {
            bbox: r.bbox,
            label: r.label,
            score: r.score,
            text: r.text,
            object_id: r.object_id,
        };
        d.validate()?;
        Ok(d)
    }
}

impl Detection {
    pub fn new(bbox: BoundingBox, label: impl Into<String>, score: f64) -> Result<Self, ModelError> {
        let d = Detection {
            bbox,
            label: label.into(),
            score,
            text: None,
            object_id: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn text_block(bbox: BoundingBox, text: impl Into<String>, score: f64) -> Result<Self, ModelError> {
        let d = Detection {
            bbox,
            label: String::from(TEXT_LABEL),
            score,
            text: Some(text.into()),
            object_id: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_object_id(mut self, id: u64) -> Self {
        self.object_id = Some(id);
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(ModelError::ScoreOutOfRange(self.score));
        }
        if (self.label == TEXT_LABEL) != self.text.is_some() {
            return Err(ModelError::TextLabelMismatch);
        }
        Ok(())
    }
}

/// Pinhole intrinsics. `focal_px` is expressed at the reference resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub ref_width_px: u32,
    pub ref_height_px: u32,
}

impl CameraIntrinsics {
    pub fn new(focal_px: f64, reference: Dims) -> Result<Self, ModelError> {
        if !(focal_px > 0.0 && focal_px.is_finite()) {
            return Err(ModelError::NonPositiveFocal(focal_px));
        }
        Ok(Self {
            focal_px,
            ref_width_px: reference.width,
            ref_height_px: reference.height,
        })
    }

    /// Focal length in pixels for a frame of the given width.
    pub fn focal_at_width(&self, width_px: u32) -> f64 {
        if width_px == self.ref_width_px {
            self.focal_px
        } else {
            self.focal_px * width_px as f64 / self.ref_width_px as f64
        }
    }
}
