//! Deterministic synthetic world on a 2D ground plane.
//!
//! Heading 0 faces +z; a positive turn rotates toward +x. The camera sits at
//! a fixed height and projects with an ideal pinhole, which makes the
//! projected box width exactly `focal * width_m / depth`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{BoundingBox, CameraIntrinsics, Detection, Dims, Frame, Space};
use crate::pipeline::{DetectorAdapter, DetectorError};

pub const CAMERA_HEIGHT_M: f64 = 1.2;
pub const MIN_DEPTH_M: f64 = 0.1;
pub const COLLISION_RADIUS_M: f64 = 0.3;
pub const MAX_STEP_M: f64 = 1.0;
pub const MAX_TURN_RAD: f64 = PI / 4.0;
pub const DEFAULT_FOV_DEG: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidObject { id: u64, reason: &'static str },
    InvalidCamera(&'static str),
    InvalidNoise(&'static str),
    StepTooLarge { forward: f64, turn: f64 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidObject { id, reason } => write!(f, "object {id}: {reason}"),
            SimError::InvalidCamera(r) => write!(f, "camera: {r}"),
            SimError::InvalidNoise(r) => write!(f, "noise: {r}"),
            SimError::StepTooLarge { forward, turn } => write!(
                f,
                "step forward={forward} turn={turn} exceeds |forward|<={MAX_STEP_M}, |turn|<=pi/4"
            ),
        }
    }
}

impl core::error::Error for SimError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: u64,
    pub label: String,
    pub x: f64,
    pub z: f64,
    pub width_m: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub x: f64,
    pub z: f64,
    pub heading: f64,
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_heading(theta: f64) -> f64 {
    let h = libm::atan2(libm::sin(theta), libm::cos(theta));
    if h <= -PI {
        PI
    } else {
        h
    }
}

impl CameraPose {
    pub fn new(x: f64, z: f64, heading: f64) -> Self {
        Self {
            x,
            z,
            heading: normalize_heading(heading),
        }
    }

    pub fn forward(&self) -> (f64, f64) {
        (libm::sin(self.heading), libm::cos(self.heading))
    }

    pub fn right(&self) -> (f64, f64) {
        (libm::cos(self.heading), -libm::sin(self.heading))
    }

    /// `(lateral, depth)` of a world point in camera coordinates.
    pub fn to_camera(&self, x: f64, z: f64) -> (f64, f64) {
        let (dx, dz) = (x - self.x, z - self.z);
        let (fx, fz) = self.forward();
        let (rx, rz) = self.right();
        (dx * rx + dz * rz, dx * fx + dz * fz)
    }

    /// Ground-truth distance along the optical axis.
    pub fn depth_to(&self, obj: &WorldObject) -> f64 {
        self.to_camera(obj.x, obj.z).1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub x: f64,
    pub z: f64,
    pub heading: f64,
    pub focal_px: f64,
    pub frame_w: u32,
    pub frame_h: u32,
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
}

fn default_fov() -> f64 {
    DEFAULT_FOV_DEG
}

impl CameraSpec {
    pub fn pose(&self) -> CameraPose {
        CameraPose::new(self.x, self.z, self.heading)
    }

    pub fn dims(&self) -> Dims {
        Dims {
            width: self.frame_w,
            height: self.frame_h,
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            focal_px: self.focal_px,
            ref_width_px: self.frame_w,
            ref_height_px: self.frame_h,
        }
    }

    pub fn rig(&self) -> Rig {
        Rig {
            intrinsics: self.intrinsics(),
            fov_rad: self.fov_deg.to_radians(),
            height_m: CAMERA_HEIGHT_M,
        }
    }
}

/// Fixed optical parameters of the simulated camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rig {
    pub intrinsics: CameraIntrinsics,
    pub fov_rad: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub label_accuracy: f64,
    pub box_jitter_px: f64,
    pub miss_rate: f64,
    pub seed: u64,
    /// Labels a corrupted detection may take; the true label is excluded.
    #[serde(default = "default_confusion")]
    pub confusion: Vec<String>,
}

fn default_confusion() -> Vec<String> {
    ["bench", "chair", "door", "person", "table", "trash_can"]
        .into_iter()
        .map(String::from)
        .collect()
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            label_accuracy: 1.0,
            box_jitter_px: 0.0,
            miss_rate: 0.0,
            seed,
            confusion: default_confusion(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.label_accuracy) {
            return Err(SimError::InvalidNoise("label_accuracy must lie in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return Err(SimError::InvalidNoise("miss_rate must lie in [0,1]"));
        }
        if !(self.box_jitter_px >= 0.0 && self.box_jitter_px.is_finite()) {
            return Err(SimError::InvalidNoise("box_jitter_px must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<WorldObject>,
    pub camera: CameraSpec,
    pub noise: NoiseModel,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SimError> {
        for o in &self.objects {
            if !(o.width_m > 0.0 && o.height_m > 0.0) {
                return Err(SimError::InvalidObject {
                    id: o.id,
                    reason: "width_m and height_m must be positive",
                });
            }
            if !(o.x.is_finite() && o.z.is_finite()) {
                return Err(SimError::InvalidObject {
                    id: o.id,
                    reason: "position must be finite",
                });
            }
        }
        let c = &self.camera;
        if !(c.focal_px > 0.0) {
            return Err(SimError::InvalidCamera("focal_px must be positive"));
        }
        if c.frame_w == 0 || c.frame_h == 0 {
            return Err(SimError::InvalidCamera("frame dimensions must be positive"));
        }
        if !(c.fov_deg > 0.0 && c.fov_deg < 180.0) {
            return Err(SimError::InvalidCamera("fov_deg must lie in (0, 180)"));
        }
        self.noise.validate()
    }
}

/// Project an object onto a `dims` grid tagged `space`. The focal length is
/// scaled from the rig's reference width to `dims.width`.
///
/// Returns `None` for objects closer than [`MIN_DEPTH_M`], outside the
/// horizontal field of view, or entirely off the frame.
pub fn project(obj: &WorldObject, pose: &CameraPose, rig: &Rig, dims: Dims, space: Space) -> Option<BoundingBox> {
    let (lateral, depth) = pose.to_camera(obj.x, obj.z);
    if depth <= MIN_DEPTH_M {
        return None;
    }
    if libm::atan2(lateral, depth).abs() > rig.fov_rad / 2.0 {
        return None;
    }
    let f = rig.intrinsics.focal_at_width(dims.width);
    let w = f * obj.width_m / depth;
    let h = f * obj.height_m / depth;
    let cx = dims.width as f64 / 2.0 + f * lateral / depth;
    let cy = dims.height as f64 / 2.0 + f * (rig.height_m - obj.height_m / 2.0) / depth;
    BoundingBox::new(cx - w / 2.0, cy - h / 2.0, w, h, space)
        .ok()?
        .clamp_to(dims)
}

/// Generator for one frame: the stream id is the frame id, so any frame can
/// be regenerated from the seed alone.
pub fn frame_rng(seed: u64, frame_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_id);
    rng
}

/// Noisy detections of every visible object.
pub fn sense(
    objects: &[WorldObject],
    pose: &CameraPose,
    rig: &Rig,
    noise: &NoiseModel,
    dims: Dims,
    space: Space,
    frame_id: u64,
) -> Vec<Detection> {
    let mut rng = frame_rng(noise.seed, frame_id);
    let mut out = Vec::new();
    for obj in objects {
        let Some(b) = project(obj, pose, rig, dims, space) else {
            continue;
        };
        // fixed number of draws per visible object
        let miss: f64 = rng.gen();
        let keep_label: f64 = rng.gen();
        let pick: f64 = rng.gen();
        let jitter: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        let score_u: f64 = rng.gen();

        if miss < noise.miss_rate {
            continue;
        }
        let label = if keep_label < noise.label_accuracy {
            obj.label.clone()
        } else {
            let others: Vec<&String> = noise.confusion.iter().filter(|l| **l != obj.label).collect();
            if others.is_empty() {
                String::from("object")
            } else {
                let i = ((pick * others.len() as f64) as usize).min(others.len() - 1);
                others[i].clone()
            }
        };
        let s = noise.box_jitter_px;
        let j = |u: f64| (2.0 * u - 1.0) * s;
        let mut x0 = b.x() + j(jitter[0]);
        let mut x1 = b.right() + j(jitter[1]);
        let mut y0 = b.y() + j(jitter[2]);
        let mut y1 = b.bottom() + j(jitter[3]);
        if x1 - x0 < 1.0 {
            let c = (x0 + x1) / 2.0;
            (x0, x1) = (c - 0.5, c + 0.5);
        }
        if y1 - y0 < 1.0 {
            let c = (y0 + y1) / 2.0;
            (y0, y1) = (c - 0.5, c + 0.5);
        }
        let Some(bbox) = BoundingBox::new(x0, y0, x1 - x0, y1 - y0, space)
            .ok()
            .and_then(|b| b.clamp_to(dims))
        else {
            continue;
        };
        out.push(Detection {
            bbox,
            label,
            score: 0.6 + 0.4 * score_u,
            text: None,
            object_id: Some(obj.id),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCommand {
    #[serde(default)]
    pub forward: f64,
    #[serde(default)]
    pub turn: f64,
}

impl StepCommand {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.forward.abs() <= MAX_STEP_M && self.turn.abs() <= MAX_TURN_RAD + 1e-12) {
            return Err(SimError::StepTooLarge {
                forward: self.forward,
                turn: self.turn,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub pose: CameraPose,
    pub collision: bool,
}

/// Closest distance from `(px, pz)` to the segment `a`-`b`.
fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (vx, vz) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vz * vz;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vz) / len2).clamp(0.0, 1.0)
    };
    libm::hypot(p.0 - (a.0 + t * vx), p.1 - (a.1 + t * vz))
}

/// Turn, then walk along the new heading. Walking into an object's collision
/// circle leaves the pose unchanged.
pub fn step(pose: &CameraPose, cmd: &StepCommand, objects: &[WorldObject]) -> Result<StepResult, SimError> {
    cmd.validate()?;
    let turned = CameraPose::new(pose.x, pose.z, pose.heading + cmd.turn);
    let (fx, fz) = turned.forward();
    let next = CameraPose::new(turned.x + fx * cmd.forward, turned.z + fz * cmd.forward, turned.heading);
    let from = (pose.x, pose.z);
    let to = (next.x, next.z);
    let blocked = objects.iter().any(|o| {
        let c = (o.x, o.z);
        let start = libm::hypot(from.0 - c.0, from.1 - c.1);
        let end = libm::hypot(to.0 - c.0, to.1 - c.1);
        // already inside the circle: only moving away is allowed
        let escaping = start < COLLISION_RADIUS_M && end >= start;
        !escaping && segment_distance(from, to, c) < COLLISION_RADIUS_M
    });
    if blocked {
        return Ok(StepResult {
            pose: *pose,
            collision: true,
        });
    }
    Ok(StepResult {
        pose: next,
        collision: false,
    })
}

/// Detector adapter backed by [`sense`]. The pose is updated by the owner
/// before each frame.
#[derive(Debug, Clone)]
pub struct SimulatedDetector {
    pub objects: Vec<WorldObject>,
    pub rig: Rig,
    pub noise: NoiseModel,
    pub pose: CameraPose,
}

impl SimulatedDetector {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            objects: scene.objects.clone(),
            rig: scene.camera.rig(),
            noise: scene.noise.clone(),
            pose: scene.camera.pose(),
        }
    }
}

impl DetectorAdapter for SimulatedDetector {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        Ok(sense(
            &self.objects,
            &self.pose,
            &self.rig,
            &self.noise,
            frame.dims(),
            Space::Downscaled,
            frame.id,
        ))
    }
}

/// Detector that renders the scene into a per-pixel label buffer at the input
/// resolution and recovers boxes by scanning it. Its cost grows with the
/// pixel count and its boxes are quantized to the grid, so it exhibits the
/// usual resolution trade-off.
#[derive(Debug, Clone)]
pub struct RasterDetector {
    pub objects: Vec<WorldObject>,
    pub rig: Rig,
    pub pose: CameraPose,
}

impl RasterDetector {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            objects: scene.objects.clone(),
            rig: scene.camera.rig(),
            pose: scene.camera.pose(),
        }
    }
}

impl DetectorAdapter for RasterDetector {
    fn detect(&mut self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        let dims = frame.dims();
        let (w, h) = (dims.width as usize, dims.height as usize);
        let mut visible: Vec<(f64, usize, BoundingBox)> = self
            .objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| {
                let b = project(o, &self.pose, &self.rig, dims, Space::Downscaled)?;
                Some((self.pose.depth_to(o), i, b))
            })
            .collect();
        // far to near, so nearer objects overwrite
        visible.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut buf = alloc::vec![0u16; w * h];
        for (_, i, b) in &visible {
            // pixel centers inside the box
            let x0 = libm::round(b.x()) as usize;
            let x1 = (libm::round(b.right()) as usize).min(w);
            let y0 = libm::round(b.y()) as usize;
            let y1 = (libm::round(b.bottom()) as usize).min(h);
            for row in buf[y0 * w..y1 * w].chunks_exact_mut(w) {
                for px in &mut row[x0..x1] {
                    *px = *i as u16 + 1;
                }
            }
        }

        let n = self.objects.len();
        let mut ext = alloc::vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
        for (y, row) in buf.chunks_exact(w).enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                let e = &mut ext[v as usize - 1];
                e.0 = e.0.min(x);
                e.1 = e.1.min(y);
                e.2 = e.2.max(x);
                e.3 = e.3.max(y);
            }
        }
        let mut out = Vec::new();
        for (i, e) in ext.into_iter().enumerate() {
            if e.0 == usize::MAX {
                continue;
            }
            let obj = &self.objects[i];
            let bbox = BoundingBox::new(
                e.0 as f64,
                e.1 as f64,
                (e.2 - e.0 + 1) as f64,
                (e.3 - e.1 + 1) as f64,
                Space::Downscaled,
            )
            .map_err(|e| DetectorError::Unavailable(alloc::format!("{e}")))?;
            out.push(Detection {
                bbox,
                label: obj.label.clone(),
                score: 0.9,
                text: None,
                object_id: Some(obj.id),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig(focal: f64, w: u32, h: u32) -> Rig {
        Rig {
            intrinsics: CameraIntrinsics {
                focal_px: focal,
                ref_width_px: w,
                ref_height_px: h,
            },
            fov_rad: DEFAULT_FOV_DEG.to_radians(),
            height_m: CAMERA_HEIGHT_M,
        }
    }

    fn obj(id: u64, label: &str, x: f64, z: f64, w: f64) -> WorldObject {
        WorldObject {
            id,
            label: label.into(),
            x,
            z,
            width_m: w,
            height_m: 0.5,
        }
    }

    const DIMS: Dims = Dims {
        width: 1920,
        height: 1080,
    };

    #[test]
    fn project_examples() {
        let r = rig(800.0, 1920, 1080);
        let pose = CameraPose::new(0.0, 0.0, 0.0);
        let b = project(&obj(1, "person", 0.0, 4.0, 0.5), &pose, &r, DIMS, Space::Original).unwrap();
        assert!((b.w() - 100.0).abs() < 1e-9);
        assert!((b.center_x() - 960.0).abs() < 1e-9);
        let b = project(&obj(1, "person", 0.0, 2.0, 0.5), &pose, &r, DIMS, Space::Original).unwrap();
        assert!((b.w() - 200.0).abs() < 1e-9);
        assert!(project(&obj(1, "person", 0.0, -2.0, 0.5), &pose, &r, DIMS, Space::Original).is_none());
        assert!(project(&obj(1, "person", 0.0, 0.05, 0.5), &pose, &r, DIMS, Space::Original).is_none());
        // 45 degrees off axis, outside a 60 degree field of view
        assert!(project(&obj(1, "person", 3.0, 3.0, 0.5), &pose, &r, DIMS, Space::Original).is_none());
    }

    #[test]
    fn heading_convention() {
        let p = CameraPose::new(0.0, 0.0, 0.0);
        let s = step(&p, &StepCommand { forward: 1.0, turn: 0.0 }, &[]).unwrap();
        assert!((s.pose.x).abs() < 1e-12 && (s.pose.z - 1.0).abs() < 1e-12);
        let s = step(&p, &StepCommand { forward: 0.0, turn: PI / 4.0 }, &[]).unwrap();
        let s = step(&s.pose, &StepCommand { forward: 0.0, turn: PI / 4.0 }, &[]).unwrap();
        assert!((s.pose.heading - PI / 2.0).abs() < 1e-12);
        assert_eq!((s.pose.x, s.pose.z), (0.0, 0.0));
        let s = step(&s.pose, &StepCommand { forward: 1.0, turn: 0.0 }, &[]).unwrap();
        assert!((s.pose.x - 1.0).abs() < 1e-12);
        assert_eq!(normalize_heading(-PI), PI);
        assert!((normalize_heading(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn collision_blocks() {
        let objs = [obj(1, "chair", 0.0, 0.2, 0.45)];
        let p = CameraPose::new(0.0, 0.0, 0.0);
        let s = step(&p, &StepCommand { forward: 0.1, turn: 0.0 }, &objs).unwrap();
        assert!(s.collision);
        assert_eq!(s.pose, p);
        // backing away is allowed
        let s = step(&p, &StepCommand { forward: -0.5, turn: 0.0 }, &objs).unwrap();
        assert!(!s.collision);
        // walking through is blocked too
        let objs = [obj(1, "chair", 0.0, 0.5, 0.45)];
        assert!(step(&p, &StepCommand { forward: 1.0, turn: 0.0 }, &objs).unwrap().collision);
        assert!(step(&p, &StepCommand { forward: 1.5, turn: 0.0 }, &objs).is_err());
    }

    #[test]
    fn noiseless_sense_equals_projection() {
        let r = rig(800.0, 1920, 1080);
        let pose = CameraPose::new(0.0, 0.0, 0.1);
        let objs = [obj(1, "chair", 0.5, 4.0, 0.45), obj(2, "door", -1.0, 5.0, 0.9)];
        let d = sense(&objs, &pose, &r, &NoiseModel::noiseless(3), DIMS, Space::Original, 9);
        assert_eq!(d.len(), 2);
        for (det, o) in d.iter().zip(&objs) {
            assert_eq!(det.label, o.label);
            assert_eq!(det.object_id, Some(o.id));
            assert_eq!(Some(det.bbox), project(o, &pose, &r, DIMS, Space::Original));
            assert!((0.6..=1.0).contains(&det.score));
        }
    }

    #[test]
    fn sense_is_deterministic_per_seed_and_frame() {
        let r = rig(800.0, 1920, 1080);
        let pose = CameraPose::new(0.0, 0.0, 0.0);
        let objs = [obj(1, "chair", 0.5, 4.0, 0.45)];
        let noise = NoiseModel {
            label_accuracy: 0.5,
            box_jitter_px: 3.0,
            miss_rate: 0.1,
            seed: 42,
            confusion: default_confusion(),
        };
        let a = sense(&objs, &pose, &r, &noise, DIMS, Space::Original, 5);
        let b = sense(&objs, &pose, &r, &noise, DIMS, Space::Original, 5);
        assert_eq!(a, b);
        let differ = (0..50).any(|f| sense(&objs, &pose, &r, &noise, DIMS, Space::Original, f) != a);
        assert!(differ);
    }

    #[test]
    fn label_corruption_never_keeps_true_label() {
        let r = rig(800.0, 1920, 1080);
        let pose = CameraPose::new(0.0, 0.0, 0.0);
        let objs = [obj(1, "chair", 0.0, 4.0, 0.45)];
        let mut noise = NoiseModel::noiseless(1);
        noise.label_accuracy = 0.0;
        for f in 0..100 {
            let d = sense(&objs, &pose, &r, &noise, DIMS, Space::Original, f);
            assert_ne!(d[0].label, "chair");
        }
    }

    #[test]
    fn raster_detector_recovers_boxes_to_a_pixel() {
        let scene = Scene {
            objects: alloc::vec![obj(1, "chair", 0.3, 4.0, 0.45), obj(2, "door", -1.0, 6.0, 0.9)],
            camera: CameraSpec {
                x: 0.0,
                z: 0.0,
                heading: 0.0,
                focal_px: 800.0,
                frame_w: 1920,
                frame_h: 1080,
                fov_deg: 60.0,
            },
            noise: NoiseModel::noiseless(0),
        };
        let mut det = RasterDetector::from_scene(&scene);
        let frame = Frame::new(1, 0, Dims::new(640, 360).unwrap());
        let out = det.detect(&frame).unwrap();
        assert_eq!(out.len(), 2);
        for d in &out {
            let o = &scene.objects[d.object_id.unwrap() as usize - 1];
            let truth = project(o, &det.pose, &det.rig, frame.dims(), Space::Downscaled).unwrap();
            assert!((d.bbox.w() - truth.w()).abs() <= 1.0);
            assert!((d.bbox.x() - truth.x()).abs() <= 1.0);
        }
    }

    #[test]
    fn scene_validation() {
        let mut scene = Scene {
            objects: alloc::vec![obj(1, "chair", 0.3, 4.0, 0.45)],
            camera: CameraSpec {
                x: 0.0,
                z: 0.0,
                heading: 0.0,
                focal_px: 800.0,
                frame_w: 1920,
                frame_h: 1080,
                fov_deg: 60.0,
            },
            noise: NoiseModel::noiseless(0),
        };
        assert!(scene.validate().is_ok());
        scene.noise.label_accuracy = 1.5;
        assert!(scene.validate().is_err());
        scene.noise.label_accuracy = 1.0;
        scene.objects[0].width_m = 0.0;
        assert!(scene.validate().is_err());
    }
}
