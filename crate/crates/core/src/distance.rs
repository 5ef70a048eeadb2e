//! Monocular distance from apparent size.
//!
//! A newly seen object is calibrated once: with a known physical width `W`
//! from the registry, the pinhole relation gives `d0 = f * W / w0`. After
//! that the object's distance follows from how much its apparent width has
//! grown or shrunk: `d = d0 * w0 / w`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{iou, BoundingBox, CameraIntrinsics, Detection, ModelError, Space};

/// Distance assigned to classes missing from the registry, unless overridden.
pub const DEFAULT_D0_M: f64 = 3.0;
/// Below this apparent width an estimate is refused.
pub const MIN_WIDTH_PX: f64 = 1.0;
pub const TRACK_EXPIRY_MS: u64 = 2000;
pub const ASSOCIATION_MIN_IOU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceError {
    DegenerateBox { width_px: f64 },
    Model(ModelError),
    InvalidWidth { label: String, width_m: f64 },
}

impl fmt::Display for DistanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceError::DegenerateBox { width_px } => {
                write!(f, "box width {width_px} px is below {MIN_WIDTH_PX} px")
            }
            DistanceError::Model(e) => write!(f, "{e}"),
            DistanceError::InvalidWidth { label, width_m } => {
                write!(f, "registry width for {label:?} must be positive, got {width_m}")
            }
        }
    }
}

impl core::error::Error for DistanceError {}

impl From<ModelError> for DistanceError {
    fn from(e: ModelError) -> Self {
        DistanceError::Model(e)
    }
}

/// Physical widths in meters per class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct ObjectSizeRegistry {
    widths: BTreeMap<String, f64>,
    default_d0_m: f64,
}

impl TryFrom<BTreeMap<String, f64>> for ObjectSizeRegistry {
    type Error = DistanceError;

    fn try_from(widths: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        for (label, &width_m) in &widths {
            if !(width_m > 0.0 && width_m.is_finite()) {
                return Err(DistanceError::InvalidWidth {
                    label: label.clone(),
                    width_m,
                });
            }
        }
        Ok(Self {
            widths,
            default_d0_m: DEFAULT_D0_M,
        })
    }
}

impl From<ObjectSizeRegistry> for BTreeMap<String, f64> {
    fn from(r: ObjectSizeRegistry) -> Self {
        r.widths
    }
}

impl Default for ObjectSizeRegistry {
    fn default() -> Self {
        let widths = [
            ("bench", 1.20),
            ("chair", 0.45),
            ("door", 0.90),
            ("person", 0.50),
            ("table", 0.80),
            ("trash_can", 0.40),
        ]
        .into_iter()
        .map(|(k, v)| (String::from(k), v))
        .collect();
        Self {
            widths,
            default_d0_m: DEFAULT_D0_M,
        }
    }
}

impl ObjectSizeRegistry {
    pub fn empty() -> Self {
        Self {
            widths: BTreeMap::new(),
            default_d0_m: DEFAULT_D0_M,
        }
    }

    /// Distance assumed for labels without a registered width.
    pub fn with_default_d0(mut self, d0_m: f64) -> Result<Self, DistanceError> {
        if !(d0_m > 0.0 && d0_m.is_finite()) {
            return Err(DistanceError::InvalidWidth {
                label: String::from("<default d0>"),
                width_m: d0_m,
            });
        }
        self.default_d0_m = d0_m;
        Ok(self)
    }

    pub fn default_d0_m(&self) -> f64 {
        self.default_d0_m
    }

    pub fn insert(&mut self, label: impl Into<String>, width_m: f64) -> Result<(), DistanceError> {
        let label = label.into();
        if !(width_m > 0.0 && width_m.is_finite()) {
            return Err(DistanceError::InvalidWidth { label, width_m });
        }
        self.widths.insert(label, width_m);
        Ok(())
    }

    pub fn width_m(&self, label: &str) -> Option<f64> {
        self.widths.get(label).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// Initial distance derived from a registry width.
    Calibrated,
    /// Label unknown; initial distance is [`DEFAULT_D0_M`].
    Assumed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrack {
    pub track_id: u64,
    pub label: String,
    pub w0_px: f64,
    pub d0_m: f64,
    pub last_box: BoundingBox,
    pub last_distance_m: f64,
    pub confidence: Confidence,
    pub created_ms: u64,
    pub updated_ms: u64,
}

/// Persisted calibration of one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct CalibrationRecord {
    pub label: String,
    pub w0_px: f64,
    pub d0_m: f64,
    pub created_ms: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    label: String,
    w0_px: f64,
    d0_m: f64,
    created_ms: u64,
}

impl TryFrom<RawRecord> for CalibrationRecord {
    type Error = &'static str;

    fn try_from(r: RawRecord) -> Result<Self, Self::Error> {
        if !(r.w0_px > 0.0 && r.w0_px.is_finite()) {
            return Err("w0_px must be positive");
        }
        if !(r.d0_m > 0.0 && r.d0_m.is_finite()) {
            return Err("d0_m must be positive");
        }
        Ok(CalibrationRecord {
            label: r.label,
            w0_px: r.w0_px,
            d0_m: r.d0_m,
            created_ms: r.created_ms,
        })
    }
}

impl DistanceTrack {
    pub fn record(&self) -> CalibrationRecord {
        CalibrationRecord {
            label: self.label.clone(),
            w0_px: self.w0_px,
            d0_m: self.d0_m,
            created_ms: self.created_ms,
        }
    }
}

/// Establish the initial distance of a newly seen object.
///
/// `frame_width_px` is the width of the grid the box is expressed in; the
/// focal length is rescaled to it when it differs from the intrinsics
/// reference resolution.
pub fn calibrate(
    track_id: u64,
    detection: &Detection,
    frame_width_px: u32,
    intrinsics: &CameraIntrinsics,
    registry: &ObjectSizeRegistry,
    now_ms: u64,
) -> Result<DistanceTrack, DistanceError> {
    let b = detection.bbox;
    b.ensure_space(Space::Original)?;
    let w0 = b.w();
    if w0 < MIN_WIDTH_PX {
        return Err(DistanceError::DegenerateBox { width_px: w0 });
    }
    let (d0, confidence) = match registry.width_m(&detection.label) {
        Some(width_m) => (
            intrinsics.focal_at_width(frame_width_px) * width_m / w0,
            Confidence::Calibrated,
        ),
        None => (registry.default_d0_m(), Confidence::Assumed),
    };
    Ok(DistanceTrack {
        track_id,
        label: detection.label.clone(),
        w0_px: w0,
        d0_m: d0,
        last_box: b,
        last_distance_m: d0,
        confidence,
        created_ms: now_ms,
        updated_ms: now_ms,
    })
}

/// Distance implied by `new_box` under the size-ratio model. On success the
/// track's last box, distance and timestamp are refreshed; on error the track
/// is left untouched.
pub fn estimate(
    track: &mut DistanceTrack,
    new_box: &BoundingBox,
    now_ms: u64,
) -> Result<f64, DistanceError> {
    new_box.ensure_space(Space::Original)?;
    let w = new_box.w();
    if w < MIN_WIDTH_PX {
        return Err(DistanceError::DegenerateBox { width_px: w });
    }
    let d = track.d0_m * (track.w0_px / w);
    track.last_box = *new_box;
    track.last_distance_m = d;
    track.updated_ms = now_ms;
    Ok(d)
}

/// Outcome of one association round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    /// `(track_id, detection index)` pairs, in the order they were chosen.
    pub matched: Vec<(u64, usize)>,
    /// Ids of tracks spawned from unmatched detections, with their source index.
    pub created: Vec<(u64, usize)>,
    pub expired: Vec<DistanceTrack>,
    /// Detections that matched nothing and could not be calibrated.
    pub rejected: Vec<usize>,
}

/// Greedy label-gated IoU matching between existing boxes and detections.
///
/// Candidate pairs share a label and overlap with IoU of at least
/// [`ASSOCIATION_MIN_IOU`]; they are taken in descending IoU order, ties by
/// track then detection index.
pub fn greedy_match(
    tracks: &[(u64, &str, BoundingBox)],
    detections: &[Detection],
) -> Result<Vec<(u64, usize)>, ModelError> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, (_, label, b)) in tracks.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            if d.label != *label {
                continue;
            }
            let v = iou(b, &d.bbox)?;
            if v >= ASSOCIATION_MIN_IOU {
                pairs.push((v, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut used_t = alloc::vec![false; tracks.len()];
    let mut used_d = alloc::vec![false; detections.len()];
    let mut out = Vec::new();
    for (_, ti, di) in pairs {
        if used_t[ti] || used_d[di] {
            continue;
        }
        used_t[ti] = true;
        used_d[di] = true;
        out.push((tracks[ti].0, di));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub expiry_ms: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            expiry_ms: TRACK_EXPIRY_MS,
        }
    }
}

/// The active track set of one session.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    intrinsics: CameraIntrinsics,
    registry: ObjectSizeRegistry,
    tracks: BTreeMap<u64, DistanceTrack>,
    next_id: u64,
    pending_records: Vec<CalibrationRecord>,
}

impl Tracker {
    pub fn new(intrinsics: CameraIntrinsics, registry: ObjectSizeRegistry, cfg: TrackerConfig) -> Self {
        Self {
            cfg,
            intrinsics,
            registry,
            tracks: BTreeMap::new(),
            next_id: 1,
            pending_records: Vec::new(),
        }
    }

    pub fn tracks(&self) -> impl Iterator<Item = &DistanceTrack> {
        self.tracks.values()
    }

    pub fn get(&self, id: u64) -> Option<&DistanceTrack> {
        self.tracks.get(&id)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn registry(&self) -> &ObjectSizeRegistry {
        &self.registry
    }

    /// Calibration records produced since the last drain, oldest first.
    pub fn drain_records(&mut self) -> Vec<CalibrationRecord> {
        core::mem::take(&mut self.pending_records)
    }

    pub fn clear(&mut self) {
        self.tracks.clear();
    }

    /// Expire stale tracks, match detections, refresh matched distances and
    /// calibrate new tracks for the rest. A re-acquired object after expiry is
    /// calibrated from scratch.
    pub fn associate(
        &mut self,
        detections: &[Detection],
        frame_width_px: u32,
        now_ms: u64,
    ) -> Result<Association, ModelError> {
        let mut result = Association::default();
        let expired_ids: Vec<u64> = self
            .tracks
            .values()
            .filter(|t| now_ms.saturating_sub(t.updated_ms) > self.cfg.expiry_ms)
            .map(|t| t.track_id)
            .collect();
        for id in expired_ids {
            if let Some(t) = self.tracks.remove(&id) {
                result.expired.push(t);
            }
        }

        for d in detections {
            d.bbox.ensure_space(Space::Original)?;
        }

        let keys: Vec<(u64, &str, BoundingBox)> = self
            .tracks
            .values()
            .map(|t| (t.track_id, t.label.as_str(), t.last_box))
            .collect();
        let matched = greedy_match(&keys, detections)?;
        let mut taken = alloc::vec![false; detections.len()];
        for &(tid, di) in &matched {
            taken[di] = true;
            if let Some(t) = self.tracks.get_mut(&tid) {
                // A degenerate box keeps the match but leaves the track as is.
                let _ = estimate(t, &detections[di].bbox, now_ms);
            }
        }
        result.matched = matched;

        for (di, d) in detections.iter().enumerate() {
            if taken[di] {
                continue;
            }
            let id = self.next_id;
            match calibrate(id, d, frame_width_px, &self.intrinsics, &self.registry, now_ms) {
                Ok(t) => {
                    self.next_id += 1;
                    self.pending_records.push(t.record());
                    self.tracks.insert(id, t);
                    result.created.push((id, di));
                }
                Err(_) => result.rejected.push(di),
            }
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dims;
    use alloc::vec;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(800.0, Dims::new(1920, 1080).unwrap()).unwrap()
    }

    fn reg() -> ObjectSizeRegistry {
        let mut r = ObjectSizeRegistry::empty();
        r.insert("person", 0.5).unwrap();
        r.insert("chair", 0.45).unwrap();
        r
    }

    fn bx(x: f64, w: f64) -> BoundingBox {
        BoundingBox::new(x, 100.0, w, w, Space::Original).unwrap()
    }

    fn det(label: &str, b: BoundingBox) -> Detection {
        Detection::new(b, label, 0.9).unwrap()
    }

    #[test]
    fn calibrate_examples() {
        let t = calibrate(1, &det("person", bx(0.0, 100.0)), 1920, &intr(), &reg(), 0).unwrap();
        assert_eq!(t.d0_m, 4.0);
        assert_eq!(t.confidence, Confidence::Calibrated);
        let t = calibrate(1, &det("person", bx(0.0, 200.0)), 1920, &intr(), &reg(), 0).unwrap();
        assert_eq!(t.d0_m, 2.0);
        let t = calibrate(1, &det("mailbox", bx(0.0, 200.0)), 1920, &intr(), &reg(), 0).unwrap();
        assert_eq!(t.d0_m, DEFAULT_D0_M);
        assert_eq!(t.confidence, Confidence::Assumed);
        // same object seen on a third-resolution grid
        let t = calibrate(1, &det("person", bx(0.0, 100.0 / 3.0)), 640, &intr(), &reg(), 0).unwrap();
        assert!((t.d0_m - 4.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_examples() {
        let mut t = calibrate(1, &det("person", bx(0.0, 100.0)), 1920, &intr(), &reg(), 0).unwrap();
        assert_eq!(estimate(&mut t, &bx(0.0, 100.0), 10).unwrap(), 4.0);
        assert_eq!(estimate(&mut t, &bx(0.0, 200.0), 20).unwrap(), 2.0);
        assert_eq!(t.updated_ms, 20);
        let before = t.clone();
        let err = estimate(&mut t, &bx(0.0, 0.5), 30).unwrap_err();
        assert!(matches!(err, DistanceError::DegenerateBox { .. }));
        assert_eq!(t, before);
    }

    #[test]
    fn noiseless_approach_matches_pinhole() {
        let f = 800.0;
        let width_m = 0.5;
        let project = |depth: f64| f * width_m / depth;
        let first = bx(0.0, project(4.0));
        let mut t = calibrate(1, &det("person", first), 1920, &intr(), &reg(), 0).unwrap();
        for step in 0..=30 {
            let truth = 4.0 - 0.1 * step as f64;
            let d = estimate(&mut t, &bx(0.0, project(truth)), step).unwrap();
            assert!(((d - truth) / truth).abs() < 1e-9, "{d} vs {truth}");
        }
    }

    #[test]
    fn associate_label_gate_and_overlap() {
        let mut tr = Tracker::new(intr(), reg(), TrackerConfig::default());
        tr.associate(&[det("chair", bx(100.0, 100.0))], 1920, 0).unwrap();
        let a = tr.associate(&[det("chair", bx(105.0, 100.0))], 1920, 100).unwrap();
        assert_eq!(a.matched, vec![(1, 0)]);
        let a = tr.associate(&[det("table", bx(105.0, 100.0))], 1920, 200).unwrap();
        assert!(a.matched.is_empty());
        assert_eq!(a.created, vec![(2, 0)]);
        assert_eq!(tr.get(2).unwrap().confidence, Confidence::Assumed);
        assert_eq!(tr.drain_records().len(), 2);
    }

    #[test]
    fn tracks_expire_and_recalibrate() {
        let mut tr = Tracker::new(intr(), reg(), TrackerConfig::default());
        tr.associate(&[det("chair", bx(100.0, 100.0))], 1920, 0).unwrap();
        let a = tr.associate(&[], 1920, 2000).unwrap();
        assert!(a.expired.is_empty());
        let a = tr.associate(&[det("chair", bx(100.0, 50.0))], 1920, 2001).unwrap();
        assert_eq!(a.expired.len(), 1);
        assert_eq!(a.created, vec![(2, 0)]);
        assert_eq!(tr.get(2).unwrap().w0_px, 50.0);
    }

    #[test]
    fn registry_rejects_non_positive_width() {
        let mut r = ObjectSizeRegistry::empty();
        assert!(r.insert("x", 0.0).is_err());
        let parsed: Result<ObjectSizeRegistry, _> = serde_json::from_str(r#"{"door": -1}"#);
        assert!(parsed.is_err());
        let ok: ObjectSizeRegistry = serde_json::from_str(r#"{"door": 0.9}"#).unwrap();
        assert_eq!(ok.width_m("door"), Some(0.9));
    }

    /// Orders assignments by their IoU values sorted high to low, compared
    /// lexicographically; this is the order greedy selection optimises.
    fn best_2x2(ious: [[f64; 2]; 2]) -> Vec<(usize, usize)> {
        let gate = |v: f64| v >= ASSOCIATION_MIN_IOU;
        let candidates: [[(usize, usize); 2]; 2] = [[(0, 0), (1, 1)], [(0, 1), (1, 0)]];
        let score = |asg: &[(usize, usize); 2]| {
            let mut v: Vec<f64> = asg.iter().map(|&(t, d)| ious[t][d]).filter(|&v| gate(v)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        let (a, b) = (score(&candidates[0]), score(&candidates[1]));
        let pick = if lex_ge(&a, &b) { 0 } else { 1 };
        let mut out: Vec<(usize, usize)> = candidates[pick]
            .iter()
            .copied()
            .filter(|&(t, d)| gate(ious[t][d]))
            .collect();
        out.sort();
        out
    }

    fn lex_ge(a: &[f64], b: &[f64]) -> bool {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return x > y;
            }
        }
        a.len() >= b.len()
    }

    #[test]
    fn greedy_equals_exhaustive_on_2x2() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 2000 {
            let tb: Vec<BoundingBox> = (0..2)
                .map(|_| bx(rng.gen_range(0.0..60.0), rng.gen_range(20.0..60.0)))
                .collect();
            let ds: Vec<Detection> = (0..2)
                .map(|_| det("chair", bx(rng.gen_range(0.0..60.0), rng.gen_range(20.0..60.0))))
                .collect();
            let mut m = [[0.0; 2]; 2];
            for t in 0..2 {
                for d in 0..2 {
                    m[t][d] = iou(&tb[t], &ds[d].bbox).unwrap();
                }
            }
            // skip exact ties, where both assignments are equally good
            if m[0][0] == m[0][1] || m[0][0] == m[1][0] || m[1][1] == m[0][1] || m[1][1] == m[1][0] {
                continue;
            }
            let keys = [(0u64, "chair", tb[0]), (1u64, "chair", tb[1])];
            let mut got: Vec<(usize, usize)> = greedy_match(&keys, &ds)
                .unwrap()
                .into_iter()
                .map(|(t, d)| (t as usize, d))
                .collect();
            got.sort();
            assert_eq!(got, best_2x2(m), "ious {m:?}");
            checked += 1;
        }
    }
}
