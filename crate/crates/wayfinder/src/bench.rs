//! Accuracy and speed across detector input resolutions.

use std::io::Write;
use std::time::Instant;

use wayfinder_core::distance::ObjectSizeRegistry;
use wayfinder_core::model::iou;
use wayfinder_core::pipeline::{FrozenClock, Pipeline, PipelineConfig};
use wayfinder_core::sim::{project, CameraPose, CameraSpec, NoiseModel, RasterDetector, Scene, WorldObject};
use wayfinder_core::{Frame, Space};

use crate::error::AppError;

pub const DEFAULT_TARGETS: [u32; 3] = [640, 320, 160];
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub target_long_edge_px: u32,
    pub frames: u32,
    pub mean_frame_us: f64,
    pub recall: f64,
    pub mean_abs_rel_distance_error: f64,
}

pub const CSV_HEADER: &str = "target_long_edge_px,frames,mean_frame_us,recall,mean_abs_rel_distance_error";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.2},{:.4},{:.6}",
            self.target_long_edge_px, self.frames, self.mean_frame_us, self.recall, self.mean_abs_rel_distance_error
        )
    }
}

/// A full-HD street corner with objects spread over the field of view.
pub fn bench_scene() -> Scene {
    let objects = [
        ("chair", -0.8, 3.0, 0.45, 0.9),
        ("table", 1.2, 4.5, 0.8, 0.75),
        ("door", -2.5, 7.0, 0.9, 2.0),
        ("person", 0.4, 6.0, 0.5, 1.7),
        ("bench", 3.0, 9.0, 1.2, 0.8),
        ("trash_can", -1.5, 5.0, 0.4, 0.6),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (label, x, z, w, h))| WorldObject {
        id: i as u64 + 1,
        label: label.into(),
        x,
        z,
        width_m: w,
        height_m: h,
    })
    .collect();
    Scene {
        objects,
        camera: CameraSpec {
            x: 0.0,
            z: 0.0,
            heading: 0.0,
            focal_px: 1662.8,
            frame_w: 1920,
            frame_h: 1080,
            fov_deg: 60.0,
        },
        noise: NoiseModel::noiseless(0),
    }
}

/// Camera path: a slow walk forward with a gentle sway.
fn pose_at(scene: &Scene, i: u32) -> CameraPose {
    let c = &scene.camera;
    let t = i as f64;
    CameraPose::new(c.x + 0.2 * (t * 0.05).sin(), c.z + (i % 20) as f64 * 0.05, c.heading + 0.15 * (t * 0.07).sin())
}

pub fn run_bench(scene: &Scene, targets: &[u32], frames: u32) -> Result<Vec<BenchRow>, AppError> {
    scene.validate().map_err(|e| AppError::config("scene", e))?;
    let registry = ObjectSizeRegistry::default();
    let rig = scene.camera.rig();
    let dims = scene.camera.dims();
    let focal = scene.camera.intrinsics().focal_at_width(dims.width);
    let mut rows = Vec::new();
    for &target in targets {
        let cfg = PipelineConfig {
            target_long_edge_px: target,
            latency_budget_ms: u32::MAX,
            ..PipelineConfig::default()
        };
        let mut pipeline = Pipeline::new(cfg).map_err(|e| AppError::Usage(e.to_string()))?;
        let mut det = RasterDetector::from_scene(scene);
        let clock = FrozenClock(0);
        let warmup = (frames / 10).max(1);
        let (mut elapsed_us, mut truth, mut found, mut err_sum, mut err_n) = (0f64, 0u64, 0u64, 0f64, 0u64);
        for i in 0..warmup + frames {
            let pose = pose_at(scene, i);
            det.pose = pose;
            let frame = Frame::new(i as u64 + 1, 0, dims);
            let started = Instant::now();
            let out = pipeline.run_step(&frame, &mut det, &clock).map_err(AppError::runtime)?;
            let dt = started.elapsed();
            if i < warmup {
                continue;
            }
            elapsed_us += dt.as_secs_f64() * 1e6;
            for o in &scene.objects {
                let Some(gt) = project(o, &pose, &rig, dims, Space::Original) else { continue };
                truth += 1;
                let best = out
                    .iter()
                    .filter(|d| d.label == o.label)
                    .filter_map(|d| Some((iou(&d.bbox, &gt).ok()?, d)))
                    .max_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((_, d)) = best.filter(|(v, _)| *v >= MATCH_IOU) {
                    found += 1;
                    if let Some(w_m) = registry.width_m(&d.label) {
                        let est = focal * w_m / d.bbox.w();
                        let true_d = pose.depth_to(o);
                        err_sum += ((est - true_d) / true_d).abs();
                        err_n += 1;
                    }
                }
            }
        }
        rows.push(BenchRow {
            target_long_edge_px: target,
            frames,
            mean_frame_us: elapsed_us / frames as f64,
            recall: if truth == 0 { 0.0 } else { found as f64 / truth as f64 },
            mean_abs_rel_distance_error: if err_n == 0 { 0.0 } else { err_sum / err_n as f64 },
        });
    }
    Ok(rows)
}

pub fn write_csv(out: &mut dyn Write, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}
