//! Synthetic survey flights over a ground-truth scene.
//!
//! A virtual nadir camera flies a serpentine grid over a large image,
//! producing frames, exact poses, and the matching mosaic plan. Poses
//! are integers: the camera model is a pure crop, so ground truth stays
//! pixel-exact and a perfect reconstruction is pixel-identical to the
//! scene. Positional jitter (rounded Gaussian) and per-frame brightness
//! drift emulate an unstable, auto-exposing camera. The evaluator
//! scores a reconstructed mosaic against the scene it came from.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{Raster, Rect, RgbImage, StitchDirection};
use crate::rng::Rng;
use crate::stitcher::{FramePlacement, MosaicPlan};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scene {scene_w}x{scene_h} is smaller than the {need_w}x{need_h} the flight needs")]
    SceneTooSmall { scene_w: u32, scene_h: u32, need_w: u32, need_h: u32 },
    #[error("region mismatch: {0}")]
    RegionMismatch(String),
}

/// Camera geometry. The nominal preset is a 640x480 color camera; a
/// 176x144 preset mirrors a low-resolution nadir sensor. Physical
/// fields of view are intentionally not modeled: the camera is a crop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub frame_width: u32,
    pub frame_height: u32,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig { frame_width: 640, frame_height: 480 }
    }
}

impl CameraConfig {
    /// Low-resolution nadir preset.
    pub fn small() -> Self {
        CameraConfig { frame_width: 176, frame_height: 144 }
    }
}

/// Flight shape and disturbance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightConfig {
    pub columns: u32,
    pub rows: u32,
    /// Fraction of frame extent shared by consecutive frames, applied
    /// on both axes. Must lie in (0, 0.9].
    pub overlap_fraction: f64,
    /// Standard deviation (pixels) of the Gaussian pose perturbation;
    /// perturbations are rounded to whole pixels and clamped to keep
    /// the frame inside the scene.
    pub jitter_sigma: f64,
    /// Additive gray levels per frame in flight order, applied to all
    /// channels and clamped to [0, 255].
    pub brightness_drift: f64,
    pub rng_seed: u64,
}

impl Default for FlightConfig {
    fn default() -> Self {
        FlightConfig {
            columns: 4,
            rows: 4,
            overlap_fraction: 0.3,
            jitter_sigma: 0.0,
            brightness_drift: 0.0,
            rng_seed: 7,
        }
    }
}

/// Where a frame really was: top-left scene coordinates, flight order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPose {
    pub index: usize,
    pub x: i32,
    pub y: i32,
}

/// Reconstruction quality. `rmse`/`mae` pool all channel samples over
/// the compared region; `seam_errors` lists, per grid-adjacent frame
/// pair, how far the reconstructed relative placement drifted from the
/// true relative pose (vertical adjacencies column by column, then
/// horizontal row by row). `interior_mae` excludes a 4 px band around
/// every frame edge, where hard seams legitimately disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    pub coverage: f64,
    pub seam_errors: Vec<f64>,
    pub rmse_channels: [f64; 3],
    pub mae_channels: [f64; 3],
    pub interior_mae: f64,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialization cannot fail")
    }
}

/// Grid ids (row-major) in the order the serpentine flight visits them.
/// The first leg follows `leg_direction`; every next column reverses.
pub fn flight_order(columns: u32, rows: u32, leg_direction: StitchDirection) -> Vec<usize> {
    assert!(leg_direction.is_vertical(), "legs are columns");
    let mut order = Vec::with_capacity((columns * rows) as usize);
    for c in 0..columns {
        let first_leg_up = leg_direction == StitchDirection::BottomToTop;
        let upward = first_leg_up == (c % 2 == 0);
        let rows_in_order: Vec<u32> =
            if upward { (0..rows).rev().collect() } else { (0..rows).collect() };
        for r in rows_in_order {
            order.push((r * columns + c) as usize);
        }
    }
    order
}

/// Renders a serpentine flight: frames (flight order), exact poses
/// (flight order), and the row-major plan naming each frame by its
/// flight index. Identifiers follow `frames/frame_NNN.png`.
pub fn generate_flight(
    scene: &RgbImage,
    cam: &CameraConfig,
    flight: &FlightConfig,
) -> Result<(Vec<RgbImage>, Vec<GroundTruthPose>, MosaicPlan), SimError> {
    assert!(cam.frame_width >= 1 && cam.frame_height >= 1, "degenerate camera");
    assert!(
        flight.overlap_fraction > 0.0 && flight.overlap_fraction <= 0.9,
        "overlap fraction must be in (0, 0.9]"
    );
    assert!(flight.jitter_sigma >= 0.0, "jitter sigma must be >= 0");
    assert!(flight.columns >= 1 && flight.rows >= 1, "grid must be non-empty");

    let (fw, fh) = (cam.frame_width as i32, cam.frame_height as i32);
    let spacing_x = (fw as f64 * (1.0 - flight.overlap_fraction)).round() as i32;
    let spacing_y = (fh as f64 * (1.0 - flight.overlap_fraction)).round() as i32;
    let need_w = (spacing_x * (flight.columns as i32 - 1) + fw) as u32;
    let need_h = (spacing_y * (flight.rows as i32 - 1) + fh) as u32;
    if scene.width() < need_w || scene.height() < need_h {
        return Err(SimError::SceneTooSmall {
            scene_w: scene.width(),
            scene_h: scene.height(),
            need_w,
            need_h,
        });
    }

    let order = flight_order(flight.columns, flight.rows, StitchDirection::BottomToTop);
    let mut rng = Rng::new(flight.rng_seed);
    let mut frames = Vec::with_capacity(order.len());
    let mut poses = Vec::with_capacity(order.len());

    for (k, &grid_id) in order.iter().enumerate() {
        let (row, col) = (grid_id as u32 / flight.columns, grid_id as u32 % flight.columns);
        let nominal_x = col as i32 * spacing_x;
        let nominal_y = row as i32 * spacing_y;
        // Jitter consumes two Gaussian draws per frame even when sigma
        // is zero, so seeds stay comparable across jitter settings.
        let jx = (rng.next_gaussian() * flight.jitter_sigma).round() as i32;
        let jy = (rng.next_gaussian() * flight.jitter_sigma).round() as i32;
        let x = (nominal_x + jx).clamp(0, scene.width() as i32 - fw);
        let y = (nominal_y + jy).clamp(0, scene.height() as i32 - fh);

        let mut frame = scene.crop(Rect::new(x, y, fw, fh)).expect("pose clamped into scene");
        if flight.brightness_drift != 0.0 {
            let shift = flight.brightness_drift * k as f64;
            for px in frame.pixels_mut() {
                for c in px.iter_mut() {
                    *c = (*c as f64 + shift).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        frames.push(frame);
        poses.push(GroundTruthPose { index: k, x, y });
    }

    // Row-major plan: each grid cell names the flight frame that shot it.
    let mut grid_to_flight = vec![0usize; order.len()];
    for (k, &grid_id) in order.iter().enumerate() {
        grid_to_flight[grid_id] = k;
    }
    let plan = MosaicPlan {
        columns: flight.columns,
        rows: flight.rows,
        traversal: "serpentine".to_string(),
        leg_direction: StitchDirection::BottomToTop,
        frames: grid_to_flight.iter().map(|k| format!("frames/frame_{k:03}.png")).collect(),
    };
    Ok((frames, poses, plan))
}

/// Scores a reconstructed mosaic against the scene it was flown over.
///
/// The mosaic is aligned to the scene by the first flight frame's true
/// pose and its reported placement, then compared per pixel over the
/// region the flight actually covered (union of true frame rects).
/// `RegionMismatch` means the aligned mosaic leaves the scene or the
/// anchor frame is missing from the placements.
pub fn evaluate_mosaic(
    mosaic: &RgbImage,
    scene: &RgbImage,
    poses: &[GroundTruthPose],
    plan: &MosaicPlan,
    placements: &[FramePlacement],
    cam: &CameraConfig,
) -> Result<Metrics, SimError> {
    plan.validate().map_err(SimError::RegionMismatch)?;
    assert_eq!(poses.len(), plan.frames.len(), "one pose per planned frame");

    let order = flight_order(plan.columns, plan.rows, plan.leg_direction);
    let anchor_grid_id = order[0];
    let anchor = placements
        .iter()
        .find(|p| p.frame == anchor_grid_id)
        .ok_or_else(|| SimError::RegionMismatch("anchor frame missing from mosaic".to_string()))?;
    let pose0 = poses[0];
    let (ox, oy) = (pose0.x - anchor.x, pose0.y - anchor.y);

    let (mw, mh) = (mosaic.width() as i32, mosaic.height() as i32);
    let (sw, sh) = (scene.width() as i32, scene.height() as i32);
    if ox < 0 || oy < 0 || ox + mw > sw || oy + mh > sh {
        return Err(SimError::RegionMismatch(format!(
            "aligned mosaic rect ({ox}, {oy}) {mw}x{mh} leaves the {sw}x{sh} scene"
        )));
    }

    // Scene-space masks: flight coverage and seam-neighborhood bands.
    let (fw, fh) = (cam.frame_width as i32, cam.frame_height as i32);
    let mut covered = Raster::from_pixel(scene.width(), scene.height(), false);
    for pose in poses {
        for y in pose.y..pose.y + fh {
            for x in pose.x..pose.x + fw {
                covered.set(x as u32, y as u32, true);
            }
        }
    }
    let total_covered = covered.pixels().iter().filter(|&&c| c).count();

    // Band of 4 px around every placed frame edge, in scene coordinates.
    let margin = 4i32;
    let mut near_seam = Raster::from_pixel(scene.width(), scene.height(), false);
    let mut mark = |x0: i32, y0: i32, x1: i32, y1: i32| {
        for y in y0.max(0)..y1.min(sh) {
            for x in x0.max(0)..x1.min(sw) {
                near_seam.set(x as u32, y as u32, true);
            }
        }
    };
    for p in placements {
        let (x, y) = (p.x + ox, p.y + oy);
        mark(x - margin, y - margin, x + fw + margin, y + margin + 1);
        mark(x - margin, y + fh - margin - 1, x + fw + margin, y + fh + margin);
        mark(x - margin, y - margin, x + margin + 1, y + fh + margin);
        mark(x + fw - margin - 1, y - margin, x + fw + margin, y + fh + margin);
    }

    // Per-pixel comparison over mosaic ∩ covered.
    let mut sq = [0.0f64; 3];
    let mut abs = [0.0f64; 3];
    let mut n = 0usize;
    let mut interior_abs = 0.0f64;
    let mut interior_n = 0usize;
    let mut in_union = 0usize;
    for my in 0..mh {
        for mx in 0..mw {
            let (sx, sy) = ((mx + ox) as u32, (my + oy) as u32);
            if !covered.get(sx, sy) {
                continue;
            }
            in_union += 1;
            let got = mosaic.get(mx as u32, my as u32);
            let want = scene.get(sx, sy);
            let mut pixel_abs = 0.0f64;
            for c in 0..3 {
                let d = got[c] as f64 - want[c] as f64;
                sq[c] += d * d;
                abs[c] += d.abs();
                pixel_abs += d.abs();
            }
            n += 1;
            if !near_seam.get(sx, sy) {
                interior_abs += pixel_abs;
                interior_n += 1;
            }
        }
    }
    if n == 0 {
        return Err(SimError::RegionMismatch(
            "aligned mosaic shares no pixels with the covered region".to_string(),
        ));
    }

    let rmse_channels = [0, 1, 2].map(|c| (sq[c] / n as f64).sqrt());
    let mae_channels = [0, 1, 2].map(|c| abs[c] / n as f64);
    let rmse = ((sq[0] + sq[1] + sq[2]) / (3 * n) as f64).sqrt();
    let mae = (abs[0] + abs[1] + abs[2]) / (3 * n) as f64;
    let interior_mae = if interior_n > 0 { interior_abs / (3 * interior_n) as f64 } else { 0.0 };

    // Seam errors: reconstructed relative placement vs true relative
    // pose for every grid adjacency with both frames placed.
    let mut flight_of = vec![0usize; poses.len()];
    for (k, &g) in order.iter().enumerate() {
        flight_of[g] = k;
    }
    let placement_of = |grid_id: usize| placements.iter().find(|p| p.frame == grid_id);
    let mut seam_errors = Vec::new();
    let mut adjacency = |ga: usize, gb: usize| {
        if let (Some(pa), Some(pb)) = (placement_of(ga), placement_of(gb)) {
            let (qa, qb) = (poses[flight_of[ga]], poses[flight_of[gb]]);
            let ex = (pb.x - pa.x) as f64 - (qb.x - qa.x) as f64;
            let ey = (pb.y - pa.y) as f64 - (qb.y - qa.y) as f64;
            seam_errors.push((ex * ex + ey * ey).sqrt());
        }
    };
    for c in 0..plan.columns {
        for r in 0..plan.rows - 1 {
            adjacency(plan.index_at(r, c), plan.index_at(r + 1, c));
        }
    }
    for r in 0..plan.rows {
        for c in 0..plan.columns - 1 {
            adjacency(plan.index_at(r, c), plan.index_at(r, c + 1));
        }
    }

    Ok(Metrics {
        rmse,
        mae,
        coverage: in_union as f64 / total_covered as f64,
        seam_errors,
        rmse_channels,
        mae_channels,
        interior_mae,
    })
}

/// Hash of a noise-lattice site to a unit-interval value.
fn lattice_value(seed: u64, ix: i64, iy: i64, salt: u64) -> f64 {
    let mut z = seed
        ^ (ix as u64).wrapping_mul(0x9E3779B97F4A7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2AE3D27D4EB4F)
        ^ salt.wrapping_mul(0xD6E8FEB86659FD93);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
}

/// Bilinear value noise in [0, 1] on a lattice of the given cell size.
fn value_noise(seed: u64, x: f64, y: f64, cell: f64, salt: u64) -> f64 {
    let (gx, gy) = ((x / cell).floor(), (y / cell).floor());
    let (fx, fy) = (x / cell - gx, y / cell - gy);
    let (ix, iy) = (gx as i64, gy as i64);
    let v00 = lattice_value(seed, ix, iy, salt);
    let v10 = lattice_value(seed, ix + 1, iy, salt);
    let v01 = lattice_value(seed, ix, iy + 1, salt);
    let v11 = lattice_value(seed, ix + 1, iy + 1, salt);
    (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
}

/// Procedurally textured scene: several octaves of value noise per
/// channel (so every descriptor-sized neighborhood is globally unique)
/// scattered with soft-edged high-contrast disks (strong blob features,
/// roughly one per 35x35 px), then a mild blur and a whisper of pixel
/// noise. Rendered in scene coordinates, so crops of one scene share
/// identical content wherever they overlap.
pub fn procedural_scene(width: u32, height: u32, seed: u64) -> RgbImage {
    assert!(width >= 1 && height >= 1);
    let mut rng = Rng::new(seed);
    let (w, h) = (width as i32, height as i32);

    // Octave layout: coarse shapes down to fine grain, per channel.
    let octaves: [(f64, f64); 3] = [(53.0, 76.0), (23.0, 38.0), (11.0, 20.0)];
    let mut chans = vec![[0.0f64; 3]; (width * height) as usize];
    let at = |x: i32, y: i32| (y * w + x) as usize;
    for y in 0..h {
        for x in 0..w {
            let mut px = [58.0f64; 3];
            for (c, p) in px.iter_mut().enumerate() {
                for (o, &(cell, amp)) in octaves.iter().enumerate() {
                    let salt = (c * 8 + o) as u64 + 1;
                    *p += amp * value_noise(seed, x as f64, y as f64, cell, salt);
                }
            }
            chans[at(x, y)] = px;
        }
    }

    let disks = ((width * height) / 1200).max(4);
    for _ in 0..disks {
        let cx = rng.next_below(width as u64) as i32;
        let cy = rng.next_below(height as u64) as i32;
        let r = 4 + rng.next_below(13) as i32;
        let color = [
            rng.next_below(256) as f64,
            rng.next_below(256) as f64,
            rng.next_below(256) as f64,
        ];
        for y in (cy - r).max(0)..(cy + r + 1).min(h) {
            for x in (cx - r).max(0)..(cx + r + 1).min(w) {
                let d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) as f64;
                if d2 <= (r * r) as f64 {
                    // Soft edge over the outer fifth of the radius.
                    let t = (d2.sqrt() / r as f64 - 0.8).max(0.0) / 0.2;
                    let blend = 1.0 - t.min(1.0);
                    let px = &mut chans[at(x, y)];
                    for c in 0..3 {
                        px[c] = px[c] * (1.0 - blend) + color[c] * blend;
                    }
                }
            }
        }
    }

    // 3x3 box blur, borders clamped.
    let blurred: Vec<[f64; 3]> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let mut acc = [0.0f64; 3];
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let sx = (x + dx).clamp(0, w - 1);
                    let sy = (y + dy).clamp(0, h - 1);
                    let px = chans[at(sx, sy)];
                    for c in 0..3 {
                        acc[c] += px[c];
                    }
                }
            }
            acc.map(|v| v / 9.0)
        })
        .collect();

    let mut img = RgbImage::from_pixel(width, height, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            let px = blurred[at(x, y)];
            let mut out = [0u8; 3];
            for c in 0..3 {
                let noise = rng.next_below(5) as f64 - 2.0;
                out[c] = (px[c] + noise).round().clamp(0.0, 255.0) as u8;
            }
            img.set(x as u32, y as u32, out);
        }
    }
    img
}

pub fn poses_to_json(poses: &[GroundTruthPose]) -> String {
    serde_json::to_string_pretty(poses).expect("pose serialization cannot fail")
}

pub fn poses_from_json(json: &str) -> Result<Vec<GroundTruthPose>, serde_json::Error> {
    serde_json::from_str(json)
}
