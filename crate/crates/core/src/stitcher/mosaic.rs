//! Sequence folding and serpentine-grid assembly.

use crate::raster::{RgbImage, StitchDirection};

use super::pair::stitch_pair_banded;
use super::{FramePlacement, MosaicPlan, PairRecord, StitchParams, StitchReport};

/// A frame's rectangle inside the evolving composite. Tracked through
/// every shift and rotation so the final report can place each input
/// frame in mosaic coordinates.
#[derive(Debug, Clone, Copy)]
struct Placed {
    id: usize,
    x: i32,
    y: i32,
    w: i32,
    h: i32,
}

impl Placed {
    fn shifted(self, dx: i32, dy: i32) -> Placed {
        Placed { x: self.x + dx, y: self.y + dy, ..self }
    }

    /// Placement after the containing image (height `space_h`) turns a
    /// quarter clockwise.
    fn rotated_cw(self, space_h: i32) -> Placed {
        Placed { id: self.id, x: space_h - self.y - self.h, y: self.x, w: self.h, h: self.w }
    }

    /// Placement after the containing image (width `space_w`) turns a
    /// quarter counterclockwise.
    fn rotated_ccw(self, space_w: i32) -> Placed {
        Placed { id: self.id, x: self.y, y: space_w - self.x - self.w, w: self.h, h: self.w }
    }
}

struct FoldResult {
    image: RgbImage,
    pairs: Vec<PairRecord>,
    placements: Vec<Placed>,
    failure: Option<String>,
}

/// Left-fold of pairwise stitches. `ids` names each input for pair
/// records and placements; `seeds` are pre-existing placements carried
/// inside the first input (used when folding already-stitched columns).
fn fold(
    inputs: &[&RgbImage],
    ids: &[usize],
    seeds: Vec<Placed>,
    dir: StitchDirection,
    params: &StitchParams,
) -> FoldResult {
    let mut image = inputs[0].clone();
    let mut placements = if seeds.is_empty() {
        vec![Placed {
            id: ids[0],
            x: 0,
            y: 0,
            w: image.width() as i32,
            h: image.height() as i32,
        }]
    } else {
        seeds
    };
    let mut pairs = Vec::new();
    let mut failure = None;

    for (step, incoming) in inputs.iter().enumerate().skip(1) {
        let extent =
            if dir.is_vertical() { incoming.height() } else { incoming.width() };
        match stitch_pair_banded(&image, incoming, dir, params, Some(extent)) {
            Ok(outcome) => {
                let g = outcome.geometry;
                for p in placements.iter_mut() {
                    *p = p.shifted(g.a_shift.0, g.a_shift.1);
                }
                placements.push(Placed {
                    id: ids[step],
                    x: g.b_shift.0,
                    y: g.b_shift.1,
                    w: incoming.width() as i32,
                    h: incoming.height() as i32,
                });
                pairs.push(PairRecord {
                    pair: (ids[step - 1], ids[step]),
                    matches: outcome.matches,
                    inliers: outcome.inliers,
                    tx: outcome.translation.tx,
                    ty: outcome.translation.ty,
                    seam: g.seam,
                });
                image = outcome.image;
            }
            Err(e) => {
                failure = Some(format!("pair ({}, {}): {e}", ids[step - 1], ids[step]));
                break;
            }
        }
    }
    FoldResult { image, pairs, placements, failure }
}

fn report_of(result: &FoldResult) -> StitchReport {
    StitchReport {
        pairs: result.pairs.clone(),
        width: result.image.width(),
        height: result.image.height(),
        failures: result.failure.iter().cloned().collect(),
        frame_placements: result
            .placements
            .iter()
            .map(|p| FramePlacement { frame: p.id, x: p.x, y: p.y })
            .collect(),
    }
}

/// Stitches an ordered sequence of frames along one direction: each
/// frame is joined onto the accumulated image, which keeps growing in
/// the direction of travel. On the first failing pair the fold stops;
/// the report names the pair and the completed prefix is returned.
pub fn stitch_sequence(
    frames: &[RgbImage],
    dir: StitchDirection,
    params: &StitchParams,
) -> (RgbImage, StitchReport) {
    assert!(!frames.is_empty(), "a sequence needs at least one frame");
    let refs: Vec<&RgbImage> = frames.iter().collect();
    let ids: Vec<usize> = (0..frames.len()).collect();
    let result = fold(&refs, &ids, Vec::new(), dir, params);
    let report = report_of(&result);
    (result.image, report)
}

/// Assembles a serpentine-grid flight into one mosaic.
///
/// Frames arrive row-major in scene order (the plan already normalized
/// the flight's alternating legs). Every column stitches in the leg
/// direction; each column image then turns a quarter clockwise, which
/// maps "next column to the right" onto "next image below", so the
/// columns fold with the same vertical machinery. The joined image
/// turns back counterclockwise at the end.
///
/// Fails fast: on a column failure the mosaic of the completed columns
/// is returned; on a join failure the joined prefix is returned. All
/// failures carry grid coordinates in the report.
pub fn build_mosaic(
    plan: &MosaicPlan,
    frames: &[RgbImage],
    params: &StitchParams,
) -> (RgbImage, StitchReport) {
    plan.validate().expect("plan must be internally consistent");
    assert_eq!(
        frames.len(),
        (plan.columns * plan.rows) as usize,
        "plan and frame list disagree"
    );

    let mut pairs = Vec::new();
    let mut failures = Vec::new();

    // Stitch each column in the leg direction. BottomToTop consumes
    // scene rows bottom-up; TopToBottom top-down.
    let mut columns: Vec<FoldResult> = Vec::new();
    for c in 0..plan.columns {
        let rows: Vec<u32> = match plan.leg_direction {
            StitchDirection::BottomToTop => (0..plan.rows).rev().collect(),
            _ => (0..plan.rows).collect(),
        };
        let ids: Vec<usize> = rows.iter().map(|&r| plan.index_at(r, c)).collect();
        let refs: Vec<&RgbImage> = ids.iter().map(|&i| &frames[i]).collect();
        let result = fold(&refs, &ids, Vec::new(), plan.leg_direction, params);
        pairs.extend(result.pairs.iter().cloned());
        if let Some(f) = &result.failure {
            failures.push(format!("column {c}: {f}"));
            if c == 0 {
                // Nothing assembled yet: the partial column is the result.
                return (
                    result.image.clone(),
                    StitchReport {
                        pairs,
                        width: result.image.width(),
                        height: result.image.height(),
                        failures,
                        frame_placements: result
                            .placements
                            .iter()
                            .map(|p| FramePlacement { frame: p.id, x: p.x, y: p.y })
                            .collect(),
                    },
                );
            }
            break;
        }
        columns.push(result);
    }

    // Rotate each complete column clockwise and fold them top-to-bottom,
    // seeding the fold with the first column's placements.
    let rotated: Vec<RgbImage> = columns.iter().map(|c| c.image.rotate_quarter(1)).collect();
    let rotated_placements: Vec<Vec<Placed>> = columns
        .iter()
        .map(|c| {
            let h = c.image.height() as i32;
            c.placements.iter().map(|p| p.rotated_cw(h)).collect()
        })
        .collect();

    let mut joined = rotated[0].clone();
    let mut placements = rotated_placements[0].clone();
    for c in 1..rotated.len() {
        let incoming = &rotated[c];
        match stitch_pair_banded(
            &joined,
            incoming,
            StitchDirection::TopToBottom,
            params,
            Some(incoming.height()),
        ) {
            Ok(outcome) => {
                let g = outcome.geometry;
                for p in placements.iter_mut() {
                    *p = p.shifted(g.a_shift.0, g.a_shift.1);
                }
                placements.extend(
                    rotated_placements[c]
                        .iter()
                        .map(|p| p.shifted(g.b_shift.0, g.b_shift.1)),
                );
                // Join records are keyed by the two columns' top frames
                // (grid ids c-1 and c); the seam, a joined-space row,
                // equals the final mosaic x coordinate of the join.
                pairs.push(PairRecord {
                    pair: (c - 1, c),
                    matches: outcome.matches,
                    inliers: outcome.inliers,
                    tx: outcome.translation.tx,
                    ty: outcome.translation.ty,
                    seam: g.seam,
                });
                joined = outcome.image;
            }
            Err(e) => {
                failures.push(format!("join of columns {} and {c}: {e}", c - 1));
                break;
            }
        }
    }

    let mosaic = joined.rotate_quarter(3);
    let joined_w = joined.width() as i32;
    let frame_placements: Vec<FramePlacement> = placements
        .iter()
        .map(|p| {
            let r = p.rotated_ccw(joined_w);
            FramePlacement { frame: r.id, x: r.x, y: r.y }
        })
        .collect();

    let report = StitchReport {
        pairs,
        width: mosaic.width(),
        height: mosaic.height(),
        failures,
        frame_placements,
    };
    (mosaic, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Rect;

    /// Textured scene with enough structure for matching everywhere and
    /// no repeating pattern for matches to alias onto.
    fn textured(w: u32, h: u32, seed: u64) -> RgbImage {
        crate::flightsim::procedural_scene(w, h, seed)
    }

    #[test]
    fn single_frame_sequence_is_identity() {
        let f = textured(100, 80, 40);
        let (out, report) = stitch_sequence(
            std::slice::from_ref(&f),
            StitchDirection::BottomToTop,
            &StitchParams::default(),
        );
        assert_eq!(out, f);
        assert!(report.pairs.is_empty());
        assert!(report.failures.is_empty());
        assert_eq!(report.frame_placements, vec![FramePlacement { frame: 0, x: 0, y: 0 }]);
    }

    #[test]
    fn column_of_exact_crops_reconstructs_the_strip() {
        let scene = textured(200, 640, 41);
        // Four frames of 200x200, stepping 120 px (40% overlap), bottom-up.
        let frames: Vec<RgbImage> = (0..4)
            .map(|i| scene.crop(Rect::new(0, 440 - 120 * i, 200, 200)).unwrap())
            .collect();
        let (out, report) =
            stitch_sequence(&frames, StitchDirection::BottomToTop, &StitchParams::default());
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(out, scene.crop(Rect::new(0, 80, 200, 560)).unwrap());
        assert_eq!(report.pairs.len(), 3);
        // Placements recover each frame's position in the output.
        for (i, p) in report.frame_placements.iter().enumerate() {
            assert_eq!(p.frame, i);
            assert_eq!((p.x, p.y), (0, 360 - 120 * i as i32));
        }
        for record in &report.pairs {
            assert!((record.ty + 120.0).abs() < 0.5, "ty = {}", record.ty);
            assert_eq!(record.seam, 200);
        }
    }

    #[test]
    fn direction_symmetry_on_exact_crops() {
        let scene = textured(180, 560, 42);
        let bottom_up: Vec<RgbImage> = (0..3)
            .map(|i| scene.crop(Rect::new(0, 340 - 120 * i, 180, 200)).unwrap())
            .collect();
        let top_down: Vec<RgbImage> = bottom_up.iter().rev().cloned().collect();
        let (a, ra) =
            stitch_sequence(&bottom_up, StitchDirection::BottomToTop, &StitchParams::default());
        let (b, rb) =
            stitch_sequence(&top_down, StitchDirection::TopToBottom, &StitchParams::default());
        assert!(ra.failures.is_empty() && rb.failures.is_empty());
        assert_eq!(a, b, "both orders must reconstruct the same strip");
        assert_eq!(a, scene.crop(Rect::new(0, 100, 180, 440)).unwrap());
    }

    #[test]
    fn sequence_failure_returns_prefix_and_names_pair() {
        let scene = textured(200, 700, 43);
        let frames = vec![
            scene.crop(Rect::new(0, 440, 200, 200)).unwrap(),
            scene.crop(Rect::new(0, 320, 200, 200)).unwrap(),
            // Disjoint from frame 1: no overlap to estimate.
            scene.crop(Rect::new(0, 0, 200, 120)).unwrap(),
        ];
        let (out, report) =
            stitch_sequence(&frames, StitchDirection::BottomToTop, &StitchParams::default());
        assert_eq!(report.failures.len(), 1);
        assert!(report.failures[0].contains("pair (1, 2)"), "{}", report.failures[0]);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(out, scene.crop(Rect::new(0, 320, 200, 320)).unwrap());
        assert_eq!(report.frame_placements.len(), 2);
    }

    #[test]
    fn one_by_one_plan_returns_the_frame() {
        let f = textured(90, 70, 44);
        let plan = MosaicPlan {
            columns: 1,
            rows: 1,
            traversal: "serpentine".to_string(),
            leg_direction: StitchDirection::BottomToTop,
            frames: vec!["f0".to_string()],
        };
        let (out, report) = build_mosaic(&plan, std::slice::from_ref(&f), &StitchParams::default());
        assert_eq!(out, f);
        assert!(report.pairs.is_empty() && report.failures.is_empty());
        assert_eq!(report.frame_placements, vec![FramePlacement { frame: 0, x: 0, y: 0 }]);
    }

    #[test]
    fn grid_of_exact_crops_reconstructs_the_scene() {
        let scene = textured(560, 560, 45);
        // 3x3 grid of 240x240 frames stepping 160 px both axes.
        let (rows, cols, fw, step) = (3u32, 3u32, 240i32, 160i32);
        let mut frames = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                frames.push(
                    scene
                        .crop(Rect::new(c as i32 * step, r as i32 * step, fw, fw))
                        .unwrap(),
                );
            }
        }
        let plan = MosaicPlan {
            columns: cols,
            rows,
            traversal: "serpentine".to_string(),
            leg_direction: StitchDirection::BottomToTop,
            frames: (0..9).map(|i| format!("f{i}")).collect(),
        };
        let (out, report) = build_mosaic(&plan, &frames, &StitchParams::default());
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(out, scene, "grid mosaic must reproduce the full scene");
        // 2 pairs per column x 3 columns + 2 joins.
        assert_eq!(report.pairs.len(), 8);
        // Every frame placement equals its true scene position.
        assert_eq!(report.frame_placements.len(), 9);
        for p in &report.frame_placements {
            let (r, c) = (p.frame as u32 / cols, p.frame as u32 % cols);
            assert_eq!(
                (p.x, p.y),
                (c as i32 * step, r as i32 * step),
                "frame {} misplaced",
                p.frame
            );
        }
    }

    #[test]
    fn grid_join_failure_returns_joined_prefix() {
        let scene = textured(760, 400, 46);
        // Two 2-frame columns that overlap, then a third far column.
        let (fw, fh) = (220i32, 240i32);
        let col_x = [0i32, 150, 540];
        let mut frames = Vec::new();
        for r in 0..2i32 {
            for &cx in &col_x {
                frames.push(scene.crop(Rect::new(cx, r * 160, fw, fh)).unwrap());
            }
        }
        let plan = MosaicPlan {
            columns: 3,
            rows: 2,
            traversal: "serpentine".to_string(),
            leg_direction: StitchDirection::BottomToTop,
            frames: (0..6).map(|i| format!("f{i}")).collect(),
        };
        let (out, report) = build_mosaic(&plan, &frames, &StitchParams::default());
        assert_eq!(report.failures.len(), 1);
        assert!(
            report.failures[0].contains("join of columns 1 and 2"),
            "{}",
            report.failures[0]
        );
        // The joined prefix covers columns 0 and 1.
        assert_eq!(out, scene.crop(Rect::new(0, 0, 150 + fw, 400)).unwrap());
        assert_eq!(report.frame_placements.len(), 4);
    }
}
