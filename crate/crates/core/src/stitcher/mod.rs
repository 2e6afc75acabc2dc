//! Crop-and-join stitching.
//!
//! The composition rule is deliberately simple: estimate the pairwise
//! translation, identify the overlap, drop the overlap strip from the
//! accumulated image, and concatenate the incoming frame whole. The
//! newest frame always survives verbatim, every output pixel comes from
//! exactly one input, and seams are hard lines unless feathering is
//! switched on. Sequences fold pairs along a flight leg; grids stitch
//! each column, rotate the columns a quarter turn, fold them the same
//! way, and rotate the result back.

mod mosaic;
mod pair;

pub use mosaic::{build_mosaic, stitch_sequence};
pub use pair::{compose_pair, stitch_pair, PairGeometry, StitchOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::DetectorParams;
use crate::matching::{MatchError, MatchParams};
use crate::raster::{ImageError, Rect, StitchDirection};
use crate::transform::{RansacParams, TransformError, Translation2D};

/// Perpendicular drift (pixels) tolerated by shifting and cropping;
/// anything larger loses too much frame width to be worth stitching.
pub const DRIFT_LIMIT: i32 = 8;

/// Detection on an accumulated image is restricted to a band this many
/// times the incoming frame's extent, measured from the stitch-facing
/// edge; matches cannot lie deeper than one frame plus tolerance.
pub const DETECTION_BAND_FACTOR: f64 = 1.5;

#[derive(Debug, Error)]
pub enum StitchError {
    #[error("no overlap at t = ({tx:.1}, {ty:.1}): the camera moved more than a frame between shots")]
    NoOverlap { tx: f64, ty: f64 },
    #[error("perpendicular drift of {drift} px exceeds the {limit} px crop allowance")]
    ExcessiveDrift { drift: i32, limit: i32 },
    #[error("translation ({tx}, {ty}) is inconsistent with stitching {dir:?}: the incoming frame must extend the mosaic in the direction of travel")]
    DirectionMismatch { dir: StitchDirection, tx: i32, ty: i32 },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// The shared scene area of two frames, expressed in each frame's own
/// pixel coordinates. Both rects always have identical extents.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRegions {
    pub rect_in_a: Rect,
    pub rect_in_b: Rect,
    pub translation: Translation2D,
}

/// Intersects frame A at the origin with frame B placed at `t`
/// (components rounded half-away-from-zero to whole pixels; no
/// resampling happens anywhere). The geometry is independent of the
/// stitch direction; `dir` only names the pass for diagnostics, and
/// direction consistency is enforced by the composition step.
pub fn compute_overlap(
    dims_a: (u32, u32),
    dims_b: (u32, u32),
    t: Translation2D,
    _dir: StitchDirection,
) -> Result<OverlapRegions, StitchError> {
    let (tx, ty) = (round_px(t.tx), round_px(t.ty));
    let a = Rect::new(0, 0, dims_a.0 as i32, dims_a.1 as i32);
    let b = Rect::new(tx, ty, dims_b.0 as i32, dims_b.1 as i32);
    let inter = a.intersect(&b);
    if inter.is_empty() {
        return Err(StitchError::NoOverlap { tx: t.tx, ty: t.ty });
    }
    Ok(OverlapRegions {
        rect_in_a: inter,
        rect_in_b: Rect::new(inter.x - tx, inter.y - ty, inter.w, inter.h),
        translation: t,
    })
}

/// Half-away-from-zero rounding of a translation component.
pub(crate) fn round_px(v: f64) -> i32 {
    v.round() as i32
}

/// Grid layout for a mosaic run. `frames` lists frame identifiers
/// row-major in scene order (row 0 is the top of the scene), regardless
/// of the order the camera visited them; `leg_direction` records the
/// flight direction of the first column's leg and must be vertical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicPlan {
    pub columns: u32,
    pub rows: u32,
    pub traversal: String,
    pub leg_direction: StitchDirection,
    pub frames: Vec<String>,
}

impl MosaicPlan {
    pub fn validate(&self) -> Result<(), String> {
        if self.columns < 1 || self.rows < 1 {
            return Err(format!("grid {}x{} is empty", self.columns, self.rows));
        }
        if self.traversal != "serpentine" {
            return Err(format!("unknown traversal {:?}", self.traversal));
        }
        if !self.leg_direction.is_vertical() {
            return Err("leg_direction must be vertical: legs are columns".to_string());
        }
        let want = (self.columns * self.rows) as usize;
        if self.frames.len() != want {
            return Err(format!("plan lists {} frames, grid needs {}", self.frames.len(), want));
        }
        Ok(())
    }

    /// Grid index (row-major) of the frame at (row, col).
    pub fn index_at(&self, row: u32, col: u32) -> usize {
        (row * self.columns + col) as usize
    }
}

/// One successfully stitched pair. `pair` holds the indices of the two
/// inputs (sequence or grid indices; column joins use the grid indices
/// of the two columns' top frames). `seam` is the coordinate along the
/// stitch axis, in that pair's own output image, where the incoming
/// frame meets the accumulated remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair: (usize, usize),
    pub matches: usize,
    pub inliers: usize,
    pub tx: f64,
    pub ty: f64,
    pub seam: i32,
}

/// Where an input frame's origin landed in the final image. Origins may
/// sit just outside the canvas when a drift crop trimmed that frame's
/// edge; placements locate the frame, they do not claim its every pixel
/// survived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePlacement {
    pub frame: usize,
    pub x: i32,
    pub y: i32,
}

/// Full account of a stitching run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchReport {
    pub pairs: Vec<PairRecord>,
    pub width: u32,
    pub height: u32,
    /// Human-readable descriptions of aborted pairs/joins, empty on
    /// full success. The stitched prefix is still returned.
    pub failures: Vec<String>,
    pub frame_placements: Vec<FramePlacement>,
}

impl StitchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Parameters threaded through a stitching run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StitchParams {
    pub detector: DetectorParams,
    pub matcher: MatchParams,
    pub ransac: RansacParams,
    /// Linear feathering across the overlap strip. Off by default: the
    /// crop-and-join output keeps every pixel attributable to exactly
    /// one frame, and feathering trades that purity for softer seams.
    pub feather: bool,
}
