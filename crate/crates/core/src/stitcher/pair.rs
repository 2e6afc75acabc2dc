//! Pairwise composition: geometry and the full detect-to-join pipeline.

use crate::features::{detect_and_describe, Keypoint};
use crate::integral::IntegralImage;
use crate::matching::match_descriptors;
use crate::raster::{to_grayscale, Raster, Rect, RgbImage, StitchDirection};
use crate::transform::{estimate_translation, Translation2D};

use super::{round_px, StitchError, StitchParams, DETECTION_BAND_FACTOR, DRIFT_LIMIT};

/// How a composed pair maps its inputs into the output canvas.
///
/// `a_shift`/`b_shift` are the output coordinates of each input's
/// origin: input pixel (x, y) lands at (x + shift.x, y + shift.y)
/// whenever that pixel survived the crop. `seam` is the coordinate
/// along the stitch axis where the incoming frame meets the remainder
/// of the accumulated image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub a_shift: (i32, i32),
    pub b_shift: (i32, i32),
    pub seam: i32,
    /// Overlap region in A's (uncropped) coordinates.
    pub overlap_in_a: Rect,
    /// The same region in B's coordinates.
    pub overlap_in_b: Rect,
    pub width: u32,
    pub height: u32,
}

/// Joins B (placed at integer translation `t` in A's coordinates) onto
/// A: B survives whole along the stitch axis, A keeps only what B does
/// not cover in the travel direction. Perpendicular drift up to
/// [`DRIFT_LIMIT`] is absorbed by shifting B and cropping both inputs
/// to their common perpendicular extent.
///
/// Generic over the pixel type so tests can replay a composition on
/// marker rasters and prove no output pixel was invented.
pub fn compose_pair<P: Copy>(
    a: &Raster<P>,
    b: &Raster<P>,
    t: (i32, i32),
    dir: StitchDirection,
) -> Result<(Raster<P>, PairGeometry), StitchError> {
    let (tx, ty) = t;
    let (wa, ha) = (a.width() as i32, a.height() as i32);
    let (wb, hb) = (b.width() as i32, b.height() as i32);

    let consistent = match dir {
        StitchDirection::BottomToTop => ty <= 0,
        StitchDirection::TopToBottom => ty >= 0 && ty + hb >= ha,
        StitchDirection::LeftToRight => tx >= 0 && tx + wb >= wa,
        StitchDirection::RightToLeft => tx <= 0,
    };
    if !consistent {
        return Err(StitchError::DirectionMismatch { dir, tx, ty });
    }

    let drift = if dir.is_vertical() { tx } else { ty };
    if drift.abs() > DRIFT_LIMIT {
        return Err(StitchError::ExcessiveDrift { drift, limit: DRIFT_LIMIT });
    }

    let overlap_in_a = Rect::new(0, 0, wa, ha).intersect(&Rect::new(tx, ty, wb, hb));
    if overlap_in_a.is_empty() {
        return Err(StitchError::NoOverlap { tx: tx as f64, ty: ty as f64 });
    }
    let overlap_in_b =
        Rect::new(overlap_in_a.x - tx, overlap_in_a.y - ty, overlap_in_a.w, overlap_in_a.h);

    let (out, geometry) = if dir.is_vertical() {
        // Common perpendicular extent.
        let al = tx.max(0);
        let bl = (-tx).max(0);
        let cw = wa.min(tx + wb) - al;
        let a_cropped = a.crop(Rect::new(al, 0, cw, ha))?;
        let b_cropped = b.crop(Rect::new(bl, 0, cw, hb))?;

        match dir {
            StitchDirection::BottomToTop => {
                // B on top, A's rows below B's reach.
                let rest_start = (ty + hb).min(ha);
                let rest = a_cropped.crop(Rect::new(0, rest_start, cw, ha - rest_start))?;
                let out = b_cropped.concat(&rest, dir)?;
                let geometry = PairGeometry {
                    a_shift: (-al, -ty),
                    b_shift: (-bl, 0),
                    seam: hb,
                    overlap_in_a,
                    overlap_in_b,
                    width: out.width(),
                    height: out.height(),
                };
                (out, geometry)
            }
            _ => {
                // TopToBottom: A's rows above B's start, then B.
                let rest = a_cropped.crop(Rect::new(0, 0, cw, ty))?;
                let out = rest.concat(&b_cropped, dir)?;
                let geometry = PairGeometry {
                    a_shift: (-al, 0),
                    b_shift: (-bl, ty),
                    seam: ty,
                    overlap_in_a,
                    overlap_in_b,
                    width: out.width(),
                    height: out.height(),
                };
                (out, geometry)
            }
        }
    } else {
        let at = ty.max(0);
        let bt = (-ty).max(0);
        let ch = ha.min(ty + hb) - at;
        let a_cropped = a.crop(Rect::new(0, at, wa, ch))?;
        let b_cropped = b.crop(Rect::new(0, bt, wb, ch))?;

        match dir {
            StitchDirection::LeftToRight => {
                let rest = a_cropped.crop(Rect::new(0, 0, tx, ch))?;
                let out = rest.concat(&b_cropped, dir)?;
                let geometry = PairGeometry {
                    a_shift: (0, -at),
                    b_shift: (tx, -bt),
                    seam: tx,
                    overlap_in_a,
                    overlap_in_b,
                    width: out.width(),
                    height: out.height(),
                };
                (out, geometry)
            }
            _ => {
                // RightToLeft: B first, then A's columns past B's reach.
                let rest_start = (tx + wb).min(wa);
                let rest = a_cropped.crop(Rect::new(rest_start, 0, wa - rest_start, ch))?;
                let out = b_cropped.concat(&rest, dir)?;
                let geometry = PairGeometry {
                    a_shift: (-tx, -at),
                    b_shift: (0, -bt),
                    seam: wb,
                    overlap_in_a,
                    overlap_in_b,
                    width: out.width(),
                    height: out.height(),
                };
                (out, geometry)
            }
        }
    };

    Ok((out, geometry))
}

/// Result of a feature-driven pairwise stitch.
#[derive(Debug, Clone)]
pub struct StitchOutcome {
    pub image: RgbImage,
    pub geometry: PairGeometry,
    pub matches: usize,
    pub inliers: usize,
    /// Sub-pixel estimate; the composition used it rounded.
    pub translation: Translation2D,
}

/// Estimates the translation between two frames from features and
/// composes them along `dir`.
pub fn stitch_pair(
    a: &RgbImage,
    b: &RgbImage,
    dir: StitchDirection,
    params: &StitchParams,
) -> Result<StitchOutcome, StitchError> {
    stitch_pair_banded(a, b, dir, params, None)
}

/// As [`stitch_pair`], but when `band_extent` is given, detection on A
/// is restricted to a band of 1.5x that extent measured from the
/// stitch-facing edge. Sequence stitching passes the incoming frame's
/// extent so per-pair cost stays constant as the accumulated image
/// grows; the overlap can never lie deeper than one frame.
pub(crate) fn stitch_pair_banded(
    a: &RgbImage,
    b: &RgbImage,
    dir: StitchDirection,
    params: &StitchParams,
    band_extent: Option<u32>,
) -> Result<StitchOutcome, StitchError> {
    let (wa, ha) = (a.width() as i32, a.height() as i32);
    let band_rect = match band_extent {
        None => Rect::new(0, 0, wa, ha),
        Some(extent) => {
            let band = (DETECTION_BAND_FACTOR * extent as f64).round() as i32;
            match dir {
                StitchDirection::BottomToTop => Rect::new(0, 0, wa, band.min(ha)),
                StitchDirection::TopToBottom => {
                    let bh = band.min(ha);
                    Rect::new(0, ha - bh, wa, bh)
                }
                StitchDirection::LeftToRight => {
                    let bw = band.min(wa);
                    Rect::new(wa - bw, 0, bw, ha)
                }
                StitchDirection::RightToLeft => Rect::new(0, 0, band.min(wa), ha),
            }
        }
    };

    let a_band = a.crop(band_rect)?;
    let kp_a = keypoints_of(&a_band);
    let kp_b = keypoints_of(b);

    let matches = match_descriptors(&kp_a, &kp_b, &params.matcher)?;
    let pa: Vec<(f64, f64)> = kp_a
        .iter()
        .map(|k| (k.x + band_rect.x as f64, k.y + band_rect.y as f64))
        .collect();
    let pb: Vec<(f64, f64)> = kp_b.iter().map(|k| (k.x, k.y)).collect();
    let estimate = estimate_translation(&pa, &pb, &matches, &params.ransac)?;

    let t = estimate.translation;
    let (mut image, geometry) = compose_pair(a, b, (round_px(t.tx), round_px(t.ty)), dir)?;
    if params.feather {
        feather_overlap(&mut image, a, b, &geometry, dir);
    }

    Ok(StitchOutcome {
        image,
        geometry,
        matches: matches.len(),
        inliers: estimate.inlier_indices.len(),
        translation: t,
    })
}

fn keypoints_of(img: &RgbImage) -> Vec<Keypoint> {
    let ii = IntegralImage::new(&to_grayscale(img));
    detect_and_describe(&ii, &Default::default())
}

/// Linear cross-fade over the overlap strip: the incoming frame's
/// weight ramps from full strength deep inside its own territory down
/// to near zero at the seam, where the accumulated image continues.
fn feather_overlap(
    out: &mut RgbImage,
    a: &RgbImage,
    b: &RgbImage,
    geometry: &PairGeometry,
    dir: StitchDirection,
) {
    let strip = Rect::new(
        geometry.overlap_in_a.x + geometry.a_shift.0,
        geometry.overlap_in_a.y + geometry.a_shift.1,
        geometry.overlap_in_a.w,
        geometry.overlap_in_a.h,
    )
    .intersect(&Rect::new(0, 0, out.width() as i32, out.height() as i32));

    let seam = geometry.seam;
    for y in strip.y..strip.y + strip.h {
        for x in strip.x..strip.x + strip.w {
            let w_b = match dir {
                StitchDirection::BottomToTop => (seam - y) as f64 / (strip.h + 1) as f64,
                StitchDirection::TopToBottom => (y - seam + 1) as f64 / (strip.h + 1) as f64,
                StitchDirection::LeftToRight => (x - seam + 1) as f64 / (strip.w + 1) as f64,
                StitchDirection::RightToLeft => (seam - x) as f64 / (strip.w + 1) as f64,
            };
            let pa = a.get((x - geometry.a_shift.0) as u32, (y - geometry.a_shift.1) as u32);
            let pb = b.get((x - geometry.b_shift.0) as u32, (y - geometry.b_shift.1) as u32);
            let mut px = [0u8; 3];
            for c in 0..3 {
                px[c] = (w_b * pb[c] as f64 + (1.0 - w_b) * pa[c] as f64).round() as u8;
            }
            out.set(x as u32, y as u32, px);
        }
    }
}
