//! Upright 64-component descriptors from Haar-wavelet responses.

use crate::integral::IntegralImage;
use crate::raster::Rect;

use super::{Descriptor, FeatureError, InterestPoint};

/// Fraction of the window side that may hang past the image border
/// before the point is rejected instead of clamped.
const MAX_OVERFLOW_FRACTION: f64 = 0.2;

/// Computes the descriptor for one interest point.
///
/// A 20s-sided window centered on the point (s = point scale) is split
/// into 4x4 subregions sampled 5x5 each; every sample contributes
/// Haar-wavelet responses dx, dy of wavelet size 2s, weighted by a
/// global Gaussian (sigma = 3.3s) centered on the point. Each subregion
/// accumulates (sum dx, sum dy, sum |dx|, sum |dy|); the concatenation
/// is normalized to unit length. A window with zero gradient everywhere
/// yields the all-zero descriptor (non-matchable) rather than an error.
///
/// Windows overflowing the border by at most 20% of the window side are
/// clamped (border sums are area-compensated); beyond that the point is
/// rejected with `WindowOutOfBounds`.
pub fn compute_descriptor(
    ii: &IntegralImage,
    point: &InterestPoint,
) -> Result<Descriptor, FeatureError> {
    let s = point.scale;
    assert!(s > 0.0, "scale must be positive");
    let half_window = 10.0 * s;
    let allowance = MAX_OVERFLOW_FRACTION * 20.0 * s;

    let overflow = [
        half_window - point.x,
        half_window - point.y,
        point.x + half_window - (ii.width() as f64 - 1.0),
        point.y + half_window - (ii.height() as f64 - 1.0),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    if overflow > allowance {
        return Err(FeatureError::WindowOutOfBounds { x: point.x, y: point.y, scale: s });
    }

    // Haar half-size in whole pixels; the wavelet spans 2*haar pixels.
    let haar = (s.round() as i32).max(1);
    let inv_two_sigma_sq = 1.0 / (2.0 * 3.3 * 3.3);

    let mut values = [0.0f64; 64];
    for b in 0..20usize {
        let oy = (b as f64 - 9.5) * s;
        let py = (point.y + oy).round() as i32;
        for a in 0..20usize {
            let ox = (a as f64 - 9.5) * s;
            let px = (point.x + ox).round() as i32;

            // Gaussian weight in sample units; the scale cancels.
            let (ua, ub) = (a as f64 - 9.5, b as f64 - 9.5);
            let weight = (-(ua * ua + ub * ub) * inv_two_sigma_sq).exp();

            let right = ii.box_sum_area_scaled(Rect::new(px, py - haar, haar, 2 * haar));
            let left = ii.box_sum_area_scaled(Rect::new(px - haar, py - haar, haar, 2 * haar));
            let bottom = ii.box_sum_area_scaled(Rect::new(px - haar, py, 2 * haar, haar));
            let top = ii.box_sum_area_scaled(Rect::new(px - haar, py - haar, 2 * haar, haar));
            let dx = weight * (right - left);
            let dy = weight * (bottom - top);

            let slot = 4 * (4 * (b / 5) + a / 5);
            values[slot] += dx;
            values[slot + 1] += dy;
            values[slot + 2] += dx.abs();
            values[slot + 3] += dy.abs();
        }
    }

    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for v in values.iter_mut() {
            *v /= norm;
        }
    } else {
        values = [0.0; 64];
    }
    Ok(Descriptor { values })
}
