//! Box-filter approximation of the Hessian determinant.
//!
//! The second derivatives of a Gaussian are approximated by weighted
//! box filters evaluated in constant time on an integral image. For a
//! filter of side L (odd, a multiple of 3) the lobe length is l = L/3:
//!
//! * Dyy: an L-tall, (2l-1)-wide column with the middle l rows weighted
//!   -2 and the outer lobes +1, computed as whole minus three middles.
//! * Dxx: the transpose.
//! * Dxy: four l x l quadrant boxes diagonally offset one pixel from the
//!   center row and column; products of opposite-sign lobes.
//!
//! Responses are det(H) = Dxx*Dyy - (0.9*Dxy)^2 with each derivative
//! normalized by the filter area L^2, which makes responses comparable
//! across filter sizes. Filter boxes that hang past the border use
//! area-compensated sums, so a constant image scores exactly zero at
//! every sample, borders included.

use crate::integral::IntegralImage;
use crate::raster::Rect;

use super::FeatureError;

/// Relative weight of the mixed derivative in the determinant.
pub(crate) const DXY_WEIGHT: f64 = 0.9;

/// det(H) approximations for one filter size, sampled on a strided grid.
#[derive(Debug, Clone)]
pub struct HessianResponseMap {
    /// Samples per row.
    pub width: u32,
    /// Sample rows.
    pub height: u32,
    /// Side of the box filter, in pixels.
    pub filter_size: u32,
    /// Pixel stride between samples; sample (i, j) sits at (i*step, j*step).
    pub step: u32,
    /// Row-major normalized det(H) values.
    pub responses: Vec<f64>,
    /// Row-major sign of the trace Dxx + Dyy, in {-1, 0, +1}.
    pub laplacian_signs: Vec<i8>,
}

impl HessianResponseMap {
    #[inline]
    pub fn response(&self, i: u32, j: u32) -> f64 {
        self.responses[(j * self.width + i) as usize]
    }

    #[inline]
    pub fn laplacian_sign(&self, i: u32, j: u32) -> i8 {
        self.laplacian_signs[(j * self.width + i) as usize]
    }
}

/// Filter responses at every pixel (stride 1).
pub fn hessian_response(
    ii: &IntegralImage,
    filter_size: u32,
) -> Result<HessianResponseMap, FeatureError> {
    hessian_response_sampled(ii, filter_size, 1)
}

/// Filter responses on a strided grid; used by the detector pyramid.
pub(crate) fn hessian_response_sampled(
    ii: &IntegralImage,
    filter_size: u32,
    step: u32,
) -> Result<HessianResponseMap, FeatureError> {
    if filter_size < 9
        || filter_size.is_multiple_of(2)
        || !filter_size.is_multiple_of(3)
        || filter_size > ii.width().min(ii.height())
    {
        return Err(FeatureError::FilterTooLarge {
            filter_size,
            width: ii.width(),
            height: ii.height(),
        });
    }
    assert!(step >= 1);

    let lobe = (filter_size / 3) as i32;
    let half = (filter_size as i32 - 1) / 2;
    let area = (filter_size * filter_size) as f64;

    let width = (ii.width() - 1) / step + 1;
    let height = (ii.height() - 1) / step + 1;
    let mut responses = Vec::with_capacity((width * height) as usize);
    let mut laplacian_signs = Vec::with_capacity((width * height) as usize);

    for j in 0..height {
        let y = (j * step) as i32;
        for i in 0..width {
            let x = (i * step) as i32;

            // Dyy: full column minus three times its middle band.
            let col = Rect::new(x - lobe + 1, y - half, 2 * lobe - 1, filter_size as i32);
            let col_mid = Rect::new(x - lobe + 1, y - lobe / 2, 2 * lobe - 1, lobe);
            let dyy = ii.box_sum_area_scaled(col) - 3.0 * ii.box_sum_area_scaled(col_mid);

            // Dxx: the transpose.
            let row = Rect::new(x - half, y - lobe + 1, filter_size as i32, 2 * lobe - 1);
            let row_mid = Rect::new(x - lobe / 2, y - lobe + 1, lobe, 2 * lobe - 1);
            let dxx = ii.box_sum_area_scaled(row) - 3.0 * ii.box_sum_area_scaled(row_mid);

            // Dxy: quadrant boxes offset one pixel from the axes.
            let tl = ii.box_sum_area_scaled(Rect::new(x - lobe, y - lobe, lobe, lobe));
            let tr = ii.box_sum_area_scaled(Rect::new(x + 1, y - lobe, lobe, lobe));
            let bl = ii.box_sum_area_scaled(Rect::new(x - lobe, y + 1, lobe, lobe));
            let br = ii.box_sum_area_scaled(Rect::new(x + 1, y + 1, lobe, lobe));
            let dxy = tl + br - tr - bl;

            let (dxx, dyy, dxy) = (dxx / area, dyy / area, dxy / area);
            responses.push(dxx * dyy - (DXY_WEIGHT * dxy) * (DXY_WEIGHT * dxy));
            let trace = dxx + dyy;
            laplacian_signs.push(if trace > 0.0 {
                1
            } else if trace < 0.0 {
                -1
            } else {
                0
            });
        }
    }

    Ok(HessianResponseMap { width, height, filter_size, step, responses, laplacian_signs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::testutil::gaussian_blob;
    use crate::raster::GrayImage;

    #[test]
    fn constant_image_has_zero_response_everywhere() {
        let img = GrayImage::from_pixel(48, 40, 137.0);
        let ii = IntegralImage::new(&img);
        for filter in [9u32, 15, 21, 27] {
            let map = hessian_response(&ii, filter).unwrap();
            for (idx, &r) in map.responses.iter().enumerate() {
                assert!(
                    r.abs() < 1e-9,
                    "filter {filter} sample {idx}: response {r} on constant image"
                );
            }
        }
    }

    #[test]
    fn blob_response_peaks_at_center() {
        // Filter size matched to the blob: L = 9 * sigma / 1.2.
        let img = gaussian_blob(64, 64, 32.0, 32.0, 2.0);
        let ii = IntegralImage::new(&img);
        let map = hessian_response(&ii, 15).unwrap();
        let (mut best, mut best_at) = (f64::NEG_INFINITY, (0u32, 0u32));
        for j in 0..map.height {
            for i in 0..map.width {
                if map.response(i, j) > best {
                    best = map.response(i, j);
                    best_at = (i, j);
                }
            }
        }
        assert_eq!(best_at, (32, 32), "dense argmax off blob center");
        assert_eq!(map.laplacian_sign(32, 32), -1, "bright blob has negative trace");
    }

    #[test]
    fn saddle_has_negative_response() {
        // f = 128 + k*(x-c)(y-c): pure mixed second derivative at the center.
        let (w, h) = (64u32, 64u32);
        let mut img = GrayImage::from_pixel(w, h, 0.0);
        for y in 0..h {
            for x in 0..w {
                let v = 128.0 + 0.1 * (x as f64 - 31.5) * (y as f64 - 31.5);
                img.set(x, y, v.clamp(0.0, 255.0) as f32);
            }
        }
        let ii = IntegralImage::new(&img);
        let map = hessian_response(&ii, 15).unwrap();
        let center = map.response(31, 31);
        assert!(center < 0.0, "saddle center response {center} not negative");
    }

    #[test]
    fn filter_too_large_and_malformed_sizes_rejected() {
        let ii = IntegralImage::new(&GrayImage::from_pixel(20, 20, 0.0));
        assert!(matches!(
            hessian_response(&ii, 21),
            Err(FeatureError::FilterTooLarge { .. })
        ));
        for bad in [3u32, 7, 10, 12] {
            assert!(hessian_response(&ii, bad).is_err(), "size {bad} accepted");
        }
        assert!(hessian_response(&ii, 9).is_ok());
        assert!(hessian_response(&ii, 15).is_ok());
    }

    #[test]
    fn responses_are_finite() {
        let img = gaussian_blob(48, 36, 20.0, 18.0, 3.0);
        let ii = IntegralImage::new(&img);
        let map = hessian_response(&ii, 9).unwrap();
        assert!(map.responses.iter().all(|r| r.is_finite()));
        assert!(map.laplacian_signs.iter().all(|s| (-1..=1).contains(s)));
    }

    #[test]
    fn strided_map_subsamples_the_dense_map() {
        let img = gaussian_blob(40, 40, 20.0, 20.0, 3.0);
        let ii = IntegralImage::new(&img);
        let dense = hessian_response(&ii, 15).unwrap();
        let strided = hessian_response_sampled(&ii, 15, 2).unwrap();
        for j in 0..strided.height {
            for i in 0..strided.width {
                assert_eq!(strided.response(i, j), dense.response(i * 2, j * 2));
            }
        }
    }
}
