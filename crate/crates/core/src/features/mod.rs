//! Interest-point detection and description.
//!
//! Detection approximates the determinant of the Hessian with box
//! filters over an integral image, scans a filter-size pyramid for
//! scale-space maxima, and refines them to sub-pixel, sub-scale
//! precision. Description summarizes Haar-wavelet gradients over a
//! scale-proportional window into a 64-component unit vector. The
//! descriptors are upright: frames from an axis-aligned survey flight
//! do not rotate relative to each other, so no orientation is assigned.

mod describe;
mod detect;
mod hessian;

pub use describe::compute_descriptor;
pub use detect::{detect_interest_points, DetectorParams};
pub use hessian::{hessian_response, HessianResponseMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integral::IntegralImage;

/// Errors from detection and description.
#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("filter size {filter_size} does not fit a {width}x{height} image")]
    FilterTooLarge { filter_size: u32, width: u32, height: u32 },
    #[error("descriptor window for point at ({x:.1}, {y:.1}) scale {scale:.2} overflows the image beyond the clamping allowance")]
    WindowOutOfBounds { x: f64, y: f64, scale: f64 },
}

/// A detected scale-space extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterestPoint {
    /// Sub-pixel column coordinate.
    pub x: f64,
    /// Sub-pixel row coordinate.
    pub y: f64,
    /// Gaussian-equivalent scale, 1.2/9 of the interpolated filter size.
    pub scale: f64,
    /// Approximated det(H) at the detected sample (not interpolated).
    pub response: f64,
    /// Sign of the trace Dxx + Dyy; matching uses it as a fast reject.
    pub laplacian_sign: i8,
}

/// 64-component descriptor: 4x4 subregions, each contributing
/// (sum dx, sum dy, sum |dx|, sum |dy|), subregions row-major.
/// Unit Euclidean norm, except the all-zero vector for a patch with no
/// gradient signal anywhere; such descriptors are non-matchable.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: [f64; 64],
}

impl Descriptor {
    /// Flat-patch marker: every Haar response in the window was zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Interchange record: a point together with its descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub response: f64,
    pub laplacian_sign: i8,
    pub descriptor: Vec<f64>,
}

impl Keypoint {
    pub fn new(point: InterestPoint, descriptor: &Descriptor) -> Self {
        Keypoint {
            x: point.x,
            y: point.y,
            scale: point.scale,
            response: point.response,
            laplacian_sign: point.laplacian_sign,
            descriptor: descriptor.values.to_vec(),
        }
    }

    pub fn point(&self) -> InterestPoint {
        InterestPoint {
            x: self.x,
            y: self.y,
            scale: self.scale,
            response: self.response,
            laplacian_sign: self.laplacian_sign,
        }
    }

    pub fn descriptor(&self) -> Descriptor {
        let mut values = [0.0; 64];
        values.copy_from_slice(&self.descriptor);
        Descriptor { values }
    }
}

/// Runs detection then description, dropping points whose descriptor
/// window overflows the border allowance. Flat (all-zero) descriptors
/// are kept; the matcher skips them.
pub fn detect_and_describe(ii: &IntegralImage, params: &DetectorParams) -> Vec<Keypoint> {
    detect_interest_points(ii, params)
        .into_iter()
        .filter_map(|p| compute_descriptor(ii, &p).ok().map(|d| Keypoint::new(p, &d)))
        .collect()
}

/// Serializes keypoints for interchange. Floats keep full precision:
/// the encoder emits the shortest digit string that round-trips the
/// exact binary value.
pub fn keypoints_to_json(keypoints: &[Keypoint]) -> String {
    serde_json::to_string_pretty(keypoints).expect("keypoint serialization cannot fail")
}

pub fn keypoints_from_json(json: &str) -> Result<Vec<Keypoint>, serde_json::Error> {
    let kps: Vec<Keypoint> = serde_json::from_str(json)?;
    for kp in &kps {
        if kp.descriptor.len() != 64 {
            return Err(serde::de::Error::custom(format!(
                "descriptor has {} components, expected 64",
                kp.descriptor.len()
            )));
        }
    }
    Ok(kps)
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::raster::GrayImage;

    /// Bright Gaussian bump on a mid-gray field.
    pub(crate) fn gaussian_blob(w: u32, h: u32, cx: f64, cy: f64, sigma: f64) -> GrayImage {
        let mut img = GrayImage::from_pixel(w, h, 0.0);
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let v = 40.0 + 180.0 * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                img.set(x, y, v as f32);
            }
        }
        img
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypoint_json_round_trip() {
        let kp = Keypoint {
            x: 12.625,
            y: 40.5,
            scale: 1.2,
            response: 3.875e-2,
            laplacian_sign: -1,
            descriptor: (0..64).map(|i| (i as f64) / 64.0).collect(),
        };
        let json = keypoints_to_json(std::slice::from_ref(&kp));
        let back = keypoints_from_json(&json).unwrap();
        assert_eq!(back, vec![kp]);
    }

    #[test]
    fn keypoint_json_field_order_is_fixed() {
        let kp = Keypoint {
            x: 1.0,
            y: 2.0,
            scale: 1.2,
            response: 0.5,
            laplacian_sign: 1,
            descriptor: vec![0.0; 64],
        };
        let json = serde_json::to_string(&[kp]).unwrap();
        let fields = ["\"x\"", "\"y\"", "\"scale\"", "\"response\"", "\"laplacian_sign\"", "\"descriptor\""];
        let mut last = 0;
        for f in fields {
            let pos = json.find(f).unwrap_or_else(|| panic!("{f} missing"));
            assert!(pos > last, "{f} out of order");
            last = pos;
        }
    }

    #[test]
    fn wrong_descriptor_length_rejected() {
        let json = r#"[{"x":1,"y":2,"scale":1.2,"response":0.5,"laplacian_sign":1,"descriptor":[0.0,1.0]}]"#;
        assert!(keypoints_from_json(json).is_err());
    }

    #[test]
    fn descriptor_distance_is_euclidean() {
        let mut a = [0.0; 64];
        let mut b = [0.0; 64];
        a[0] = 3.0;
        b[1] = 4.0;
        let d = Descriptor { values: a }.distance(&Descriptor { values: b });
        assert!((d - 5.0).abs() < 1e-12);
    }
}
