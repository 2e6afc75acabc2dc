//! Pixel containers and geometric raster operations.
//!
//! All images are row-major with the origin at the top-left corner,
//! x growing right and y growing down. Every operation is a pure
//! function of its inputs; nothing here mutates shared state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by the raster and image-I/O layer.
#[derive(Debug, Error)]
pub enum ImageError {
    #[error("rect {rect:?} out of bounds for {width}x{height} image")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt file: {0}")]
    CorruptFile(String),
}

/// An axis-aligned pixel rectangle: top-left corner plus extent.
///
/// Coordinates are signed so that filter geometry may reach past the
/// image border; operations that require an in-bounds rect validate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0 || self.h <= 0
    }

    /// Intersection of two rects; empty results are normalized to zero extent.
    pub fn intersect(&self, other: &Rect) -> Rect {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        Rect::new(x0, y0, (x1 - x0).max(0), (y1 - y0).max(0))
    }
}

/// Axis along which two images are joined, named after the direction the
/// camera advanced while the frames were taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StitchDirection {
    BottomToTop,
    TopToBottom,
    LeftToRight,
    RightToLeft,
}

impl StitchDirection {
    pub fn is_vertical(&self) -> bool {
        matches!(self, StitchDirection::BottomToTop | StitchDirection::TopToBottom)
    }

    pub fn opposite(&self) -> StitchDirection {
        match self {
            StitchDirection::BottomToTop => StitchDirection::TopToBottom,
            StitchDirection::TopToBottom => StitchDirection::BottomToTop,
            StitchDirection::LeftToRight => StitchDirection::RightToLeft,
            StitchDirection::RightToLeft => StitchDirection::LeftToRight,
        }
    }
}

/// Row-major pixel grid, generic over the pixel type.
///
/// Zero-extent rasters are permitted: they arise naturally as the
/// remainder of an image whose overlap strip spanned the whole frame.
/// File I/O and the detector reject them at their own boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<P> {
    width: u32,
    height: u32,
    data: Vec<P>,
}

/// 8-bit three-channel color image.
pub type RgbImage = Raster<[u8; 3]>;
/// Single-channel luminance image with real-valued intensities in [0, 255].
pub type GrayImage = Raster<f32>;

impl<P: Copy> Raster<P> {
    pub fn from_pixel(width: u32, height: u32, fill: P) -> Self {
        Raster { width, height, data: vec![fill; (width * height) as usize] }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<P>) -> Result<Self, ImageError> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(ImageError::DimensionMismatch(format!(
                "buffer holds {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Raster { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> P {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: P) {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y * self.width + x) as usize] = value;
    }

    pub fn pixels(&self) -> &[P] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    fn check_inside(&self, r: Rect) -> Result<(), ImageError> {
        let ok = r.w >= 0
            && r.h >= 0
            && r.x >= 0
            && r.y >= 0
            && (r.x as i64 + r.w as i64) <= self.width as i64
            && (r.y as i64 + r.h as i64) <= self.height as i64;
        if ok {
            Ok(())
        } else {
            Err(ImageError::OutOfBounds { rect: r, width: self.width, height: self.height })
        }
    }

    /// Extracts the sub-image covered by `r`; pixel (i, j) of the output is
    /// the source pixel (r.x + i, r.y + j).
    pub fn crop(&self, r: Rect) -> Result<Raster<P>, ImageError> {
        self.check_inside(r)?;
        let (w, h) = (r.w as u32, r.h as u32);
        let mut data = Vec::with_capacity((w * h) as usize);
        for j in 0..h {
            let row = ((r.y as u32 + j) * self.width + r.x as u32) as usize;
            data.extend_from_slice(&self.data[row..row + w as usize]);
        }
        Ok(Raster { width: w, height: h, data })
    }

    /// Rotates by `turns` quarter-turns clockwise. Source pixel (x, y) lands
    /// at (H-1-y, x) per turn; four turns compose to the identity.
    pub fn rotate_quarter(&self, turns: u8) -> Raster<P> {
        match turns % 4 {
            0 => self.clone(),
            1 => {
                let (w, h) = (self.height, self.width);
                let mut out = Vec::with_capacity(self.data.len());
                // Output row y' = x, output col x' = H-1-y.
                for y_out in 0..h {
                    for x_out in 0..w {
                        let src_x = y_out;
                        let src_y = self.height - 1 - x_out;
                        out.push(self.get(src_x, src_y));
                    }
                }
                Raster { width: w, height: h, data: out }
            }
            n => self.rotate_quarter(1).rotate_quarter(n - 1),
        }
    }

    /// Joins two images along the axis selected by `dir`: the first argument
    /// is placed on top (vertical) or on the left (horizontal). No pixel is
    /// invented; the output is exactly the two inputs laid side by side.
    pub fn concat(&self, other: &Raster<P>, dir: StitchDirection) -> Result<Raster<P>, ImageError> {
        if dir.is_vertical() {
            if !self.is_empty() && !other.is_empty() && self.width != other.width {
                return Err(ImageError::DimensionMismatch(format!(
                    "vertical concat needs equal widths, got {} and {}",
                    self.width, other.width
                )));
            }
            if self.is_empty() {
                return Ok(other.clone());
            }
            if other.is_empty() {
                return Ok(self.clone());
            }
            let mut data = Vec::with_capacity(self.data.len() + other.data.len());
            data.extend_from_slice(&self.data);
            data.extend_from_slice(&other.data);
            Ok(Raster { width: self.width, height: self.height + other.height, data })
        } else {
            if !self.is_empty() && !other.is_empty() && self.height != other.height {
                return Err(ImageError::DimensionMismatch(format!(
                    "horizontal concat needs equal heights, got {} and {}",
                    self.height, other.height
                )));
            }
            if self.is_empty() {
                return Ok(other.clone());
            }
            if other.is_empty() {
                return Ok(self.clone());
            }
            let w = self.width + other.width;
            let mut data = Vec::with_capacity((w * self.height) as usize);
            for y in 0..self.height {
                let a = (y * self.width) as usize;
                let b = (y * other.width) as usize;
                data.extend_from_slice(&self.data[a..a + self.width as usize]);
                data.extend_from_slice(&other.data[b..b + other.width as usize]);
            }
            Ok(Raster { width: w, height: self.height, data })
        }
    }
}

/// Converts a color image to luminance via the 0.299/0.587/0.114 weighting.
/// Output keeps full real precision; no rounding to integer gray levels.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) as f32)
        .collect();
    Raster { width: img.width(), height: img.height(), data }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_rgb(w: u32, h: u32) -> RgbImage {
        let mut img = RgbImage::from_pixel(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, [(x * 7 % 256) as u8, (y * 13 % 256) as u8, ((x + y) % 256) as u8]);
            }
        }
        img
    }

    #[test]
    fn grayscale_black_is_zero() {
        let img = RgbImage::from_pixel(4, 3, [0, 0, 0]);
        let g = to_grayscale(&img);
        assert!(g.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grayscale_white_is_255() {
        let img = RgbImage::from_pixel(4, 3, [255, 255, 255]);
        let g = to_grayscale(&img);
        for &v in g.pixels() {
            assert!((v - 255.0).abs() < 1e-3, "got {v}");
        }
    }

    #[test]
    fn grayscale_matches_scalar_formula() {
        let img = ramp_rgb(8, 8);
        let g = to_grayscale(&img);
        for y in 0..8 {
            for x in 0..8 {
                let [r, gr, b] = img.get(x, y);
                let want = (0.299 * r as f64 + 0.587 * gr as f64 + 0.114 * b as f64) as f32;
                assert_eq!(g.get(x, y), want);
            }
        }
    }

    #[test]
    fn grayscale_bounded() {
        let img = ramp_rgb(16, 16);
        let g = to_grayscale(&img);
        assert!(g.pixels().iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn crop_full_rect_is_identity() {
        let img = ramp_rgb(6, 5);
        let c = img.crop(Rect::new(0, 0, 6, 5)).unwrap();
        assert_eq!(c, img);
    }

    #[test]
    fn crop_single_pixel() {
        let img = ramp_rgb(6, 5);
        let c = img.crop(Rect::new(3, 2, 1, 1)).unwrap();
        assert_eq!(c.get(0, 0), img.get(3, 2));
    }

    #[test]
    fn crop_composition() {
        let img = ramp_rgb(16, 12);
        let outer = Rect::new(2, 3, 10, 8);
        let inner = Rect::new(1, 2, 5, 4);
        let two_step = img.crop(outer).unwrap().crop(inner).unwrap();
        let composed =
            img.crop(Rect::new(outer.x + inner.x, outer.y + inner.y, inner.w, inner.h)).unwrap();
        assert_eq!(two_step, composed);
    }

    #[test]
    fn crop_out_of_bounds_errors() {
        let img = ramp_rgb(6, 5);
        assert!(matches!(
            img.crop(Rect::new(3, 0, 4, 2)),
            Err(ImageError::OutOfBounds { .. })
        ));
        assert!(matches!(
            img.crop(Rect::new(-1, 0, 2, 2)),
            Err(ImageError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = ramp_rgb(5, 7);
        assert_eq!(img.rotate_quarter(0), img);
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let img = ramp_rgb(5, 7);
        let r = img.rotate_quarter(1).rotate_quarter(1).rotate_quarter(1).rotate_quarter(1);
        assert_eq!(r, img);
    }

    #[test]
    fn rotate_maps_coordinates() {
        // 2x3 image with distinct values; (x, y) must land at (H-1-y, x).
        let mut img = Raster::from_pixel(2u32, 3u32, 0u32);
        for y in 0..3 {
            for x in 0..2 {
                img.set(x, y, 10 * x + y);
            }
        }
        let rot = img.rotate_quarter(1);
        assert_eq!(rot.width(), 3);
        assert_eq!(rot.height(), 2);
        for y in 0..3i32 {
            for x in 0..2i32 {
                let (h, _) = (3i32, 2i32);
                assert_eq!(
                    rot.get((h - 1 - y) as u32, x as u32),
                    img.get(x as u32, y as u32)
                );
            }
        }
    }

    #[test]
    fn concat_heights_add() {
        let a = ramp_rgb(8, 10);
        let b = ramp_rgb(8, 12);
        let v = a.concat(&b, StitchDirection::BottomToTop).unwrap();
        assert_eq!((v.width(), v.height()), (8, 22));
    }

    #[test]
    fn concat_empty_is_neutral() {
        let a = ramp_rgb(8, 10);
        let empty = RgbImage::from_pixel(8, 0, [0, 0, 0]);
        assert_eq!(a.concat(&empty, StitchDirection::TopToBottom).unwrap(), a);
        assert_eq!(empty.concat(&a, StitchDirection::TopToBottom).unwrap(), a);
    }

    #[test]
    fn concat_dimension_mismatch() {
        let a = ramp_rgb(8, 10);
        let b = ramp_rgb(9, 10);
        assert!(matches!(
            a.concat(&b, StitchDirection::BottomToTop),
            Err(ImageError::DimensionMismatch(_))
        ));
        assert!(a.concat(&b, StitchDirection::LeftToRight).is_ok());
    }

    #[test]
    fn concat_then_crop_recovers_inputs() {
        let a = ramp_rgb(8, 10);
        let mut b = ramp_rgb(8, 6);
        b.set(3, 3, [9, 9, 9]);
        let v = a.concat(&b, StitchDirection::BottomToTop).unwrap();
        assert_eq!(v.crop(Rect::new(0, 0, 8, 10)).unwrap(), a);
        assert_eq!(v.crop(Rect::new(0, 10, 8, 6)).unwrap(), b);

        let h = a.concat(&ramp_rgb(5, 10), StitchDirection::LeftToRight).unwrap();
        assert_eq!(h.crop(Rect::new(0, 0, 8, 10)).unwrap(), a);
    }
}
