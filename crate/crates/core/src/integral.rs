//! Integral images (summed-area tables) and constant-time box sums.

use crate::raster::{GrayImage, Raster, Rect};

/// Summed-area table over a grayscale image.
///
/// Entry (x, y) holds the sum of all source pixels with coordinates
/// (i <= x, j <= y), accumulated in f64. The table has the same
/// dimensions as its source; lookups outside the table read as zero,
/// which makes the top and left recurrence edges implicit.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    sums: Raster<f64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut sums = Raster::from_pixel(w, h, 0.0f64);
        for y in 0..h {
            let mut row_sum = 0.0f64;
            for x in 0..w {
                row_sum += img.get(x, y) as f64;
                let above = if y > 0 { sums.get(x, y - 1) } else { 0.0 };
                sums.set(x, y, row_sum + above);
            }
        }
        IntegralImage { sums }
    }

    pub fn width(&self) -> u32 {
        self.sums.width()
    }

    pub fn height(&self) -> u32 {
        self.sums.height()
    }

    /// Table lookup with out-of-range coordinates reading as zero.
    #[inline]
    fn at(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 {
            return 0.0;
        }
        let x = x.min(self.sums.width() as i64 - 1);
        let y = y.min(self.sums.height() as i64 - 1);
        self.sums.get(x as u32, y as u32)
    }

    /// Sum of source pixels inside `r`, clamped to the image borders.
    /// Degenerate rects (zero or negative extent, or entirely outside)
    /// sum to zero. Four table lookups regardless of rect size.
    pub fn box_sum(&self, r: Rect) -> f64 {
        let x0 = r.x as i64;
        let y0 = r.y as i64;
        let x1 = x0 + r.w as i64 - 1;
        let y1 = y0 + r.h as i64 - 1;
        // Clamp the inclusive corner coordinates to the image.
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(self.sums.width() as i64 - 1);
        let y1 = y1.min(self.sums.height() as i64 - 1);
        if x1 < x0 || y1 < y0 {
            return 0.0;
        }
        self.at(x1, y1) - self.at(x0 - 1, y1) - self.at(x1, y0 - 1) + self.at(x0 - 1, y0 - 1)
    }

    /// Like [`box_sum`](Self::box_sum) but rescaled by the ratio of nominal
    /// to sampled area, so a filter lobe that hangs past the border behaves
    /// as if the border pixels extended outward at the sampled region's mean
    /// value. A rect entirely outside the image collapses onto the nearest
    /// border pixels instead of reading zero; this keeps opposing filter
    /// lobes balanced at corners, so constant images produce exactly zero
    /// filter response everywhere. Degenerate extents still sum to zero.
    pub fn box_sum_area_scaled(&self, r: Rect) -> f64 {
        if r.w <= 0 || r.h <= 0 {
            return 0.0;
        }
        let last_x = self.sums.width() as i64 - 1;
        let last_y = self.sums.height() as i64 - 1;
        let x0 = (r.x as i64).clamp(0, last_x);
        let y0 = (r.y as i64).clamp(0, last_y);
        let x1 = (r.x as i64 + r.w as i64 - 1).clamp(x0, last_x);
        let y1 = (r.y as i64 + r.h as i64 - 1).clamp(y0, last_y);
        let sampled = self.at(x1, y1) - self.at(x0 - 1, y1) - self.at(x1, y0 - 1)
            + self.at(x0 - 1, y0 - 1);
        let sampled_area = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
        let nominal_area = (r.w as f64) * (r.h as f64);
        sampled * nominal_area / sampled_area
    }
}
