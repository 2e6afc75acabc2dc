//! Diagnostic overlays: keypoint circles sized by scale, and match
//! lines across a side-by-side pair. Plain integer raster drawing; the
//! overlays are aids for eyeballing a run, not measurement output.

use mosaic_core::features::Keypoint;
use mosaic_core::matching::Match;
use mosaic_core::raster::{Raster, RgbImage};

/// Bright-on-dark and dark-on-bright points get different colors so the
/// laplacian prefilter's effect is visible in the overlay.
const BRIGHT: [u8; 3] = [80, 220, 80];
const DARK: [u8; 3] = [230, 80, 80];

/// Line palette; consecutive matches cycle so crossing lines stay
/// distinguishable.
const LINES: [[u8; 3]; 5] = [
    [240, 200, 60],
    [90, 200, 240],
    [230, 110, 200],
    [120, 230, 160],
    [250, 140, 80],
];

fn plot(img: &mut RgbImage, x: i32, y: i32, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.set(x as u32, y as u32, color);
    }
}

/// Midpoint circle, clipped at the borders.
fn draw_circle(img: &mut RgbImage, cx: i32, cy: i32, radius: i32, color: [u8; 3]) {
    if radius < 1 {
        plot(img, cx, cy, color);
        return;
    }
    let (mut x, mut y) = (radius, 0i32);
    let mut err = 1 - radius;
    while x >= y {
        for (dx, dy) in
            [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)]
        {
            plot(img, cx + dx, cy + dy, color);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

fn draw_line(img: &mut RgbImage, x0: i32, y0: i32, x1: i32, y1: i32, color: [u8; 3]) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y) = (x0, y0);
    let mut err = dx + dy;
    loop {
        plot(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Copy of the image with one circle per keypoint, radius 2.5x scale,
/// plus a center dot.
pub fn draw_keypoints(img: &RgbImage, keypoints: &[Keypoint]) -> RgbImage {
    let mut out = img.clone();
    for kp in keypoints {
        let color = if kp.laplacian_sign >= 0 { DARK } else { BRIGHT };
        let (cx, cy) = (kp.x.round() as i32, kp.y.round() as i32);
        draw_circle(&mut out, cx, cy, (2.5 * kp.scale).round() as i32, color);
        plot(&mut out, cx, cy, color);
    }
    out
}

/// The two images side by side with a line per accepted match.
pub fn draw_matches(
    a: &RgbImage,
    b: &RgbImage,
    kp_a: &[Keypoint],
    kp_b: &[Keypoint],
    matches: &[Match],
) -> RgbImage {
    let gap = 8u32;
    let width = a.width() + gap + b.width();
    let height = a.height().max(b.height());
    let mut out = Raster::from_pixel(width, height, [24u8, 24, 24]);
    for y in 0..a.height() {
        for x in 0..a.width() {
            out.set(x, y, a.get(x, y));
        }
    }
    let bx0 = a.width() + gap;
    for y in 0..b.height() {
        for x in 0..b.width() {
            out.set(bx0 + x, y, b.get(x, y));
        }
    }
    for (i, m) in matches.iter().enumerate() {
        let (q, t) = (&kp_a[m.query_index], &kp_b[m.train_index]);
        let color = LINES[i % LINES.len()];
        let (x0, y0) = (q.x.round() as i32, q.y.round() as i32);
        let (x1, y1) = ((t.x.round() as i32) + bx0 as i32, t.y.round() as i32);
        draw_line(&mut out, x0, y0, x1, y1, color);
        draw_circle(&mut out, x0, y0, 2, color);
        draw_circle(&mut out, x1, y1, 2, color);
    }
    out
}
