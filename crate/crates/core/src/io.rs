//! Image file I/O: PNG plus binary PPM (P6) and PGM (P5).
//!
//! The format is chosen by file extension. All formats are 8 bits per
//! channel with maxval 255; loading anything else is an error rather
//! than a silent requantization. PGM files load as gray replicated
//! across the three channels; saving to PGM stores the rounded luma.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::raster::{to_grayscale, ImageError, RgbImage};

/// Loads an 8-bit image. Supported extensions: `png`, `ppm`, `pgm`.
pub fn load_image(path: &Path) -> Result<RgbImage, ImageError> {
    match extension_of(path)? {
        Format::Png => load_png(path),
        Format::Ppm => load_pnm(path, PnmKind::Ppm),
        Format::Pgm => load_pnm(path, PnmKind::Pgm),
    }
}

/// Saves an 8-bit image; the extension picks the encoder.
pub fn save_image(img: &RgbImage, path: &Path) -> Result<(), ImageError> {
    if img.is_empty() {
        return Err(ImageError::DimensionMismatch(
            "cannot save a zero-extent image".to_string(),
        ));
    }
    match extension_of(path)? {
        Format::Png => save_png(img, path),
        Format::Ppm => save_ppm(img, path),
        Format::Pgm => save_pgm(img, path),
    }
}

enum Format {
    Png,
    Ppm,
    Pgm,
}

#[derive(PartialEq, Clone, Copy)]
enum PnmKind {
    Ppm,
    Pgm,
}

fn extension_of(path: &Path) -> Result<Format, ImageError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "png" => Ok(Format::Png),
        "ppm" => Ok(Format::Ppm),
        "pgm" => Ok(Format::Pgm),
        other => Err(ImageError::UnsupportedFormat(format!(
            "unrecognized image extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn load_png(path: &Path) -> Result<RgbImage, ImageError> {
    // Read the whole file first so filesystem problems surface as I/O
    // errors while any later decode failure, including a truncated
    // stream, means the file itself is bad.
    let bytes = fs::read(path)?;
    let dynamic = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::Unsupported(u) => ImageError::UnsupportedFormat(u.to_string()),
            other => ImageError::CorruptFile(other.to_string()),
        })?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(ImageError::CorruptFile("zero-extent PNG".to_string()));
    }
    let data = rgb.pixels().map(|p| p.0).collect();
    RgbImage::from_vec(w, h, data)
}

fn save_png(img: &RgbImage, path: &Path) -> Result<(), ImageError> {
    let mut buf = image::RgbImage::new(img.width(), img.height());
    for (x, y, px) in buf.enumerate_pixels_mut() {
        px.0 = img.get(x, y);
    }
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => ImageError::Io(io),
        other => ImageError::UnsupportedFormat(other.to_string()),
    })
}

fn save_ppm(img: &RgbImage, path: &Path) -> Result<(), ImageError> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for &[r, g, b] in img.pixels() {
        out.extend_from_slice(&[r, g, b]);
    }
    fs::write(path, out)?;
    Ok(())
}

fn save_pgm(img: &RgbImage, path: &Path) -> Result<(), ImageError> {
    let gray = to_grayscale(img);
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(gray.pixels().len());
    for &v in gray.pixels() {
        out.push(v.round().clamp(0.0, 255.0) as u8);
    }
    fs::write(path, out)?;
    Ok(())
}

fn load_pnm(path: &Path, kind: PnmKind) -> Result<RgbImage, ImageError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;

    let magic = read_token(&bytes, &mut cursor)
        .ok_or_else(|| ImageError::CorruptFile("missing PNM magic".to_string()))?;
    let expected = match kind {
        PnmKind::Ppm => "P6",
        PnmKind::Pgm => "P5",
    };
    if magic != expected {
        return Err(ImageError::UnsupportedFormat(format!(
            "expected {expected} magic, found {magic:?}"
        )));
    }

    let mut header = [0u64; 3];
    for slot in header.iter_mut() {
        let tok = read_token(&bytes, &mut cursor)
            .ok_or_else(|| ImageError::CorruptFile("truncated PNM header".to_string()))?;
        *slot = tok
            .parse()
            .map_err(|_| ImageError::CorruptFile(format!("bad PNM header token {tok:?}")))?;
    }
    let [w, h, maxval] = header;
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!(
            "only maxval 255 is supported, found {maxval}"
        )));
    }
    if w == 0 || h == 0 || w > u32::MAX as u64 || h > u32::MAX as u64 {
        return Err(ImageError::CorruptFile(format!("bad PNM dimensions {w}x{h}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    cursor += 1;

    let channels = if kind == PnmKind::Ppm { 3 } else { 1 };
    let need = (w as usize) * (h as usize) * channels;
    let raster = bytes
        .get(cursor..cursor + need)
        .ok_or_else(|| ImageError::CorruptFile("truncated PNM raster".to_string()))?;

    let data: Vec<[u8; 3]> = match kind {
        PnmKind::Ppm => raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        PnmKind::Pgm => raster.iter().map(|&v| [v, v, v]).collect(),
    };
    RgbImage::from_vec(w as u32, h as u32, data)
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn read_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if *cursor > start {
        Some(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
    } else {
        None
    }
}
