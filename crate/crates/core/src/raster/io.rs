//! Input adapter: PNG/PGM decoding and PNG encoding of panels.
//!
//! Colour sources are reduced to luminance; transparent pixels are composited
//! onto white so that an empty alpha channel never reads as ink.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GenericImageView, ImageFormat, Luma};

use super::{binarize, BinaryImage, GrayRaster, RasterError};

pub fn decode_gray(bytes: &[u8]) -> Result<GrayRaster, RasterError> {
    let img = image::load_from_memory(bytes).map_err(|e| RasterError::Decode(e.to_string()))?;
    Ok(to_gray(&img))
}

pub fn read_gray(path: &Path) -> Result<GrayRaster, RasterError> {
    let bytes = std::fs::read(path)
        .map_err(|e| RasterError::Decode(format!("{}: {e}", path.display())))?;
    decode_gray(&bytes).map_err(|e| match e {
        RasterError::Decode(msg) => RasterError::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads and binarizes a panel file.
pub fn load_panel(path: &Path, threshold: u8) -> Result<BinaryImage, RasterError> {
    binarize(&read_gray(path)?, threshold)
}

fn to_gray(img: &DynamicImage) -> GrayRaster {
    let (w, h) = img.dimensions();
    let pixels = if img.color().has_alpha() {
        let rgba = img.to_rgba8();
        rgba.pixels()
            .map(|p| {
                let [r, g, b, a] = p.0;
                let lum = 0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64;
                let alpha = a as f64 / 255.0;
                (lum * alpha + 255.0 * (1.0 - alpha)).round().clamp(0.0, 255.0) as u8
            })
            .collect()
    } else {
        img.to_luma8().into_raw()
    };
    GrayRaster::new(w as usize, h as usize, pixels).expect("decoder yields w*h pixels")
}

/// Black ink on white, 8-bit grayscale PNG.
pub fn encode_png(img: &BinaryImage) -> Vec<u8> {
    let gray = img.to_gray();
    let buf = image::ImageBuffer::<Luma<u8>, _>::from_raw(
        gray.width() as u32,
        gray.height() as u32,
        gray.pixels().to_vec(),
    )
    .expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

pub fn write_png(img: &BinaryImage, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, encode_png(img))
}
