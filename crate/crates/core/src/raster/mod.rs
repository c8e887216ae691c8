//! Binary-image geometry kernel.
//!
//! Everything the DSL can observe about a panel is computed here: connected
//! components, outer boundaries, moment-based measures, stroke length and
//! approximate collinearity. The kernel is format-free; decoding lives in
//! [`io`] and synthetic drawing in [`draw`].

mod collinear;
mod components;
mod contour;
pub mod draw;
pub mod io;
mod measure;
mod simplify;

use std::fmt;

use thiserror::Error;

pub use collinear::approx_collinear;
pub use components::{external_components, find_components, hole_count, Component, Connectivity};
pub use contour::{trace_contour, Contour};
pub use measure::{measure, total_ink_length, ContourGeometry, Metric};
pub use simplify::simplify_closed;

/// Ink threshold used by the reference programs: pixels darker than this are ink.
pub const DEFAULT_THRESHOLD: u8 = 127;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("cannot decode image: {0}")]
    Decode(String),
}

/// Integer pixel coordinate; `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn is_adjacent8(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// Axis-aligned bounding box in pixels, inclusive of its first row/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.x + self.w && p.y >= self.y && p.y < self.y + self.h
    }

    pub(crate) fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<BBox> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
        for p in it {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        Some(BBox { x: x0, y: y0, w: x1 - x0 + 1, h: y1 - y0 + 1 })
    }
}

/// 8-bit grayscale raster, row-major, 0 = black.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayRaster {
    /// Wraps a pixel buffer. Zero-sized rasters are representable so that
    /// [`binarize`] can reject them with a proper error.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if pixels.len() != width * height {
            return Err(RasterError::InvalidImage(format!(
                "buffer holds {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

impl fmt::Debug for GrayRaster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayRaster({}x{})", self.width, self.height)
    }
}

/// Binarized panel. `true` marks ink.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    /// A blank (all background) image.
    pub fn blank(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::from_bits(width, height, vec![false; width * height])
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidImage("image must be at least 1x1".into()));
        }
        if bits.len() != width * height {
            return Err(RasterError::InvalidImage(format!(
                "mask holds {} bits, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.bits[y * self.width + x] = ink;
    }

    /// Bounds-checked lookup; everything outside the image is background.
    pub fn ink_at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Renders ink as black (0) on white (255).
    pub fn to_gray(&self) -> GrayRaster {
        let pixels = self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect();
        GrayRaster { width: self.width, height: self.height, pixels }
    }
}

impl fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BinaryImage({}x{}, {} ink)",
            self.width,
            self.height,
            self.foreground_count()
        )
    }
}

/// Inverted threshold: a pixel is ink iff its intensity is below `threshold`.
pub fn binarize(gray: &GrayRaster, threshold: u8) -> Result<BinaryImage, RasterError> {
    if gray.width == 0 || gray.height == 0 {
        return Err(RasterError::InvalidImage("empty raster".into()));
    }
    let bits = gray.pixels.iter().map(|&v| v < threshold).collect();
    BinaryImage::from_bits(gray.width, gray.height, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> GrayRaster {
        let mut px = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                px.push(f(x, y));
            }
        }
        GrayRaster::new(w, h, px).unwrap()
    }

    #[test]
    fn white_panel_has_no_ink() {
        let img = binarize(&raster(32, 24, |_, _| 255), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(img.foreground_count(), 0);
    }

    #[test]
    fn black_panel_is_all_ink() {
        let img = binarize(&raster(32, 24, |_, _| 0), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(img.foreground_count(), 32 * 24);
    }

    #[test]
    fn checkerboard_is_half_ink() {
        let gray = raster(17, 9, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        let img = binarize(&gray, DEFAULT_THRESHOLD).unwrap();
        let mut oracle = 0;
        for (i, &v) in gray.pixels().iter().enumerate() {
            if v < 127 {
                oracle += 1;
            }
            assert_eq!(img.bits()[i], v < 127);
        }
        assert_eq!(img.foreground_count(), oracle);
        // 17*9 = 153 cells, the (0,0) colour wins the odd one.
        assert_eq!(oracle, 77);
    }

    #[test]
    fn threshold_is_strict() {
        let img = binarize(&raster(3, 1, |x, _| [126, 127, 128][x]), 127).unwrap();
        assert_eq!(img.bits(), &[true, false, false]);
    }

    #[test]
    fn empty_raster_is_rejected() {
        let gray = GrayRaster::new(0, 0, vec![]).unwrap();
        assert!(matches!(binarize(&gray, 127), Err(RasterError::InvalidImage(_))));
    }

    #[test]
    fn binarize_is_idempotent() {
        let gray = raster(20, 20, |x, y| ((x * 13 + y * 7) % 256) as u8);
        let once = binarize(&gray, 127).unwrap();
        let twice = binarize(&once.to_gray(), 127).unwrap();
        assert_eq!(once, twice);
    }
}
