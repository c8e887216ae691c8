use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::components::external_components;
use super::contour::{trace_contour, Contour};
use super::{BinaryImage, Point, RasterError};

/// Scalar shape measures available on a closed contour.
///
/// * `area`: pixels on or inside the boundary.
/// * `perimeter`: chain-code length (1 per axis step, √2 per diagonal step).
/// * `circularity`: 4π·A/P² where A is the area of the boundary polygon through
///   pixel centres. Using the polygon (rather than the pixel count) keeps the
///   value at or below 1 for every contour.
/// * `elongation`: major/minor axis ratio, the square root of the eigenvalue
///   ratio of the filled region's second central moments. Each pixel counts as
///   a unit square (variance 1/12 added per axis), so a w×h rectangle gives
///   max(w, h)/min(w, h).
/// * `hull_area`, `convexity`: convex-hull polygon area and polygon/hull ratio.
/// * `centroid_x`, `centroid_y`: first moments of the filled region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Area,
    Perimeter,
    Circularity,
    Elongation,
    CentroidX,
    CentroidY,
    HullArea,
    Convexity,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Area,
        Metric::Perimeter,
        Metric::Circularity,
        Metric::Elongation,
        Metric::CentroidX,
        Metric::CentroidY,
        Metric::HullArea,
        Metric::Convexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Area => "area",
            Metric::Perimeter => "perimeter",
            Metric::Circularity => "circularity",
            Metric::Elongation => "elongation",
            Metric::CentroidX => "centroid_x",
            Metric::CentroidY => "centroid_y",
            Metric::HullArea => "hull_area",
            Metric::Convexity => "convexity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
            format!("unknown metric `{s}`; expected one of {}", names.join(", "))
        })
    }
}

/// Precomputed moments and polygon quantities for one closed contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGeometry {
    pixel_area: f64,
    perimeter: f64,
    polygon_area: f64,
    hull_area: f64,
    centroid: (f64, f64),
    /// Central second moments (mu20, mu02, mu11) per pixel.
    covariance: (f64, f64, f64),
}

impl ContourGeometry {
    pub fn new(contour: &Contour) -> Result<Self, RasterError> {
        if !contour.is_closed() {
            return Err(RasterError::DegenerateGeometry(
                "area-like measures need a closed contour".into(),
            ));
        }
        let filled = contour.filled_pixels();
        let n = filled.len() as f64;
        let (sx, sy) = filled
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x as f64, sy + p.y as f64));
        let (cx, cy) = (sx / n, sy / n);
        let (mut m20, mut m02, mut m11) = (0.0, 0.0, 0.0);
        for p in &filled {
            let (dx, dy) = (p.x as f64 - cx, p.y as f64 - cy);
            m20 += dx * dx;
            m02 += dy * dy;
            m11 += dx * dy;
        }
        Ok(Self {
            pixel_area: n,
            perimeter: contour.perimeter(),
            polygon_area: contour.signed_area2().unsigned_abs() as f64 / 2.0,
            hull_area: polygon_area(&convex_hull(contour.points())),
            centroid: (cx, cy),
            covariance: (m20 / n, m02 / n, m11 / n),
        })
    }

    pub fn get(&self, metric: Metric) -> Result<f64, RasterError> {
        Ok(match metric {
            Metric::Area => self.pixel_area,
            Metric::Perimeter => self.perimeter,
            Metric::Circularity => {
                if self.perimeter == 0.0 {
                    return Err(RasterError::DegenerateGeometry(
                        "circularity of a zero-length boundary".into(),
                    ));
                }
                4.0 * PI * self.polygon_area / (self.perimeter * self.perimeter)
            }
            Metric::Elongation => {
                let (a, b, c) = self.covariance;
                let (a, b) = (a + 1.0 / 12.0, b + 1.0 / 12.0);
                let mid = (a + b) / 2.0;
                let spread = (((a - b) / 2.0).powi(2) + c * c).sqrt();
                ((mid + spread) / (mid - spread)).sqrt()
            }
            Metric::CentroidX => self.centroid.0,
            Metric::CentroidY => self.centroid.1,
            Metric::HullArea => self.hull_area,
            Metric::Convexity => {
                if self.hull_area == 0.0 {
                    return Err(RasterError::DegenerateGeometry(
                        "convexity of a shape with empty hull".into(),
                    ));
                }
                self.polygon_area / self.hull_area
            }
        })
    }
}

pub fn measure(contour: &Contour, metric: Metric) -> Result<f64, RasterError> {
    ContourGeometry::new(contour)?.get(metric)
}

/// Monotone-chain convex hull, counter-clockwise in math orientation.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: i64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice.unsigned_abs() as f64 / 2.0
}

/// Total stroke length of the panel normalised by its diagonal: half the open
/// boundary length of every outer contour, summed.
pub fn total_ink_length(img: &BinaryImage) -> f64 {
    let total: f64 = external_components(img)
        .iter()
        .map(|c| trace_contour(c).open_length() / 2.0)
        .sum();
    total / img.diagonal()
}
