use super::components::{Component, LocalMask};
use super::{BBox, Point, RasterError};

/// Moore neighbourhood in screen counter-clockwise order (y grows down),
/// starting at west.
const RING: [(i64, i64); 8] =
    [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

fn ring_index(d: (i64, i64)) -> usize {
    RING.iter().position(|&r| r == d).expect("offset is a Moore neighbour")
}

/// Ordered boundary polyline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    points: Vec<Point>,
    closed: bool,
}

impl Contour {
    /// Builds a contour from ordered points. Consecutive points must be
    /// 8-adjacent, and for a closed contour the last point must be adjacent
    /// to the first (or the contour is a single pixel).
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Self, RasterError> {
        if points.is_empty() {
            return Err(RasterError::DegenerateGeometry("contour has no points".into()));
        }
        if let Some(w) = points.windows(2).find(|w| !w[0].is_adjacent8(w[1])) {
            return Err(RasterError::DegenerateGeometry(format!(
                "points ({}, {}) and ({}, {}) are not adjacent",
                w[0].x, w[0].y, w[1].x, w[1].y
            )));
        }
        if closed && points.len() > 1 && !points[points.len() - 1].is_adjacent8(points[0]) {
            return Err(RasterError::DegenerateGeometry(
                "closed contour does not return to its start".into(),
            ));
        }
        Ok(Self { points, closed })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.points).expect("contour is nonempty")
    }

    /// Chain-code length of the polyline without the closing step.
    pub fn open_length(&self) -> f64 {
        self.points.windows(2).map(|w| step_length(w[0], w[1])).sum()
    }

    /// Chain-code length including the closing step for closed contours.
    pub fn perimeter(&self) -> f64 {
        let mut len = self.open_length();
        if self.closed && self.points.len() > 1 {
            len += step_length(self.points[self.points.len() - 1], self.points[0]);
        }
        len
    }

    /// Twice the signed shoelace area; negative for screen counter-clockwise
    /// traversal.
    pub fn signed_area2(&self) -> i64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum()
    }

    /// Every pixel on or inside the boundary.
    pub fn filled_pixels(&self) -> Vec<Point> {
        let mut mask = LocalMask::new(self.bbox(), 1);
        for &p in &self.points {
            mask.set(p, true);
        }
        mask.filled()
    }
}

fn step_length(a: Point, b: Point) -> f64 {
    if a.x != b.x && a.y != b.y {
        std::f64::consts::SQRT_2
    } else {
        ((a.x - b.x).abs() + (a.y - b.y).abs()) as f64
    }
}

/// Outer boundary of a component by Moore-neighbour tracing, screen
/// counter-clockwise from the top-left pixel. Holes are ignored.
pub fn trace_contour(c: &Component) -> Contour {
    let mask = c.padded_mask();
    let start = c.pixels()[0];
    // West of the first raster-order pixel is always background.
    let start_back = (-1, 0);

    let next = |current: Point, back: (i64, i64)| -> Option<(Point, (i64, i64))> {
        let b = ring_index(back);
        for k in 1..=8 {
            let (dx, dy) = RING[(b + k) % 8];
            let cand = Point::new(current.x + dx, current.y + dy);
            if mask.get(cand) {
                let (px, py) = RING[(b + k - 1) % 8];
                let prev = Point::new(current.x + px, current.y + py);
                return Some((cand, (prev.x - cand.x, prev.y - cand.y)));
            }
        }
        None
    };

    let Some((second, second_back)) = next(start, start_back) else {
        return Contour { points: vec![start], closed: true };
    };
    let mut points = vec![start];
    let (mut current, mut back) = (second, second_back);
    loop {
        let (n, nb) = next(current, back).expect("traced pixel has a neighbour");
        if current == start && n == second {
            break;
        }
        points.push(current);
        current = n;
        back = nb;
    }
    Contour { points, closed: true }
}
