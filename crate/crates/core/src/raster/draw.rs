//! Minimal ink drawing for synthetic panels and test fixtures.

use super::BinaryImage;

/// Ink canvas; every primitive clips to the panel.
#[derive(Debug, Clone)]
pub struct Canvas {
    img: BinaryImage,
}

impl Canvas {
    /// # Panics
    /// On a zero-sized canvas.
    pub fn new(width: usize, height: usize) -> Self {
        Self { img: BinaryImage::blank(width, height).expect("canvas must be nonempty") }
    }

    pub fn plot(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.img.width() && (y as usize) < self.img.height() {
            self.img.set(x as usize, y as usize, true);
        }
    }

    pub fn erase(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.img.width() && (y as usize) < self.img.height() {
            self.img.set(x as usize, y as usize, false);
        }
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.plot(xx, yy);
            }
        }
    }

    /// Hollow rectangle with the given stroke width.
    pub fn outline_rect(&mut self, x: i64, y: i64, w: i64, h: i64, stroke: i64) {
        self.fill_rect(x, y, w, stroke);
        self.fill_rect(x, y + h - stroke, w, stroke);
        self.fill_rect(x, y, stroke, h);
        self.fill_rect(x + w - stroke, y, stroke, h);
    }

    /// Pixels whose centre lies within `r` of `(cx, cy)`.
    pub fn fill_disk(&mut self, cx: i64, cy: i64, r: i64) {
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                    self.plot(x, y);
                }
            }
        }
    }

    /// Annulus between radii `inner` (exclusive) and `outer` (inclusive).
    pub fn ring(&mut self, cx: i64, cy: i64, outer: i64, inner: i64) {
        for y in cy - outer..=cy + outer {
            for x in cx - outer..=cx + outer {
                let d = (x - cx).pow(2) + (y - cy).pow(2);
                if d <= outer * outer && d > inner * inner {
                    self.plot(x, y);
                }
            }
        }
    }

    /// Bresenham segment stamped with a square brush of side `thickness`.
    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, thickness: i64) {
        let t = thickness.max(1);
        let off = (t - 1) / 2;
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.fill_rect(x - off, y - off, t, t);
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

    /// Filled triangle (pixel centres inside or on the edges).
    pub fn fill_triangle(&mut self, a: (i64, i64), b: (i64, i64), c: (i64, i64)) {
        let edge = |p: (i64, i64), q: (i64, i64), x: i64, y: i64| {
            (q.0 - p.0) * (y - p.1) - (q.1 - p.1) * (x - p.0)
        };
        let (x0, x1) = (a.0.min(b.0).min(c.0), a.0.max(b.0).max(c.0));
        let (y0, y1) = (a.1.min(b.1).min(c.1), a.1.max(b.1).max(c.1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (e0, e1, e2) = (edge(a, b, x, y), edge(b, c, x, y), edge(c, a, x, y));
                if (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0) {
                    self.plot(x, y);
                }
            }
        }
    }

    pub fn image(&self) -> &BinaryImage {
        &self.img
    }

    pub fn into_image(self) -> BinaryImage {
        self.img
    }
}
