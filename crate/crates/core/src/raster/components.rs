use std::collections::VecDeque;

use super::{BBox, BinaryImage, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i64, i64); 8] =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Maximal connected set of ink pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pixels: Vec<Point>,
    bbox: BBox,
}

impl Component {
    /// Builds a component from a pixel set. Pixels are sorted into raster
    /// order and deduplicated; returns `None` for an empty set.
    pub fn from_pixels(mut pixels: Vec<Point>) -> Option<Self> {
        pixels.sort_by_key(|p| (p.y, p.x));
        pixels.dedup();
        let bbox = BBox::of_points(&pixels)?;
        Some(Self { pixels, bbox })
    }

    /// Pixels in raster order (row, then column).
    pub fn pixels(&self) -> &[Point] {
        &self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Membership mask over the bbox padded by one pixel on every side.
    pub(crate) fn padded_mask(&self) -> LocalMask {
        let mut mask = LocalMask::new(self.bbox, 1);
        for &p in &self.pixels {
            mask.set(p, true);
        }
        mask
    }
}

/// Boolean grid anchored at an image position; used for per-component work.
pub(crate) struct LocalMask {
    pub origin: Point,
    pub width: i64,
    pub height: i64,
    cells: Vec<bool>,
}

impl LocalMask {
    pub fn new(bbox: BBox, pad: i64) -> Self {
        let width = bbox.w + 2 * pad;
        let height = bbox.h + 2 * pad;
        Self {
            origin: Point::new(bbox.x - pad, bbox.y - pad),
            width,
            height,
            cells: vec![false; (width * height) as usize],
        }
    }

    fn index(&self, p: Point) -> Option<usize> {
        let lx = p.x - self.origin.x;
        let ly = p.y - self.origin.y;
        (lx >= 0 && ly >= 0 && lx < self.width && ly < self.height)
            .then(|| (ly * self.width + lx) as usize)
    }

    pub fn get(&self, p: Point) -> bool {
        self.index(p).is_some_and(|i| self.cells[i])
    }

    pub fn set(&mut self, p: Point, v: bool) {
        if let Some(i) = self.index(p) {
            self.cells[i] = v;
        }
    }

    /// Labels the 4-connected background regions of the mask. Returns the
    /// label grid (0 for ink) and the number of regions. Region 1 always
    /// contains the mask border when the mask is padded.
    pub fn background_regions(&self) -> (Vec<u32>, u32) {
        let mut labels = vec![0u32; self.cells.len()];
        let mut next = 0;
        let w = self.width;
        let h = self.height;
        let mut queue = VecDeque::new();
        for start in 0..self.cells.len() {
            if self.cells[start] || labels[start] != 0 {
                continue;
            }
            next += 1;
            labels[start] = next;
            queue.push_back(start as i64);
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % w, i / w);
                for (dx, dy) in Connectivity::Four.offsets() {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if !self.cells[j] && labels[j] == 0 {
                        labels[j] = next;
                        queue.push_back(j as i64);
                    }
                }
            }
        }
        (labels, next)
    }

    /// Cells that are not reachable from the border through background,
    /// i.e. the ink plus every enclosed hole.
    pub fn filled(&self) -> Vec<Point> {
        let (labels, _) = self.background_regions();
        let mut out = Vec::new();
        for ly in 0..self.height {
            for lx in 0..self.width {
                if labels[(ly * self.width + lx) as usize] != 1 {
                    out.push(Point::new(self.origin.x + lx, self.origin.y + ly));
                }
            }
        }
        out
    }
}

/// Partitions the ink into maximal connected sets, ordered by the top-left
/// corner of their bounding boxes (then by first pixel in raster order).
pub fn find_components(img: &BinaryImage, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut seen = vec![false; img.bits().len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !img.bits()[idx] || seen[idx] {
                continue;
            }
            seen[idx] = true;
            queue.push_back(Point::new(x, y));
            let mut pixels = Vec::new();
            while let Some(p) = queue.pop_front() {
                pixels.push(p);
                for (dx, dy) in connectivity.offsets() {
                    let (nx, ny) = (p.x + dx, p.y + dy);
                    if img.ink_at(nx, ny) {
                        let j = (ny * w + nx) as usize;
                        if !seen[j] {
                            seen[j] = true;
                            queue.push_back(Point::new(nx, ny));
                        }
                    }
                }
            }
            out.extend(Component::from_pixels(pixels));
        }
    }
    // Discovery order already sorts by first pixel; the stable sort keeps it
    // as the tie-break.
    out.sort_by_key(|c| (c.bbox.y, c.bbox.x));
    out
}

/// 8-connected components that are not nested inside a hole of another
/// component (the outer-boundary-only view of the panel).
pub fn external_components(img: &BinaryImage) -> Vec<Component> {
    let comps = find_components(img, Connectivity::Eight);
    if comps.is_empty() {
        return comps;
    }
    let whole = BBox { x: 0, y: 0, w: img.width() as i64, h: img.height() as i64 };
    let mut mask = LocalMask::new(whole, 1);
    for y in 0..whole.h {
        for x in 0..whole.w {
            if img.ink_at(x, y) {
                mask.set(Point::new(x, y), true);
            }
        }
    }
    let (labels, _) = mask.background_regions();
    comps
        .into_iter()
        .filter(|c| {
            // The cell above the first raster-order pixel is background and
            // belongs to whichever region directly surrounds the component.
            let top = c.pixels[0];
            let lx = top.x - mask.origin.x;
            let ly = top.y - 1 - mask.origin.y;
            labels[(ly * mask.width + lx) as usize] == 1
        })
        .collect()
}

/// Number of background regions fully enclosed by the component itself.
pub fn hole_count(c: &Component) -> usize {
    let (_, regions) = c.padded_mask().background_regions();
    regions.saturating_sub(1) as usize
}

#[cfg(test)]
mod tests {
    use super::super::draw::Canvas;
    use super::*;

    fn flood_fill_count(img: &BinaryImage, conn: Connectivity) -> usize {
        // Independent recursive-stack flood fill.
        let (w, h) = (img.width(), img.height());
        let mut seen = vec![vec![false; w]; h];
        let mut count = 0;
        for sy in 0..h {
            for sx in 0..w {
                if !img.get(sx, sy) || seen[sy][sx] {
                    continue;
                }
                count += 1;
                let mut stack = vec![(sx as i64, sy as i64)];
                while let Some((x, y)) = stack.pop() {
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let (ux, uy) = (x as usize, y as usize);
                    if seen[uy][ux] || !img.get(ux, uy) {
                        continue;
                    }
                    seen[uy][ux] = true;
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let diag = dx != 0 && dy != 0;
                            if (dx, dy) == (0, 0) || (diag && conn == Connectivity::Four) {
                                continue;
                            }
                            stack.push((x + dx, y + dy));
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn two_squares_two_components() {
        let mut c = Canvas::new(20, 20);
        c.fill_rect(1, 1, 3, 3);
        c.fill_rect(10, 12, 3, 3);
        let comps = find_components(&c.into_image(), Connectivity::Eight);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.pixel_count() == 9));
        assert_eq!(comps[0].bbox(), BBox { x: 1, y: 1, w: 3, h: 3 });
    }

    #[test]
    fn empty_image_has_no_components() {
        let img = BinaryImage::blank(8, 8).unwrap();
        assert!(find_components(&img, Connectivity::Four).is_empty());
        assert!(external_components(&img).is_empty());
    }

    #[test]
    fn random_blobs_match_flood_fill() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut c = Canvas::new(200, 200);
        for _ in 0..50 {
            let x = rng.random_range(0..200);
            let y = rng.random_range(0..200);
            let r = rng.random_range(1..6);
            c.fill_disk(x, y, r);
        }
        let img = c.into_image();
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let comps = find_components(&img, conn);
            assert_eq!(comps.len(), flood_fill_count(&img, conn));
            let total: usize = comps.iter().map(Component::pixel_count).sum();
            assert_eq!(total, img.foreground_count());
        }
    }

    #[test]
    fn diagonal_touch_differs_by_connectivity() {
        let mut img = BinaryImage::blank(4, 4).unwrap();
        img.set(0, 0, true);
        img.set(1, 1, true);
        assert_eq!(find_components(&img, Connectivity::Four).len(), 2);
        assert_eq!(find_components(&img, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn nested_component_is_not_external() {
        let mut c = Canvas::new(60, 60);
        c.ring(30, 30, 20, 14);
        c.fill_disk(30, 30, 3);
        c.fill_rect(2, 2, 4, 4);
        let img = c.into_image();
        assert_eq!(find_components(&img, Connectivity::Eight).len(), 3);
        let ext = external_components(&img);
        assert_eq!(ext.len(), 2);
        assert!(ext.iter().all(|c| c.pixel_count() != 29));
    }

    #[test]
    fn blob_in_concavity_is_external() {
        let mut c = Canvas::new(40, 40);
        // U shape opening upwards with a dot inside the cup.
        c.fill_rect(5, 5, 3, 25);
        c.fill_rect(25, 5, 3, 25);
        c.fill_rect(5, 27, 23, 3);
        c.fill_rect(15, 15, 3, 3);
        assert_eq!(external_components(&c.into_image()).len(), 2);
    }

    #[test]
    fn holes_are_counted() {
        let mut c = Canvas::new(60, 30);
        c.ring(15, 15, 10, 5);
        c.fill_rect(35, 5, 20, 20);
        let img = c.into_image();
        let comps = find_components(&img, Connectivity::Eight);
        assert_eq!(comps.len(), 2);
        assert_eq!(hole_count(&comps[0]), 1);
        assert_eq!(hole_count(&comps[1]), 0);
    }
}
