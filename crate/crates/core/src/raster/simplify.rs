use super::Point;

fn line_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return ((p.x - a.x) as f64).hypot((p.y - a.y) as f64);
    }
    (dx * (a.y - p.y) as f64 - dy * (a.x - p.x) as f64).abs() / len
}

/// Douglas–Peucker on an open chain; returns kept indices (both ends included).
fn douglas_peucker(chain: &[Point], tolerance: f64, out: &mut Vec<usize>, offset: usize) {
    let last = chain.len() - 1;
    let (mut far, mut far_d) = (0, -1.0);
    for (i, &p) in chain.iter().enumerate().take(last).skip(1) {
        let d = line_distance(p, chain[0], chain[last]);
        if d > far_d {
            far = i;
            far_d = d;
        }
    }
    if far_d > tolerance {
        douglas_peucker(&chain[..=far], tolerance, out, offset);
        out.pop();
        douglas_peucker(&chain[far..], tolerance, out, offset + far);
    } else {
        out.push(offset);
        out.push(offset + last);
    }
}

/// Simplifies a closed boundary to the vertices that deviate more than
/// `tolerance` pixels from the straight runs between their neighbours.
///
/// The ring is split at the point farthest from the first point, each half is
/// simplified with Douglas–Peucker, and a final cyclic pass drops vertices
/// that only exist because the ring had to start somewhere.
pub fn simplify_closed(points: &[Point], tolerance: f64) -> Vec<Point> {
    let mut ring: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if ring.last() != Some(&p) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() <= 2 {
        return ring;
    }
    let start = ring[0];
    let split = (1..ring.len())
        .max_by(|&i, &j| {
            let di = ((ring[i].x - start.x) as f64).hypot((ring[i].y - start.y) as f64);
            let dj = ((ring[j].x - start.x) as f64).hypot((ring[j].y - start.y) as f64);
            di.total_cmp(&dj).then(j.cmp(&i))
        })
        .expect("ring has at least three points");

    let mut closed = ring.clone();
    closed.push(start);
    let mut keep = Vec::new();
    douglas_peucker(&closed[..=split], tolerance, &mut keep, 0);
    keep.pop();
    douglas_peucker(&closed[split..], tolerance, &mut keep, split);
    keep.pop(); // the closing copy of the start point
    let mut verts: Vec<Point> = keep.into_iter().map(|i| closed[i]).collect();

    loop {
        let n = verts.len();
        if n <= 3 {
            break;
        }
        let weakest = (0..n)
            .map(|i| (i, line_distance(verts[i], verts[(i + n - 1) % n], verts[(i + 1) % n])))
            .filter(|&(_, d)| d <= tolerance)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match weakest {
            Some((i, _)) => {
                verts.remove(i);
            }
            None => break,
        }
    }
    verts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::draw::Canvas;
    use crate::raster::{find_components, trace_contour, Connectivity};

    fn corners_of(canvas: Canvas, tol: f64) -> usize {
        let comps = find_components(canvas.image(), Connectivity::Eight);
        assert_eq!(comps.len(), 1);
        simplify_closed(trace_contour(&comps[0]).points(), tol).len()
    }

    #[test]
    fn rectangle_has_four_corners() {
        let mut c = Canvas::new(64, 64);
        c.fill_rect(10, 12, 30, 20);
        assert_eq!(corners_of(c, 2.0), 4);
    }

    #[test]
    fn triangle_has_three_corners() {
        let mut c = Canvas::new(80, 80);
        c.fill_triangle((40, 5), (5, 70), (75, 60));
        assert_eq!(corners_of(c, 2.5), 3);
    }

    #[test]
    fn disk_has_many_corners_at_fine_tolerance() {
        let mut c = Canvas::new(80, 80);
        c.fill_disk(40, 40, 30);
        assert!(corners_of(c, 1.0) >= 8);
    }

    #[test]
    fn tiny_inputs() {
        assert_eq!(simplify_closed(&[Point { x: 1, y: 1 }], 1.0).len(), 1);
    }
}
