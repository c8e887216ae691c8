//! Pixel-level oracles and seeded shape painters for geometry checks.

use std::collections::VecDeque;

use bpforge_core::raster::draw::Canvas;
use bpforge_core::raster::{external_components, trace_contour, BinaryImage, Contour};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const W: usize = 96;

/// Pixels that are ink or cannot reach the border through background.
pub fn filled_oracle(img: &BinaryImage) -> Vec<(usize, usize)> {
    let (w, h) = (img.width(), img.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for x in 0..w {
        for y in [0, h - 1] {
            queue.push_back((x, y));
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            queue.push_back((x, y));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        if img.get(x, y) || outside[y * w + x] {
            continue;
        }
        outside[y * w + x] = true;
        if x > 0 {
            queue.push_back((x - 1, y));
        }
        if x + 1 < w {
            queue.push_back((x + 1, y));
        }
        if y > 0 {
            queue.push_back((x, y - 1));
        }
        if y + 1 < h {
            queue.push_back((x, y + 1));
        }
    }
    (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| !outside[y * w + x]).collect()
}

pub fn single_shape(c: Canvas) -> (BinaryImage, Contour) {
    let img = c.into_image();
    let comps = external_components(&img);
    assert_eq!(comps.len(), 1, "fixture must be one figure");
    let contour = trace_contour(&comps[0]);
    (img, contour)
}

pub type Painter = fn(&mut ChaCha8Rng, &mut Canvas);

fn rect(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let (w, h) = (rng.random_range(4..50), rng.random_range(4..50));
    c.fill_rect(rng.random_range(2..40), rng.random_range(2..40), w, h);
}

fn disk(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let r = rng.random_range(6..25);
    c.fill_disk(rng.random_range(r + 2..96 - r - 2), rng.random_range(r + 2..96 - r - 2), r);
}

fn triangle(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let mut p = || (rng.random_range(5..90), rng.random_range(5..90));
    let (a, b, d) = (p(), p(), p());
    c.fill_triangle(a, b, d);
    c.fill_disk(a.0, a.1, 3); // keeps thin slivers to one component
    c.line(a.0, a.1, b.0, b.1, 3);
    c.line(b.0, b.1, d.0, d.1, 3);
    c.line(d.0, d.1, a.0, a.1, 3);
}

fn ring(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let outer = rng.random_range(10..30);
    let inner = rng.random_range(3..outer - 3);
    c.ring(48, 48, outer, inner);
}

fn frame(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    c.outline_rect(rng.random_range(2..20), rng.random_range(2..20), rng.random_range(20..70), rng.random_range(20..70), rng.random_range(1..5));
}

pub const PAINTERS: [(&str, Painter); 5] =
    [("rectangle", rect), ("disk", disk), ("triangle", triangle), ("ring", ring), ("frame", frame)];

/// Exhaustive check over ordered triples using the cross-product distance.
pub fn collinear_oracle(points: &[(f64, f64)], threshold: f64) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let (a, b, c) = (points[i], points[j], points[k]);
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let dist = ((c.0 - a.0) * dy - (c.1 - a.1) * dx).abs() / (dx * dx + dy * dy).sqrt();
                if dist < threshold {
                    return true;
                }
            }
        }
    }
    false
}
