/// True when some point lies strictly closer than `distance_threshold` to the
/// line through two other points of the set. Fewer than three points is
/// never collinear.
pub fn approx_collinear(points: &[(f64, f64)], distance_threshold: f64) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (x1, y1) = points[i];
            let (x2, y2) = points[j];
            // Line a·x + b·y + c = 0, normalised so |a·x + b·y + c| is the
            // perpendicular distance.
            let (a, b, c) = if (x2 - x1).abs() < 1e-6 {
                (1.0, 0.0, -x1)
            } else {
                let slope = (y2 - y1) / (x2 - x1);
                (slope, -1.0, y1 - slope * x1)
            };
            let norm = (a * a + b * b).sqrt();
            let (a, b, c) = (a / norm, b / norm, c / norm);
            for (k, &(x3, y3)) in points.iter().enumerate() {
                if k != i && k != j && (a * x3 + b * y3 + c).abs() < distance_threshold {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_diagonal_is_collinear() {
        assert!(approx_collinear(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], 2.0));
    }

    #[test]
    fn far_apex_is_not_collinear() {
        // Apex (5, 9) is 9 px from the base line y = 0; base points are
        // 9.43 px from the lines through the apex.
        assert!(!approx_collinear(&[(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)], 2.0));
    }

    #[test]
    fn two_points_are_never_collinear() {
        assert!(!approx_collinear(&[(0.0, 0.0), (1.0, 1.0)], 100.0));
        assert!(!approx_collinear(&[], 1.0));
    }

    #[test]
    fn vertical_lines_are_handled() {
        assert!(approx_collinear(&[(3.0, 0.0), (3.0, 10.0), (4.0, 5.0)], 1.5));
        assert!(!approx_collinear(&[(3.0, 0.0), (3.0, 10.0), (9.0, 5.0)], 1.5));
    }

    fn point_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-60i32..60, -60i32..60), 0..8)
            .prop_map(|v| v.into_iter().map(|(x, y)| (x as f64, y as f64)).collect())
    }

    proptest! {
        #[test]
        fn invariant_under_translation_and_rotation(
            pts in point_set(),
            thr in 0.3f64..8.0,
            dx in -40i32..40,
            dy in -40i32..40,
        ) {
            let base = approx_collinear(&pts, thr);
            let shifted: Vec<_> = pts.iter().map(|&(x, y)| (x + dx as f64, y + dy as f64)).collect();
            let rotated: Vec<_> = pts.iter().map(|&(x, y)| (-y, x)).collect();
            prop_assert_eq!(approx_collinear(&shifted, thr), base);
            prop_assert_eq!(approx_collinear(&rotated, thr), base);
        }
    }
}
