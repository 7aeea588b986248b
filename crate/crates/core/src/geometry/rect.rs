use super::{convex_hull, PointSet, RotatedRect};
use crate::error::Result;
use crate::scalar::Scalar;

/// Reduces an angle in degrees into `[-90, 90)`, or into `[-45, 45)` when the
/// rectangle is square and the width edge is ambiguous.
pub fn canonical_angle<T: Scalar>(deg: T, square: bool) -> T {
    let period = if square { T::lit(90.0) } else { T::lit(180.0) };
    let half = period * T::lit(0.5);
    let mut a = (deg + half) % period;
    if a < T::zero() {
        a += period;
    }
    // % can round up to exactly `period` for tiny negative inputs
    if a >= period {
        a -= period;
    }
    a - half
}

/// Minimum-area enclosing rectangle by rotating calipers over the hull.
///
/// One side of the result is collinear with a hull edge. Areas within a
/// relative [`Scalar::geom_tol`] of each other count as tied; ties go to the
/// narrower rectangle, then to the first edge in hull order. Ties are common
/// when one diagonal pair of hull points supports both sides, and breaking
/// them by shape keeps the result stable under rigid motions.
pub fn min_area_rect<T: Scalar>(set: &PointSet<T>) -> Result<RotatedRect<T>> {
    let hull = convex_hull(set)?;
    let h = hull.vertices();
    let n = h.len();
    let next = |i: usize| (i + 1) % n;

    let mut best: Option<(T, RotatedRect<T>)> = None;
    // calipers: index of the extreme vertex along +u, along +normal, along -u
    let (mut i_max_u, mut i_max_n, mut i_min_u) = (0usize, 0usize, 0usize);
    for e in 0..n {
        let origin = h[e];
        let d = h[next(e)] - origin;
        let u = d * (T::one() / d.norm());
        let nrm = u.perp();
        let pu = |k: usize| (h[k] - origin).dot(u);
        let pn = |k: usize| (h[k] - origin).dot(nrm);

        if e == 0 {
            for k in 0..n {
                if pu(k) > pu(i_max_u) {
                    i_max_u = k;
                }
                if pn(k) > pn(i_max_n) {
                    i_max_n = k;
                }
                if pu(k) < pu(i_min_u) {
                    i_min_u = k;
                }
            }
        } else {
            // each caliper only ever advances CCW
            for _ in 0..n {
                if pu(next(i_max_u)) >= pu(i_max_u) && next(i_max_u) != e {
                    i_max_u = next(i_max_u);
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if pn(next(i_max_n)) >= pn(i_max_n) && next(i_max_n) != e {
                    i_max_n = next(i_max_n);
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if pu(next(i_min_u)) <= pu(i_min_u) && next(i_min_u) != next(e) {
                    i_min_u = next(i_min_u);
                } else {
                    break;
                }
            }
        }

        let (u_lo, u_hi, n_hi) = (pu(i_min_u), pu(i_max_u), pn(i_max_n));
        let width = u_hi - u_lo;
        let height = n_hi;
        let area = width * height;
        let wins = best.as_ref().is_none_or(|(a, r)| {
            let band = T::geom_tol() * *a;
            area < *a - band || (area <= *a + band && width.max(height) < r.width - T::geom_tol())
        });
        if wins {
            let half = T::lit(0.5);
            let center = origin + u * ((u_lo + u_hi) * half) + nrm * (n_hi * half);
            let angle = u.y.atan2(u.x).to_degrees();
            best = Some((area, RotatedRect::new(center, width, height, angle)));
        }
    }
    Ok(best.expect("hull has at least 3 edges").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn set(v: &[(f64, f64)]) -> PointSet<f64> {
        PointSet::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn unit_square() {
        let r = min_area_rect(&set(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])).unwrap();
        assert!((r.center.x - 0.5).abs() < 1e-12 && (r.center.y - 0.5).abs() < 1e-12);
        assert!((r.width - 1.0).abs() < 1e-12 && (r.height - 1.0).abs() < 1e-12);
        assert!(r.angle.abs() < 1e-12);
    }

    #[test]
    fn rotated_square_keeps_center_and_size() {
        let c = Point2::new(0.5, 0.5);
        let pts: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| c + (Point2::new(x, y) - c).rotate(45f64.to_radians()))
            .collect();
        let r = min_area_rect(&PointSet::new(pts).unwrap()).unwrap();
        assert!(r.center.dist(c) < 1e-12);
        assert!((r.width - 1.0).abs() < 1e-12 && (r.height - 1.0).abs() < 1e-12);
        // square: angle reduced into [-45, 45)
        assert!((r.angle + 45.0).abs() < 1e-9, "angle {}", r.angle);
    }

    #[test]
    fn elongated_rect_angle() {
        let c = Point2::new(3.0, -2.0);
        let pts: Vec<_> = [
            (-2.0, -0.5),
            (2.0, -0.5),
            (2.0, 0.5),
            (-2.0, 0.5),
            (0.3, 0.1),
        ]
        .iter()
        .map(|&(x, y)| c + Point2::new(x, y).rotate(100f64.to_radians()))
        .collect();
        let r = min_area_rect(&PointSet::new(pts).unwrap()).unwrap();
        assert!((r.width - 4.0).abs() < 1e-9 && (r.height - 1.0).abs() < 1e-9);
        assert!((r.angle + 80.0).abs() < 1e-9, "angle {}", r.angle);
    }

    #[test]
    fn canonical_angle_ranges() {
        assert_eq!(canonical_angle(90.0, false), -90.0);
        assert_eq!(canonical_angle(-90.0, false), -90.0);
        assert_eq!(canonical_angle(179.0, false), -1.0);
        assert_eq!(canonical_angle(45.0, true), -45.0);
        assert_eq!(canonical_angle(50.0, true), -40.0);
        let a = canonical_angle(-1e-18, false);
        assert!((-90.0..90.0).contains(&a));
    }
}
