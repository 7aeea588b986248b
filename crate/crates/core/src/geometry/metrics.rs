use super::{convex_hull_indices, convex_intersect, orient, ConvexPolygon, Point2};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shoelace area, positive for CCW vertex order.
pub fn signed_area<T: Scalar>(v: &[Point2<T>]) -> T {
    let n = v.len();
    if n < 3 {
        return T::zero();
    }
    let mut twice = T::zero();
    for i in 0..n {
        twice += v[i].cross(v[(i + 1) % n]);
    }
    twice * T::lit(0.5)
}

pub fn polygon_area<T: Scalar>(poly: &ConvexPolygon<T>) -> T {
    signed_area(poly.vertices())
}

/// Inside-or-on-boundary test against every CCW edge half-plane.
pub fn point_in_convex_polygon<T: Scalar>(p: Point2<T>, poly: &ConvexPolygon<T>) -> bool {
    let v = poly.vertices();
    let n = v.len();
    let tol = T::geom_tol();
    (0..n).all(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        orient(a, b, p) / a.dist(b) >= -tol
    })
}

fn checked_area<T: Scalar>(poly: &ConvexPolygon<T>, which: &str) -> Result<T> {
    let a = polygon_area(poly);
    if a <= T::geom_tol() {
        return Err(Error::InvalidGeometry(format!(
            "{which} polygon has area {a}"
        )));
    }
    Ok(a)
}

pub fn polygon_iou<T: Scalar>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> Result<T> {
    let area_a = checked_area(a, "first")?;
    let area_b = checked_area(b, "second")?;
    let inter = convex_intersect(a, b).map_or(T::zero(), |p| polygon_area(&p));
    let union = area_a + area_b - inter;
    Ok((inter / union).min(T::one()).max(T::zero()))
}

/// Area of the convex hull of both vertex sets.
pub(crate) fn enclosing_area<T: Scalar>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> T {
    let all: Vec<_> = a.vertices().iter().chain(b.vertices()).copied().collect();
    let idx = convex_hull_indices(&all).expect("union of two valid polygons has a valid hull");
    signed_area(&idx.iter().map(|&i| all[i]).collect::<Vec<_>>())
}

/// Generalized IoU with the convex hull of both polygons as the enclosing
/// region.
pub fn polygon_giou<T: Scalar>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> Result<T> {
    let area_a = checked_area(a, "first")?;
    let area_b = checked_area(b, "second")?;
    let inter = convex_intersect(a, b).map_or(T::zero(), |p| polygon_area(&p));
    let union = area_a + area_b - inter;
    let hull = enclosing_area(a, b).max(union);
    Ok(inter / union - (hull - union) / hull)
}
