use super::{Point2, QuadBox};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Samples `n` points along the quad boundary, `n / 4` per edge at equal
/// parameter steps, starting at each corner and following CCW corner order.
pub fn sample_contour_points<T: Scalar>(quad: &QuadBox<T>, n: usize) -> Result<Vec<Point2<T>>> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "contour sample count must be a positive multiple of 4, got {n}"
        )));
    }
    let per_edge = n / 4;
    let denom = T::from_usize(per_edge).expect("count fits scalar");
    let c = quad.corners();
    let mut out = Vec::with_capacity(n);
    for e in 0..4 {
        let (p, q) = (c[e], c[(e + 1) % 4]);
        for j in 0..per_edge {
            let t = T::from_usize(j).expect("index fits scalar") / denom;
            out.push(p + (q - p) * t);
        }
    }
    Ok(out)
}

/// Symmetric Chamfer distance: the mean nearest-neighbour distance from each
/// set to the other, averaged over both directions.
pub fn chamfer_distance<T: Scalar>(p: &[Point2<T>], q: &[Point2<T>]) -> Result<T> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::InvalidArgument(
            "chamfer distance of an empty set".into(),
        ));
    }
    let directed = |from: &[Point2<T>], to: &[Point2<T>]| -> T {
        from.iter()
            .map(|&a| to.iter().map(|&b| a.dist(b)).fold(T::infinity(), T::min))
            .sum::<T>()
            / T::from_usize(from.len()).expect("length fits scalar")
    };
    let half = T::lit(0.5);
    Ok(half * directed(p, q) + half * directed(q, p))
}
