use super::{orient, ConvexPolygon, Point2, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Convex hull by Jarvis march (gift wrapping).
pub fn convex_hull<T: Scalar>(set: &PointSet<T>) -> Result<ConvexPolygon<T>> {
    let pts = set.points();
    let idx = convex_hull_indices(pts)?;
    Ok(ConvexPolygon::from_raw(
        idx.iter().map(|&i| pts[i]).collect(),
    ))
}

/// Indices of the hull vertices in CCW order, starting from the lowest-x
/// (then lowest-y) point.
///
/// Duplicates (within tolerance) are collapsed onto their lowest index before
/// the march. Among collinear candidates the farthest one is taken, so hull
/// vertices are strictly convex.
pub fn convex_hull_indices<T: Scalar>(pts: &[Point2<T>]) -> Result<Vec<usize>> {
    let tol = T::geom_tol();
    let mut uniq: Vec<usize> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::DegenerateInput(format!("point {i} is not finite")));
        }
        if !uniq.iter().any(|&j| pts[j].dist(*p) <= tol) {
            uniq.push(i);
        }
    }
    if uniq.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need 3 distinct points, got {}",
            uniq.len()
        )));
    }

    let start = *uniq
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (pts[a], pts[b]);
            pa.x.partial_cmp(&pb.x)
                .unwrap()
                .then(pa.y.partial_cmp(&pb.y).unwrap())
        })
        .unwrap();

    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut cand = if uniq[0] == cur { uniq[1] } else { uniq[0] };
        for &r in &uniq {
            if r == cur || r == cand {
                continue;
            }
            let (p, q, s) = (pts[cur], pts[cand], pts[r]);
            let o = orient(p, q, s) / p.dist(q);
            if o < -tol || (o.abs() <= tol && p.dist(s) > p.dist(q)) {
                cand = r;
            }
        }
        if cand == start {
            break;
        }
        if hull.len() > uniq.len() {
            return Err(Error::DegenerateInput("hull march did not close".into()));
        }
        hull.push(cand);
        cur = cand;
    }

    if hull.len() < 3 {
        return Err(Error::DegenerateInput("all points are collinear".into()));
    }
    let area = super::signed_area(&hull.iter().map(|&i| pts[i]).collect::<Vec<_>>());
    if area <= tol {
        return Err(Error::DegenerateInput("hull has zero area".into()));
    }
    Ok(hull)
}
