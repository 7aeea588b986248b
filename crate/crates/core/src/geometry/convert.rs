use super::{signed_area, PointSet, QuadBox};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// For each GT corner, the index of the closest point (lowest index on ties),
/// ordered so the resulting quad is CCW.
pub fn nearest_gt_corner_indices<T: Scalar>(
    set: &PointSet<T>,
    gt: &QuadBox<T>,
) -> Result<[usize; 4]> {
    let pts = set.points();
    let mut idx = [0usize; 4];
    for (slot, &g) in idx.iter_mut().zip(gt.corners()) {
        let mut best = (T::infinity(), 0usize);
        for (i, &p) in pts.iter().enumerate() {
            let d = p.dist(g);
            if d < best.0 {
                best = (d, i);
            }
        }
        *slot = best.1;
    }
    let corners = idx.map(|i| pts[i]);
    QuadBox::new(corners)
        .map_err(|e| Error::DegenerateOutput(format!("nearest-corner quad: {e}")))?;
    if signed_area(&corners) < T::zero() {
        idx = [idx[0], idx[3], idx[2], idx[1]];
    }
    Ok(idx)
}

/// Quadrilateral built from the points nearest to each GT corner.
pub fn nearest_gt_corner<T: Scalar>(set: &PointSet<T>, gt: &QuadBox<T>) -> Result<QuadBox<T>> {
    let idx = nearest_gt_corner_indices(set, gt)?;
    QuadBox::new(idx.map(|i| set.points()[i]))
        .map_err(|e| Error::DegenerateOutput(format!("nearest-corner quad: {e}")))
}
