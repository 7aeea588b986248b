//! Polygon GIoU with analytic gradients.
//!
//! The combinatorial structure (hull membership, clip provenance, enclosing
//! hull) is frozen at the evaluation point; gradients are exact on that
//! smooth piece.

use crate::error::Result;
use crate::geometry::{
    clip_with_origins, convex_hull_indices, nearest_gt_corner_indices, signed_area, Line, Origin,
    Point2, PointSet, QuadBox,
};
use crate::scalar::Scalar;

use super::{Evaluation, Objective, PointGrad};

pub(crate) struct GiouGrad<T> {
    pub giou: T,
    pub grad_a: Vec<Point2<T>>,
    /// Gradient on `b`; the losses hold the GT fixed, so only tests read it.
    #[cfg_attr(not(test), allow(dead_code))]
    pub grad_b: Vec<Point2<T>>,
    pub pieces: Vec<i64>,
}

/// d(area)/d(vertex) for a closed polygon, accumulated with weight `w`.
fn area_grad<T: Scalar>(
    v: &[Point2<T>],
    w: T,
    out: &mut [Point2<T>],
    map: impl Fn(usize) -> usize,
) {
    let n = v.len();
    let half = T::lit(0.5) * w;
    for k in 0..n {
        let prev = v[(k + n - 1) % n];
        let next = v[(k + 1) % n];
        let g = Point2::new(next.y - prev.y, prev.x - next.x) * half;
        let slot = &mut out[map(k)];
        *slot = *slot + g;
    }
}

/// Backward pass of `X = p1 + t (p2 - p1)`, the intersection of line p1p2
/// with line p3p4. Returns the gradients on p1..p4 for upstream gradient `g`.
pub(crate) fn line_intersection_backward<T: Scalar>(
    p1: Point2<T>,
    p2: Point2<T>,
    p3: Point2<T>,
    p4: Point2<T>,
    g: Point2<T>,
) -> [Point2<T>; 4] {
    let d1 = p2 - p1;
    let d2 = p4 - p3;
    let w = p3 - p1;
    let den = d1.cross(d2);
    let num = w.cross(d2);
    let t = num / den;

    let s = g.dot(d1);
    let g_num = s / den;
    let g_den = -s * t / den;

    // d cross(u, v)/du = (v.y, -v.x), d cross(u, v)/dv = (-u.y, u.x)
    let g_d1 = g * t + Point2::new(d2.y, -d2.x) * g_den;
    let g_d2 = Point2::new(-w.y, w.x) * g_num + Point2::new(-d1.y, d1.x) * g_den;
    let g_w = Point2::new(d2.y, -d2.x) * g_num;

    [g - g_w - g_d1, g_d1, g_w - g_d2, g_d2]
}

/// GIoU of CCW convex vertex lists `a` and `b` with gradients on both.
pub(crate) fn giou_with_grad<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> GiouGrad<T> {
    let (na, nb) = (a.len(), b.len());
    let area_a = signed_area(a);
    let area_b = signed_area(b);

    let clip = clip_with_origins(a, b);
    let inter_pts: Vec<_> = clip.iter().map(|c| c.point).collect();
    let inter = signed_area(&inter_pts);
    let union = area_a + area_b - inter;

    let all: Vec<_> = a.iter().chain(b).copied().collect();
    let hull_idx = convex_hull_indices(&all).expect("union of valid polygons has a hull");
    let hull_pts: Vec<_> = hull_idx.iter().map(|&i| all[i]).collect();
    let enclosing = signed_area(&hull_pts);

    let giou = inter / union - T::one() + union / enclosing;

    let c_inter = T::one() / union;
    let c_union = -inter / (union * union) + T::one() / enclosing;
    let c_encl = -union / (enclosing * enclosing);

    let mut grad_a = vec![Point2::zero(); na];
    let mut grad_b = vec![Point2::zero(); nb];

    area_grad(a, c_union, &mut grad_a, |k| k);
    area_grad(b, c_union, &mut grad_b, |k| k);

    // enclosing hull: indices < na belong to a
    let mut g_all = vec![Point2::zero(); na + nb];
    area_grad(&hull_pts, c_encl, &mut g_all, |k| hull_idx[k]);

    if !clip.is_empty() {
        let mut g_clip = vec![Point2::zero(); clip.len()];
        area_grad(&inter_pts, c_inter - c_union, &mut g_clip, |k| k);
        let line = |l: Line| match l {
            Line::A(i) => ((i, (i + 1) % na), true),
            Line::B(i) => ((i, (i + 1) % nb), false),
        };
        let flat = |(i, is_a): (usize, bool)| if is_a { i } else { na + i };
        let pos = |k: usize| all[k];
        for (cv, &g) in clip.iter().zip(&g_clip) {
            match cv.origin {
                Origin::VertA(i) => g_all[i] = g_all[i] + g,
                Origin::VertB(j) => g_all[na + j] = g_all[na + j] + g,
                Origin::Cross(l1, l2) => {
                    let ((i1, i2), a1) = line(l1);
                    let ((i3, i4), a2) = line(l2);
                    let ids = [
                        flat((i1, a1)),
                        flat((i2, a1)),
                        flat((i3, a2)),
                        flat((i4, a2)),
                    ];
                    let gs = line_intersection_backward(
                        pos(ids[0]),
                        pos(ids[1]),
                        pos(ids[2]),
                        pos(ids[3]),
                        g,
                    );
                    for (id, gk) in ids.into_iter().zip(gs) {
                        g_all[id] = g_all[id] + gk;
                    }
                }
            }
        }
    }

    for (k, g) in g_all.into_iter().enumerate() {
        if k < na {
            grad_a[k] = grad_a[k] + g;
        } else {
            grad_b[k - na] = grad_b[k - na] + g;
        }
    }

    let mut pieces = Vec::with_capacity(2 * clip.len() + hull_idx.len() + 2);
    pieces.push(clip.len() as i64);
    for c in &clip {
        let enc = |l: Line| match l {
            Line::A(i) => i as i64,
            Line::B(i) => 1000 + i as i64,
        };
        match c.origin {
            Origin::VertA(i) => pieces.extend([1, i as i64, 0]),
            Origin::VertB(i) => pieces.extend([2, i as i64, 0]),
            Origin::Cross(l1, l2) => pieces.extend([3, enc(l1), enc(l2)]),
        }
    }
    pieces.push(-1);
    pieces.extend(hull_idx.iter().map(|&i| i as i64));

    GiouGrad {
        giou,
        grad_a,
        grad_b,
        pieces,
    }
}

/// Loss value, per-point gradient and a signature of the smooth piece.
pub(crate) fn giou_loss_on_subset<T: Scalar>(
    points: &[Point2<T>],
    subset: &[usize],
    gt: &QuadBox<T>,
) -> Result<(T, PointGrad<T>, Vec<i64>)> {
    let sub: Vec<_> = subset.iter().map(|&i| points[i]).collect();
    let hull = convex_hull_indices(&sub)?;
    let a: Vec<_> = hull.iter().map(|&k| sub[k]).collect();
    let gt_poly = gt.to_polygon();
    let r = giou_with_grad(&a, gt_poly.vertices());
    let mut grad = vec![Point2::zero(); points.len()];
    for (k, &h) in hull.iter().enumerate() {
        let i = subset[h];
        grad[i] = grad[i] - r.grad_a[k];
    }
    let mut pieces: Vec<i64> = subset.iter().map(|&i| i as i64).collect();
    pieces.push(-2);
    pieces.extend(hull.iter().map(|&h| subset[h] as i64));
    pieces.push(-3);
    pieces.extend(r.pieces);
    Ok((T::one() - r.giou, PointGrad(grad), pieces))
}

/// `1 - GIoU(ConvexHull(points), gt)` and its gradient. Points that are not
/// hull vertices get exactly zero gradient.
pub fn giou_loss_convexhull<T: Scalar>(
    set: &PointSet<T>,
    gt: &QuadBox<T>,
) -> Result<(T, PointGrad<T>)> {
    let all: Vec<usize> = (0..set.len()).collect();
    let (loss, grad, _) = giou_loss_on_subset(set.points(), &all, gt)?;
    Ok((loss, grad))
}

/// `1 - GIoU(NearestGTCorner(points), gt)` with the corner selection frozen.
/// Only the four selected points receive gradient.
pub fn giou_loss_nearestcorner<T: Scalar>(
    set: &PointSet<T>,
    gt: &QuadBox<T>,
) -> Result<(T, PointGrad<T>)> {
    let idx = nearest_gt_corner_indices(set, gt)?;
    let (loss, grad, _) = giou_loss_on_subset(set.points(), &idx, gt)?;
    Ok((loss, grad))
}

fn to_points<T: Scalar>(params: &[T]) -> Result<PointSet<T>> {
    PointSet::new(
        params
            .chunks_exact(2)
            .map(|c| Point2::new(c[0], c[1]))
            .collect(),
    )
}

/// [`giou_loss_convexhull`] over flattened `[x0, y0, x1, y1, ...]` parameters.
#[derive(Clone, Debug)]
pub struct ConvexHullGiouLoss<T> {
    pub gt: QuadBox<T>,
}

impl<T: Scalar> Objective<T> for ConvexHullGiouLoss<T> {
    fn evaluate(&self, params: &[T]) -> Result<Evaluation<T>> {
        let set = to_points(params)?;
        let all: Vec<usize> = (0..set.len()).collect();
        let (value, grad, pieces) = giou_loss_on_subset(set.points(), &all, &self.gt)?;
        Ok(Evaluation {
            value,
            grad: grad.flatten(),
            pieces,
        })
    }
}

/// [`giou_loss_nearestcorner`] over flattened parameters.
#[derive(Clone, Debug)]
pub struct NearestCornerGiouLoss<T> {
    pub gt: QuadBox<T>,
}

impl<T: Scalar> Objective<T> for NearestCornerGiouLoss<T> {
    fn evaluate(&self, params: &[T]) -> Result<Evaluation<T>> {
        let set = to_points(params)?;
        let idx = nearest_gt_corner_indices(&set, &self.gt)?;
        let (value, grad, pieces) = giou_loss_on_subset(set.points(), &idx, &self.gt)?;
        Ok(Evaluation {
            value,
            grad: grad.flatten(),
            pieces,
        })
    }
}
