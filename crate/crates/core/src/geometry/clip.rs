//! Convex polygon intersection (Sutherland–Hodgman) with vertex provenance.
//!
//! Every output vertex records how it was produced, so gradients can be
//! pushed back onto the input vertices.

use super::{orient, signed_area, ConvexPolygon, Point2};
use crate::scalar::Scalar;

/// A supporting line: edge `i -> i+1` of the first (`A`) or second (`B`)
/// polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Line {
    A(usize),
    B(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Origin {
    VertA(usize),
    VertB(usize),
    Cross(Line, Line),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ClipVertex<T> {
    pub point: Point2<T>,
    pub origin: Origin,
}

/// Intersection of convex polygons `a` and `b` (both CCW). Returns an empty
/// list when the overlap has zero measure.
pub(crate) fn clip_with_origins<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> Vec<ClipVertex<T>> {
    let tol = T::geom_tol();
    let mut cur: Vec<(ClipVertex<T>, Line)> = a
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            (
                ClipVertex {
                    point: p,
                    origin: Origin::VertA(i),
                },
                Line::A(i),
            )
        })
        .collect();

    let nb = b.len();
    for j in 0..nb {
        if cur.is_empty() {
            break;
        }
        let (c0, c1) = (b[j], b[(j + 1) % nb]);
        let len = c0.dist(c1);
        let dist = |p: Point2<T>| orient(c0, c1, p) / len;
        // B's own vertices on this clip line are exact; no need to recompute
        let vertex_of_b = |o: Origin| matches!(o, Origin::VertB(k) if k == j || k == (j + 1) % nb);

        let m = cur.len();
        let mut out = Vec::with_capacity(m + 2);
        for k in 0..m {
            let (p, edge) = cur[k];
            let (q, q_edge) = cur[(k + 1) % m];
            let dp = if vertex_of_b(p.origin) {
                T::zero()
            } else {
                dist(p.point)
            };
            let dq = if vertex_of_b(q.origin) {
                T::zero()
            } else {
                dist(q.point)
            };
            let (p_in, q_in) = (dp >= -tol, dq >= -tol);
            let crossing = || {
                let t = dp / (dp - dq);
                let point = p.point + (q.point - p.point) * t;
                let origin = match edge {
                    Line::B(e) if e == (j + nb - 1) % nb => Origin::VertB(j),
                    Line::B(e) if e == (j + 1) % nb => Origin::VertB((j + 1) % nb),
                    _ => Origin::Cross(edge, Line::B(j)),
                };
                let point = match origin {
                    Origin::VertB(v) => b[v],
                    _ => point,
                };
                ClipVertex { point, origin }
            };
            match (p_in, q_in) {
                (true, true) => out.push((q, q_edge)),
                (true, false) => out.push((crossing(), Line::B(j))),
                (false, true) => {
                    out.push((crossing(), edge));
                    out.push((q, q_edge));
                }
                (false, false) => {}
            }
        }
        cur = out;
    }

    let mut verts: Vec<ClipVertex<T>> = Vec::with_capacity(cur.len());
    for (v, _) in cur {
        if verts
            .last()
            .is_none_or(|l: &ClipVertex<T>| l.point.dist(v.point) > tol)
        {
            verts.push(v);
        }
    }
    while verts.len() > 1 && verts[0].point.dist(verts[verts.len() - 1].point) <= tol {
        verts.pop();
    }
    if verts.len() < 3 {
        return Vec::new();
    }
    let pts: Vec<_> = verts.iter().map(|v| v.point).collect();
    if signed_area(&pts) <= tol {
        return Vec::new();
    }
    verts
}

/// Exact intersection region, or `None` when the interiors are disjoint or
/// only touch.
pub fn convex_intersect<T: Scalar>(
    a: &ConvexPolygon<T>,
    b: &ConvexPolygon<T>,
) -> Option<ConvexPolygon<T>> {
    let verts = clip_with_origins(a.vertices(), b.vertices());
    if verts.is_empty() {
        return None;
    }
    ConvexPolygon::new(verts.into_iter().map(|v| v.point).collect()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon<f64> {
        ConvexPolygon::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn self_intersection_is_identity() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        let i = convex_intersect(&a, &a).unwrap();
        assert!((i.area() - 1.0).abs() < 1e-12);
        let v = clip_with_origins(a.vertices(), a.vertices());
        assert!(v.iter().all(|c| matches!(c.origin, Origin::VertA(_))));
    }

    #[test]
    fn disjoint_and_touching_are_empty() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        assert!(convex_intersect(&a, &rect(2.0, 0.0, 3.0, 1.0)).is_none());
        assert!(convex_intersect(&a, &rect(1.0, 0.0, 2.0, 1.0)).is_none());
        assert!(convex_intersect(&a, &rect(1.0, 1.0, 2.0, 2.0)).is_none());
    }

    #[test]
    fn shifted_square() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        let i = convex_intersect(&a, &rect(0.5, 0.0, 1.5, 1.0)).unwrap();
        assert!((i.area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn origins_reproduce_points() {
        let a = rect(0.0, 0.0, 2.0, 1.0);
        let b = ConvexPolygon::new(vec![
            Point2::new(1.0, -1.0),
            Point2::new(3.0, 0.5),
            Point2::new(1.0, 2.0),
        ])
        .unwrap();
        let v = clip_with_origins(a.vertices(), b.vertices());
        assert!(!v.is_empty());
        for c in &v {
            let line = |l: Line| match l {
                Line::A(i) => (a.vertices()[i], a.vertices()[(i + 1) % a.len()]),
                Line::B(i) => (b.vertices()[i], b.vertices()[(i + 1) % b.len()]),
            };
            let expect = match c.origin {
                Origin::VertA(i) => a.vertices()[i],
                Origin::VertB(i) => b.vertices()[i],
                Origin::Cross(l1, l2) => {
                    let ((p1, p2), (p3, p4)) = (line(l1), line(l2));
                    let t = (p3 - p1).cross(p4 - p3) / (p2 - p1).cross(p4 - p3);
                    p1 + (p2 - p1) * t
                }
            };
            assert!(expect.dist(c.point) < 1e-12, "{:?}", c.origin);
        }
    }
}
