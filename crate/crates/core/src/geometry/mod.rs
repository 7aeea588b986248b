//! Exact 2-D geometry kernels.
//!
//! All polygons are counter-clockwise in a y-up frame. Every predicate uses
//! [`Scalar::geom_tol`] as its tolerance.

mod clip;
mod contour;
mod convert;
mod hull;
mod metrics;
mod rect;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use clip::convex_intersect;
pub(crate) use clip::{clip_with_origins, Line, Origin};
pub use contour::{chamfer_distance, sample_contour_points};
pub use convert::{nearest_gt_corner, nearest_gt_corner_indices};
pub use hull::{convex_hull, convex_hull_indices};
pub use metrics::{point_in_convex_polygon, polygon_area, polygon_giou, polygon_iou, signed_area};
pub use rect::{canonical_angle, min_area_rect};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Counter-clockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn centroid(points: &[Self]) -> Self {
        let n = T::from_usize(points.len()).expect("length fits scalar");
        let sum = points.iter().fold(Self::zero(), |acc, &p| acc + p);
        sum * (T::one() / n)
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Orientation of `c` relative to the directed line `a -> b`, as twice the
/// signed triangle area. Positive means `c` is to the left.
#[inline]
pub fn orient<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(c - a)
}

/// An ordered set of adaptive points representing one object hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2<T>>", into = "Vec<Point2<T>>")]
#[serde(bound(
    deserialize = "T: Scalar + Deserialize<'de>",
    serialize = "T: Scalar + Serialize"
))]
pub struct PointSet<T> {
    points: Vec<Point2<T>>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(points: Vec<Point2<T>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "point set needs at least 3 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("point {i} is not finite")));
        }
        Ok(Self { points })
    }

    #[inline]
    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_inner(self) -> Vec<Point2<T>> {
        self.points
    }
}

impl<T: Scalar> TryFrom<Vec<Point2<T>>> for PointSet<T> {
    type Error = Error;
    fn try_from(points: Vec<Point2<T>>) -> Result<Self> {
        Self::new(points)
    }
}

impl<T: Scalar> From<PointSet<T>> for Vec<Point2<T>> {
    fn from(set: PointSet<T>) -> Self {
        set.points
    }
}

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexPolygon<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Scalar> ConvexPolygon<T> {
    /// Validates and normalizes a CCW vertex list: near-coincident and
    /// collinear vertices are dropped, then strict convexity is checked.
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!("vertex {i} is not finite")));
        }
        let vertices = remove_degenerate_vertices(vertices);
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(
                "fewer than 3 non-degenerate vertices".into(),
            ));
        }
        let area = signed_area(&vertices);
        if area <= T::geom_tol() {
            return Err(Error::InvalidGeometry(format!(
                "signed area {area} is not positive (vertices must be CCW)"
            )));
        }
        let n = vertices.len();
        for i in 0..n {
            let turn = orient(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if turn <= T::zero() {
                return Err(Error::InvalidGeometry(format!(
                    "not strictly convex at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Skips validation. The caller guarantees the type invariants.
    pub(crate) fn from_raw(vertices: Vec<Point2<T>>) -> Self {
        Self { vertices }
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> T {
        signed_area(&self.vertices)
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        point_in_convex_polygon(p, self)
    }

    pub fn transformed(&self, f: impl Fn(Point2<T>) -> Point2<T>) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&p| f(p)).collect())
    }
}

impl<'de, T> Deserialize<'de> for ConvexPolygon<T>
where
    T: Scalar + Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<P> {
            vertices: Vec<P>,
        }
        let raw = Raw::<Point2<T>>::deserialize(d)?;
        Self::new(raw.vertices).map_err(serde::de::Error::custom)
    }
}

/// Drops consecutive near-duplicates and vertices collinear with their
/// neighbours (cyclically).
fn remove_degenerate_vertices<T: Scalar>(mut v: Vec<Point2<T>>) -> Vec<Point2<T>> {
    let tol = T::geom_tol();
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let mut drop = None;
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            if cur.dist(prev) <= tol {
                drop = Some(i);
                break;
            }
            let base = next.dist(prev);
            if base > tol && orient(prev, next, cur).abs() / base <= tol {
                // cur lies on the segment prev-next (or its extension)
                drop = Some(i);
                break;
            }
        }
        match drop {
            Some(i) => {
                v.remove(i);
            }
            None => return v,
        }
    }
}

/// A rotated rectangle. `angle` is in degrees, from +x to the width edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect<T> {
    pub center: Point2<T>,
    pub width: T,
    pub height: T,
    pub angle: T,
}

impl<T: Scalar> RotatedRect<T> {
    /// Builds a canonical rectangle: `width >= height`, angle in `[-90, 90)`,
    /// and for squares (within tolerance) angle in `[-45, 45)`.
    pub fn new(center: Point2<T>, width: T, height: T, angle: T) -> Self {
        let (width, height, angle) = if width >= height {
            (width, height, angle)
        } else {
            (height, width, angle + T::lit(90.0))
        };
        let square = (width - height).abs() <= T::geom_tol();
        Self {
            center,
            width,
            height,
            angle: canonical_angle(angle, square),
        }
    }

    pub fn area(&self) -> T {
        self.width * self.height
    }

    /// Unit vector along the width edge.
    pub fn axis(&self) -> Point2<T> {
        let a = self.angle.to_radians();
        Point2::new(a.cos(), a.sin())
    }

    /// Corners in CCW order, starting at `center - w/2 * u - h/2 * n`.
    pub fn corner_points(&self) -> [Point2<T>; 4] {
        let half = T::lit(0.5);
        let u = self.axis();
        let a = u * (self.width * half);
        let b = u.perp() * (self.height * half);
        let c = self.center;
        [c - a - b, c + a - b, c + a + b, c - a + b]
    }

    pub fn to_quad(&self) -> Result<QuadBox<T>> {
        QuadBox::new(self.corner_points())
    }

    pub fn to_polygon(&self) -> Result<ConvexPolygon<T>> {
        ConvexPolygon::new(self.corner_points().to_vec())
    }
}

/// A simple quadrilateral with CCW corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadBox<T> {
    corners: [Point2<T>; 4],
}

impl<T: Scalar> QuadBox<T> {
    /// Accepts either winding; clockwise input is reversed to CCW keeping the
    /// first corner in place.
    pub fn new(corners: [Point2<T>; 4]) -> Result<Self> {
        if let Some(i) = corners.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!("corner {i} is not finite")));
        }
        let tol = T::geom_tol();
        for i in 0..4 {
            if corners[i].dist(corners[(i + 1) % 4]) <= tol {
                return Err(Error::InvalidGeometry(format!(
                    "corners {i} and {} coincide",
                    (i + 1) % 4
                )));
            }
        }
        if segments_cross(corners[0], corners[1], corners[2], corners[3])
            || segments_cross(corners[1], corners[2], corners[3], corners[0])
        {
            return Err(Error::InvalidGeometry(
                "quadrilateral self-intersects".into(),
            ));
        }
        let area = signed_area(&corners);
        if area.abs() <= tol {
            return Err(Error::InvalidGeometry("quadrilateral has zero area".into()));
        }
        let corners = if area < T::zero() {
            [corners[0], corners[3], corners[2], corners[1]]
        } else {
            corners
        };
        Ok(Self { corners })
    }

    #[inline]
    pub fn corners(&self) -> &[Point2<T>; 4] {
        &self.corners
    }

    pub fn area(&self) -> T {
        signed_area(&self.corners)
    }

    /// Geometric center (mean of the four corners).
    pub fn center(&self) -> Point2<T> {
        Point2::centroid(&self.corners)
    }

    /// The convex region of the quad. A concave quad is replaced by its hull.
    pub fn to_polygon(&self) -> ConvexPolygon<T> {
        let idx = convex_hull_indices(&self.corners)
            .expect("a simple quad with positive area has a valid hull");
        ConvexPolygon::from_raw(idx.iter().map(|&i| self.corners[i]).collect())
    }

    pub fn translated(&self, d: Point2<T>) -> Result<Self> {
        Self::new(self.corners.map(|p| p + d))
    }
}

impl<'de, T> Deserialize<'de> for QuadBox<T>
where
    T: Scalar + Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<P> {
            corners: [P; 4],
        }
        let raw = Raw::<Point2<T>>::deserialize(d)?;
        Self::new(raw.corners).map_err(serde::de::Error::custom)
    }
}

/// Proper crossing of segments `a-b` and `c-d` (touching counts as crossing
/// only when an endpoint lies strictly inside the other segment).
fn segments_cross<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>, d: Point2<T>) -> bool {
    let tol = T::geom_tol();
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
    {
        return true;
    }
    let on_segment = |p: Point2<T>, q: Point2<T>, r: Point2<T>, o: T| {
        o.abs() <= tol
            && r.x >= p.x.min(q.x) - tol
            && r.x <= p.x.max(q.x) + tol
            && r.y >= p.y.min(q.y) - tol
            && r.y <= p.y.max(q.y) + tol
    };
    on_segment(a, b, c, d1)
        || on_segment(a, b, d, d2)
        || on_segment(c, d, a, d3)
        || on_segment(c, d, b, d4)
}
