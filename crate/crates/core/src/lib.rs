//! Oriented point-set detection toolkit.
//!
//! Converts adaptive point sets into oriented regions, scores and assigns
//! them as training samples, differentiates the training losses with respect
//! to point coordinates, and evaluates rotated detections.
//!
//! The geometry, loss and assignment kernels are generic over [`Scalar`]
//! (`f32` or `f64`). The aliases below fix the scalar to `f64`, which is what
//! the learner, evaluator and file formats use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apaa;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod scalar;
pub mod toy;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type Points = geometry::PointSet<f64>;
pub type Polygon = geometry::ConvexPolygon<f64>;
pub type Rect = geometry::RotatedRect<f64>;
pub type Quad = geometry::QuadBox<f64>;
pub type Grad = losses::PointGrad<f64>;
pub type Weights = losses::LossWeights<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Point = crate::geometry::Point2<f32>;
    pub type Points = crate::geometry::PointSet<f32>;
    pub type Polygon = crate::geometry::ConvexPolygon<f32>;
    pub type Rect = crate::geometry::RotatedRect<f32>;
    pub type Quad = crate::geometry::QuadBox<f32>;
}
