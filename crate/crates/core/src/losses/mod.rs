//! Training losses with analytic gradients.
//!
//! Gradients are subgradients on the current smooth piece: hull membership,
//! corner selection and inside/outside status are held fixed while
//! differentiating.

mod focal;
mod giou;
mod gradcheck;
mod spatial;
mod total;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Point2;
use crate::scalar::Scalar;

pub use focal::{focal_loss, focal_loss_logit, sigmoid, FocalLoss, FocalValue};
pub use giou::{
    giou_loss_convexhull, giou_loss_nearestcorner, ConvexHullGiouLoss, NearestCornerGiouLoss,
};
pub use gradcheck::{
    grad_check, grad_check_points, gradcheck_suite, near_piece_boundary, GradCheck, SuiteRow,
    GRADCHECK_TOLERANCE,
};
pub use spatial::{spatial_constraint_loss, SpatialConstraintLoss};
pub use total::{total_loss, ClsTerms, LossBreakdown, LossWeights, StageTerms};

/// Per-point gradient, aligned with a point set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointGrad<T>(pub Vec<Point2<T>>);

impl<T: Scalar> PointGrad<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Point2::zero(); n])
    }

    pub fn flatten(&self) -> Vec<T> {
        self.0.iter().flat_map(|g| [g.x, g.y]).collect()
    }

    pub fn max_norm(&self) -> T {
        self.0.iter().map(|g| g.norm()).fold(T::zero(), T::max)
    }
}

/// Value and gradient of a loss at one parameter vector. `pieces` identifies
/// the smooth piece the evaluation landed on.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub pieces: Vec<i64>,
}

/// A piecewise-smooth scalar function of a flat parameter vector.
pub trait Objective<T: Scalar> {
    fn evaluate(&self, params: &[T]) -> Result<Evaluation<T>>;
}
