//! Adaptive points assessment and assignment.
//!
//! [`quality`] scores candidates, [`assign`] turns scores into positive and
//! negative labels: the dynamic top-k rule, the center-bin assigner used at
//! initialization, and a max-IoU baseline.

mod assign;
mod quality;

use serde::{Deserialize, Serialize};

use crate::geometry::PointSet;

pub use assign::{
    apaa_assign, center_init_assign, dynamic_topk_assign, fpn_level, max_iou_assign, topk_count,
    AssignmentResult, BinGrid, CenterAssignment, Label, ObjectAssignment,
};
pub use quality::{
    quality_cls, quality_loc, quality_ori, quality_poc, quality_total, QualityParams, QualityScore,
    QualityWeights,
};

/// A point-set sample with the detector outputs read at its points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: crate::Scalar + Serialize",
    deserialize = "T: crate::Scalar + Deserialize<'de>"
))]
pub struct Candidate<T> {
    pub point_set: PointSet<T>,
    pub cls_prob: Vec<T>,
    /// One feature vector per point.
    pub features: Vec<Vec<T>>,
    pub source_bin: usize,
}
