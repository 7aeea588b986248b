//! Quality measure of a candidate point set against one ground-truth object.
//!
//! Every component is a loss or a distance, so a lower total means a better
//! candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    chamfer_distance, convex_hull, min_area_rect, polygon_giou, sample_contour_points, QuadBox,
};
use crate::losses::focal_loss;
use crate::scalar::Scalar;

use super::Candidate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights<T> {
    pub mu1: T,
    pub mu2: T,
    pub mu3: T,
}

impl<T: Scalar> Default for QualityWeights<T> {
    fn default() -> Self {
        Self {
            mu1: T::lit(1.0),
            mu2: T::lit(0.3),
            mu3: T::lit(0.1),
        }
    }
}

/// Everything the quality measure needs besides the candidate and its GT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityParams<T> {
    pub weights: QualityWeights<T>,
    pub focal_alpha: T,
    pub focal_gamma: T,
    /// Contour samples per box for the orientation term.
    pub contour_points: usize,
}

impl<T: Scalar> Default for QualityParams<T> {
    fn default() -> Self {
        Self {
            weights: QualityWeights::default(),
            focal_alpha: T::lit(0.25),
            focal_gamma: T::lit(2.0),
            contour_points: 40,
        }
    }
}

impl<T: Scalar> QualityParams<T> {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        if [w.mu1, w.mu2, w.mu3]
            .iter()
            .any(|v| !(v.is_finite() && *v >= T::zero()))
        {
            return Err(Error::InvalidArgument(
                "quality weights must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityScore<T> {
    pub q_cls: T,
    pub q_loc: T,
    pub q_ori: T,
    pub q_poc: T,
    pub total: T,
}

impl<T: Scalar> QualityScore<T> {
    pub fn combine(q_cls: T, q_loc: T, q_ori: T, q_poc: T, w: &QualityWeights<T>) -> Self {
        Self {
            q_cls,
            q_loc,
            q_ori,
            q_poc,
            total: q_cls + w.mu1 * q_loc + w.mu2 * q_ori + w.mu3 * q_poc,
        }
    }
}

/// Focal loss of the candidate's probability for the GT class.
pub fn quality_cls<T: Scalar>(c: &Candidate<T>, gt_class: usize, alpha: T, gamma: T) -> Result<T> {
    let p = *c.cls_prob.get(gt_class).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "class {gt_class} out of range for {} probabilities",
            c.cls_prob.len()
        ))
    })?;
    Ok(focal_loss(p, true, alpha, gamma)?.loss)
}

/// GIoU loss between the convex hull of the points and the GT.
pub fn quality_loc<T: Scalar>(c: &Candidate<T>, gt: &QuadBox<T>) -> Result<T> {
    let hull = convex_hull(&c.point_set)?;
    Ok(T::one() - polygon_giou(&hull, &gt.to_polygon())?)
}

/// Chamfer distance between contour samples of the candidate's min-area
/// rectangle and of the GT.
pub fn quality_ori<T: Scalar>(
    c: &Candidate<T>,
    gt: &QuadBox<T>,
    contour_points: usize,
) -> Result<T> {
    let rect = min_area_rect(&c.point_set)?;
    let quad = rect
        .to_quad()
        .map_err(|e| Error::DegenerateInput(format!("min-area rect: {e}")))?;
    let pred = sample_contour_points(&quad, contour_points)?;
    let target = sample_contour_points(gt, contour_points)?;
    chamfer_distance(&pred, &target)
}

/// Point-wise feature diversity: one minus the mean cosine between each
/// normalized feature and the mean normalized feature.
///
/// A zero mean (perfectly cancelling directions) makes every cosine
/// undefined; those are taken as 0, giving 1.
pub fn quality_poc<T: Scalar>(c: &Candidate<T>) -> Result<T> {
    let feats = &c.features;
    if feats.is_empty() {
        return Err(Error::InvalidArgument(
            "candidate has no point features".into(),
        ));
    }
    let dim = feats[0].len();
    let mut unit = Vec::with_capacity(feats.len());
    for (k, f) in feats.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "feature {k} has dimension {}",
                f.len()
            )));
        }
        let norm = f.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "feature {k} has zero or invalid norm"
            )));
        }
        unit.push(f.iter().map(|v| *v / norm).collect::<Vec<_>>());
    }
    let n = T::from_usize(unit.len()).expect("count fits scalar");
    let mean: Vec<T> = (0..dim)
        .map(|d| unit.iter().map(|u| u[d]).sum::<T>() / n)
        .collect();
    let mean_norm = mean.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if mean_norm <= T::zero() {
        return Ok(T::one());
    }
    let cos_sum: T = unit
        .iter()
        .map(|u| u.iter().zip(&mean).map(|(a, b)| *a * *b).sum::<T>() / mean_norm)
        .sum();
    Ok(T::one() - cos_sum / n)
}

pub fn quality_total<T: Scalar>(
    c: &Candidate<T>,
    gt: &QuadBox<T>,
    gt_class: usize,
    params: &QualityParams<T>,
) -> Result<QualityScore<T>> {
    Ok(QualityScore::combine(
        quality_cls(c, gt_class, params.focal_alpha, params.focal_gamma)?,
        quality_loc(c, gt)?,
        quality_ori(c, gt, params.contour_points)?,
        quality_poc(c)?,
        &params.weights,
    ))
}
