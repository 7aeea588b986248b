//! Rotated-detection evaluation: greedy matching by rotated IoU, VOC07 and
//! VOC12 average precision, and mean average orientation error (mAOE).
//!
//! mAOE counts true positives only. The error of one match is the modulo-180
//! angular distance between the canonical angles of the two min-area
//! rectangles, reduced modulo 90 when the GT is square-like (aspect ratio at
//! most 1.05). Per-class means are averaged over classes.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, polygon_iou, PointSet};
use crate::{Quad, Rect};

/// Aspect ratio up to which a GT is treated as square for orientation.
pub const SQUARE_ASPECT: f64 = 1.05;

pub const MAOE_NOTE: &str =
    "mAOE over true positives only; modulo-180 angle distance, modulo 90 for GT aspect <= 1.05";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image: String,
    pub class: String,
    pub quad: Quad,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtRecord {
    pub image: String,
    pub class: String,
    pub quad: Quad,
    pub difficult: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ApMetric {
    #[default]
    Voc07,
    Voc12,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MatchKind {
    TruePositive {
        gt: usize,
        iou: f64,
    },
    FalsePositive,
    /// Overlaps only a difficult GT; neither TP nor FP.
    Ignored,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetMatch {
    pub det: usize,
    pub kind: MatchKind,
}

/// Processing order: confidence descending, then image, class, coordinates
/// and input index, so the outcome does not depend on input order.
fn det_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .total_cmp(&da.score)
            .then_with(|| da.image.cmp(&db.image))
            .then_with(|| da.class.cmp(&db.class))
            .then_with(|| {
                da.quad
                    .corners()
                    .iter()
                    .zip(db.quad.corners())
                    .map(|(p, q)| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    order
}

/// Greedy matching. Returns one entry per detection in processing order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GtRecord],
    iou_threshold: f64,
) -> Result<Vec<DetMatch>> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold {iou_threshold} outside (0, 1)"
        )));
    }
    for d in dets {
        if !d.score.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite confidence on image {}",
                d.image
            )));
        }
    }
    let mut by_key: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (g, gt) in gts.iter().enumerate() {
        by_key.entry((&gt.image, &gt.class)).or_default().push(g);
    }
    let polys: Vec<_> = gts.iter().map(|g| g.quad.to_polygon()).collect();
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(dets.len());
    for det in det_order(dets) {
        let d = &dets[det];
        let poly = d.quad.to_polygon();
        let mut best: Option<(f64, usize)> = None;
        let mut hits_difficult = false;
        for &g in by_key
            .get(&(d.image.as_str(), d.class.as_str()))
            .map_or(&[][..], |v| v)
        {
            let iou = polygon_iou(&poly, &polys[g])?;
            if iou < iou_threshold {
                continue;
            }
            if gts[g].difficult {
                hits_difficult = true;
            } else if !taken[g] && best.is_none_or(|(b, _)| iou > b) {
                best = Some((iou, g));
            }
        }
        let kind = match best {
            Some((iou, gt)) => {
                taken[gt] = true;
                MatchKind::TruePositive { gt, iou }
            }
            None if hits_difficult => MatchKind::Ignored,
            None => MatchKind::FalsePositive,
        };
        out.push(DetMatch { det, kind });
    }
    Ok(out)
}

/// AP from a PR curve given in detection order.
pub fn average_precision(recall: &[f64], precision: &[f64], metric: ApMetric) -> f64 {
    match metric {
        ApMetric::Voc07 => {
            (0..=10)
                .map(|i| {
                    let t = i as f64 / 10.0;
                    recall
                        .iter()
                        .zip(precision)
                        .filter(|(r, _)| **r >= t)
                        .map(|(_, p)| *p)
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 11.0
        }
        ApMetric::Voc12 => {
            let mut mrec = Vec::with_capacity(recall.len() + 2);
            mrec.push(0.0);
            mrec.extend_from_slice(recall);
            mrec.push(1.0);
            let mut mpre = Vec::with_capacity(precision.len() + 2);
            mpre.push(0.0);
            mpre.extend_from_slice(precision);
            mpre.push(0.0);
            for i in (0..mpre.len() - 1).rev() {
                mpre[i] = mpre[i].max(mpre[i + 1]);
            }
            (0..mrec.len() - 1)
                .filter(|&i| mrec[i + 1] != mrec[i])
                .map(|i| (mrec[i + 1] - mrec[i]) * mpre[i + 1])
                .sum()
        }
    }
}

/// Angular error in degrees between two rectangles, using the GT's aspect
/// to decide on the 90-degree ambiguity.
pub fn orientation_error(pred: &Rect, gt: &Rect) -> f64 {
    angle_error(pred.angle, gt.angle, gt.width <= SQUARE_ASPECT * gt.height)
}

pub fn angle_error(pred_deg: f64, gt_deg: f64, square_like: bool) -> f64 {
    let d = (pred_deg - gt_deg).abs() % 180.0;
    let d = d.min(180.0 - d);
    if square_like {
        let d = d % 90.0;
        d.min(90.0 - d)
    } else {
        d
    }
}

fn quad_rect(q: &Quad) -> Result<Rect> {
    min_area_rect(&PointSet::new(q.corners().to_vec())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub ap: f64,
    /// Non-difficult GT count.
    pub npos: usize,
    pub tp: usize,
    pub fp: usize,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub aoe: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: ApMetric,
    pub iou_threshold: f64,
    /// Classes with at least one non-difficult GT, sorted by name.
    pub classes: Vec<ClassReport>,
    pub map: Option<f64>,
    pub maoe: Option<f64>,
    pub maoe_note: String,
    pub matches: Vec<DetMatch>,
}

pub fn evaluate(
    dets: &[Detection],
    gts: &[GtRecord],
    metric: ApMetric,
    iou_threshold: f64,
) -> Result<EvalReport> {
    let matches = match_detections(dets, gts, iou_threshold)?;
    let mut npos: BTreeMap<&str, usize> = BTreeMap::new();
    for g in gts {
        let n = npos.entry(&g.class).or_default();
        if !g.difficult {
            *n += 1;
        }
    }
    let mut classes = Vec::new();
    for (&class, &n) in &npos {
        if n == 0 {
            continue;
        }
        let (mut tp, mut fp) = (0usize, 0usize);
        let (mut recall, mut precision) = (Vec::new(), Vec::new());
        let mut errors = Vec::new();
        for m in matches.iter().filter(|m| dets[m.det].class == class) {
            match m.kind {
                MatchKind::Ignored => continue,
                MatchKind::TruePositive { gt, .. } => {
                    tp += 1;
                    let pred = quad_rect(&dets[m.det].quad)?;
                    errors.push(orientation_error(&pred, &quad_rect(&gts[gt].quad)?));
                }
                MatchKind::FalsePositive => fp += 1,
            }
            recall.push(tp as f64 / n as f64);
            precision.push(tp as f64 / (tp + fp) as f64);
        }
        classes.push(ClassReport {
            class: class.to_string(),
            ap: average_precision(&recall, &precision, metric),
            npos: n,
            tp,
            fp,
            recall,
            precision,
            aoe: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        });
    }
    let map = (!classes.is_empty())
        .then(|| classes.iter().map(|c| c.ap).sum::<f64>() / classes.len() as f64);
    let aoes: Vec<f64> = classes.iter().filter_map(|c| c.aoe).collect();
    Ok(EvalReport {
        metric,
        iou_threshold,
        map,
        maoe: (!aoes.is_empty()).then(|| aoes.iter().sum::<f64>() / aoes.len() as f64),
        maoe_note: MAOE_NOTE.to_string(),
        classes,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, RotatedRect};

    fn square(x: f64, y: f64, s: f64) -> Quad {
        Quad::new([
            Point2::new(x, y),
            Point2::new(x + s, y),
            Point2::new(x + s, y + s),
            Point2::new(x, y + s),
        ])
        .unwrap()
    }

    fn det(x: f64, score: f64) -> Detection {
        Detection {
            image: "a".into(),
            class: "plane".into(),
            quad: square(x, 0.0, 10.0),
            score,
        }
    }

    fn gt(x: f64, difficult: bool) -> GtRecord {
        GtRecord {
            image: "a".into(),
            class: "plane".into(),
            quad: square(x, 0.0, 10.0),
            difficult,
        }
    }

    #[test]
    fn single_exact_match() {
        let r = evaluate(&[det(0.0, 0.9)], &[gt(0.0, false)], ApMetric::Voc07, 0.5).unwrap();
        assert_eq!((r.classes[0].tp, r.classes[0].fp), (1, 0));
        assert_eq!(r.map, Some(1.0));
        assert_eq!(r.maoe, Some(0.0));
    }

    #[test]
    fn duplicate_is_false_positive() {
        let m = match_detections(&[det(0.0, 0.9), det(0.5, 0.8)], &[gt(0.0, false)], 0.5).unwrap();
        assert!(matches!(m[0].kind, MatchKind::TruePositive { gt: 0, .. }));
        assert_eq!(m[1].kind, MatchKind::FalsePositive);
    }

    #[test]
    fn difficult_gt_ignores_detections() {
        let m = match_detections(&[det(0.0, 0.9), det(0.0, 0.8)], &[gt(0.0, true)], 0.5).unwrap();
        assert!(m.iter().all(|m| m.kind == MatchKind::Ignored));
        let r = evaluate(&[det(0.0, 0.9)], &[gt(0.0, true)], ApMetric::Voc07, 0.5).unwrap();
        assert!(r.classes.is_empty() && r.map.is_none());
    }

    #[test]
    fn no_detections_gives_zero_ap() {
        let r = evaluate(&[], &[gt(0.0, false)], ApMetric::Voc12, 0.5).unwrap();
        assert_eq!(r.map, Some(0.0));
        assert_eq!(r.maoe, None);
    }

    #[test]
    fn half_recall_curve() {
        let (r, p) = ([0.25, 0.5], [1.0, 1.0]);
        assert!((average_precision(&r, &p, ApMetric::Voc07) - 6.0 / 11.0).abs() < 1e-12);
        assert!((average_precision(&r, &p, ApMetric::Voc12) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn angle_cases() {
        assert_eq!(angle_error(30.0, 30.0, false), 0.0);
        assert!((angle_error(89.0, -89.0, false) - 2.0).abs() < 1e-12);
        assert_eq!(angle_error(45.0, -45.0, true), 0.0);
        let gt = RotatedRect::new(Point2::new(0.0, 0.0), 10.0, 10.0, 0.0);
        let pred = RotatedRect::new(Point2::new(0.0, 0.0), 10.0, 10.0, 90.0);
        assert_eq!(orientation_error(&pred, &gt), 0.0);
    }
}
