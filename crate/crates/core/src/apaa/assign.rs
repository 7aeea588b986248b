use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, polygon_iou, Point2, QuadBox};
use crate::scalar::Scalar;

use super::{quality_total, Candidate, QualityParams, QualityScore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive { object: usize },
    Negative,
}

impl Label {
    pub fn object(&self) -> Option<usize> {
        match *self {
            Label::Positive { object } => Some(object),
            Label::Negative => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectAssignment {
    pub object: usize,
    /// Number of candidates competing for this object.
    pub n_t: usize,
    pub k: usize,
    /// Positive candidate indices, best first.
    pub positives: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub objects: Vec<ObjectAssignment>,
    pub labels: Vec<Label>,
    /// Sampling ratio, absent for assigners that do not use one.
    pub sigma: Option<f64>,
}

impl AssignmentResult {
    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.object().map(|o| (i, o)))
    }

    pub fn num_positives(&self) -> usize {
        self.positives().count()
    }
}

/// `k = round(sigma * n_t)` (half rounds up), clamped to `[1, n_t]`.
pub fn topk_count<T: Scalar>(sigma: T, n_t: usize) -> usize {
    if n_t == 0 {
        return 0;
    }
    let raw = (sigma * T::from_usize(n_t).expect("count fits scalar") + T::lit(0.5)).floor();
    raw.to_usize().unwrap_or(0).clamp(1, n_t)
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if !(sigma > T::zero() && sigma <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "sigma {sigma} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Dynamic top-k selection from precomputed quality totals.
///
/// `groups[o]` lists the candidate indices spawned for object `o`. Within a
/// group candidates are ranked by ascending total (ties by index) and the
/// first `k` become positives. Non-finite totals never become positive.
pub fn dynamic_topk_assign<T: Scalar>(
    groups: &[Vec<usize>],
    totals: &[T],
    sigma: T,
) -> Result<AssignmentResult> {
    check_sigma(sigma)?;
    let mut labels = vec![Label::Negative; totals.len()];
    let mut seen = vec![false; totals.len()];
    let mut objects = Vec::with_capacity(groups.len());
    for (object, group) in groups.iter().enumerate() {
        for &i in group {
            if i >= totals.len() {
                return Err(Error::InvalidArgument(format!(
                    "candidate index {i} out of range"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "candidate {i} belongs to two objects"
                )));
            }
        }
        let mut ranked = group.clone();
        ranked.sort_by(|&a, &b| {
            let (ta, tb) = (totals[a], totals[b]);
            ta.partial_cmp(&tb)
                .unwrap_or_else(|| ta.is_nan().cmp(&tb.is_nan()))
                .then(a.cmp(&b))
        });
        let k = topk_count(sigma, group.len());
        let positives: Vec<usize> = ranked
            .into_iter()
            .take(k)
            .filter(|&i| totals[i].is_finite())
            .collect();
        for &i in &positives {
            labels[i] = Label::Positive { object };
        }
        objects.push(ObjectAssignment {
            object,
            n_t: group.len(),
            k,
            positives,
        });
    }
    Ok(AssignmentResult {
        objects,
        labels,
        sigma: sigma.to_f64(),
    })
}

/// Scores every candidate against its own object and applies
/// [`dynamic_topk_assign`]. Candidates whose score cannot be computed
/// (degenerate geometry) get `None` and rank last.
pub fn apaa_assign<T: Scalar>(
    candidates: &[Candidate<T>],
    objects: &[(QuadBox<T>, usize)],
    groups: &[Vec<usize>],
    sigma: T,
    params: &QualityParams<T>,
) -> Result<(AssignmentResult, Vec<Option<QualityScore<T>>>)> {
    params.validate()?;
    if groups.len() != objects.len() {
        return Err(Error::InvalidArgument(
            "one candidate group per object required".into(),
        ));
    }
    let mut scores = vec![None; candidates.len()];
    for (o, group) in groups.iter().enumerate() {
        let (gt, class) = &objects[o];
        for &i in group {
            let c = candidates.get(i).ok_or_else(|| {
                Error::InvalidArgument(format!("candidate index {i} out of range"))
            })?;
            scores[i] = match quality_total(c, gt, *class, params) {
                Ok(s) => Some(s),
                Err(Error::DegenerateInput(_)) => None,
                Err(e) => return Err(e),
            };
        }
    }
    let totals: Vec<T> = scores
        .iter()
        .map(|s| s.map_or(T::infinity(), |s| s.total))
        .collect();
    Ok((dynamic_topk_assign(groups, &totals, sigma)?, scores))
}

/// Center lattice of one or more strides over a `width x height` extent.
/// Bin `(row, col)` at stride `s` is centered at `((col + 0.5) s, (row + 0.5) s)`;
/// global indices run level by level, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinGrid<T> {
    pub width: T,
    pub height: T,
    pub strides: Vec<T>,
}

impl<T: Scalar> BinGrid<T> {
    pub fn dims(&self, level: usize) -> (usize, usize) {
        let s = self.strides[level];
        let cols = (self.width / s).ceil().to_usize().unwrap_or(0).max(1);
        let rows = (self.height / s).ceil().to_usize().unwrap_or(0).max(1);
        (rows, cols)
    }

    pub fn level_offset(&self, level: usize) -> usize {
        (0..level)
            .map(|l| {
                let (r, c) = self.dims(l);
                r * c
            })
            .sum()
    }

    pub fn num_bins(&self) -> usize {
        self.level_offset(self.strides.len())
    }

    /// Level and center of a global bin index.
    pub fn bin(&self, index: usize) -> Option<(usize, Point2<T>)> {
        let mut rest = index;
        for level in 0..self.strides.len() {
            let (rows, cols) = self.dims(level);
            if rest < rows * cols {
                let s = self.strides[level];
                let half = T::lit(0.5);
                let (row, col) = (rest / cols, rest % cols);
                let x = (T::from_usize(col).unwrap() + half) * s;
                let y = (T::from_usize(row).unwrap() + half) * s;
                return Some((level, Point2::new(x, y)));
            }
            rest -= rows * cols;
        }
        None
    }
}

/// Pyramid level for a box of the given area: `floor(log2(sqrt(area) / 8))`
/// clamped to the available levels.
pub fn fpn_level<T: Scalar>(area: T, levels: usize) -> usize {
    let raw = (area.sqrt() / T::lit(8.0)).log2().floor();
    let max = levels.saturating_sub(1) as i64;
    raw.to_i64().unwrap_or(0).clamp(0, max) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterAssignment {
    /// Owner object per global bin index.
    pub labels: Vec<Option<usize>>,
    /// Positive bins per object, nearest first.
    pub per_object: Vec<Vec<usize>>,
}

/// Initialization-stage assigner: each GT picks the `pos_num` bins on its
/// level nearest to its center (ties by bin index). A bin claimed by several
/// GTs goes to the one with the nearer center, then the lower GT index.
pub fn center_init_assign<T: Scalar>(
    grid: &BinGrid<T>,
    gts: &[QuadBox<T>],
    pos_num: usize,
) -> Result<CenterAssignment> {
    if grid.strides.is_empty() || grid.strides.iter().any(|s| !(*s > T::zero())) {
        return Err(Error::InvalidArgument(
            "bin grid needs positive strides".into(),
        ));
    }
    let mut labels: Vec<Option<usize>> = vec![None; grid.num_bins()];
    let mut claim: Vec<Option<(T, usize)>> = vec![None; labels.len()];
    let mut wanted = Vec::with_capacity(gts.len());
    for (g, gt) in gts.iter().enumerate() {
        let level = fpn_level(gt.area(), grid.strides.len());
        let (rows, cols) = grid.dims(level);
        let offset = grid.level_offset(level);
        let center = gt.center();
        let mut bins: Vec<(T, usize)> = (0..rows * cols)
            .map(|k| {
                let (_, c) = grid.bin(offset + k).expect("bin within level");
                (c.dist(center), offset + k)
            })
            .collect();
        bins.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        bins.truncate(pos_num);
        for &(d, b) in &bins {
            let better = claim[b].is_none_or(|(cd, cg)| d < cd || (d == cd && g < cg));
            if better {
                claim[b] = Some((d, g));
            }
        }
        wanted.push(bins);
    }
    let per_object = wanted
        .iter()
        .enumerate()
        .map(|(g, bins)| {
            bins.iter()
                .filter(|(_, b)| claim[*b].map(|(_, o)| o) == Some(g))
                .map(|&(_, b)| b)
                .collect()
        })
        .collect();
    for (b, c) in claim.iter().enumerate() {
        labels[b] = c.map(|(_, g)| g);
    }
    Ok(CenterAssignment { labels, per_object })
}

/// Baseline: a candidate is positive for the GT maximizing the IoU of its
/// convex hull, when that IoU reaches `threshold`.
pub fn max_iou_assign<T: Scalar>(
    candidates: &[Candidate<T>],
    gts: &[QuadBox<T>],
    threshold: T,
) -> Result<AssignmentResult> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold {threshold} outside (0, 1)"
        )));
    }
    let polys: Vec<_> = gts.iter().map(|g| g.to_polygon()).collect();
    let mut labels = vec![Label::Negative; candidates.len()];
    let mut objects: Vec<ObjectAssignment> = (0..gts.len())
        .map(|object| ObjectAssignment {
            object,
            n_t: candidates.len(),
            k: 0,
            positives: Vec::new(),
        })
        .collect();
    for (i, c) in candidates.iter().enumerate() {
        let Ok(hull) = convex_hull(&c.point_set) else {
            continue;
        };
        let mut best: Option<(T, usize)> = None;
        for (g, poly) in polys.iter().enumerate() {
            let iou = polygon_iou(&hull, poly)?;
            if best.is_none_or(|(b, _)| iou > b) {
                best = Some((iou, g));
            }
        }
        if let Some((iou, g)) = best {
            if iou >= threshold {
                labels[i] = Label::Positive { object: g };
                objects[g].positives.push(i);
                objects[g].k += 1;
            }
        }
    }
    Ok(AssignmentResult {
        objects,
        labels,
        sigma: None,
    })
}
