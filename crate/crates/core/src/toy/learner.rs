use serde::{Deserialize, Serialize};

use crate::apaa::{
    apaa_assign, center_init_assign, max_iou_assign, AssignmentResult, BinGrid, Candidate,
    QualityParams,
};
use crate::error::{Error, Result};
use crate::eval::orientation_error;
use crate::geometry::{min_area_rect, polygon_iou, Point2, PointSet};
use crate::losses::{
    focal_loss, giou_loss_convexhull, spatial_constraint_loss, total_loss, ClsTerms, LossBreakdown,
    PointGrad, StageTerms,
};
use crate::{Point, Quad, Weights};

use super::{gen_scene, FeatureField, SceneConfig, SyntheticScene};

/// Which rule picks refine-stage positives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AssignerKind {
    Apaa,
    MaxIou { threshold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub learn_rate: f64,
    pub steps: usize,
    pub sigma: f64,
    pub loss_weights: Weights,
    pub quality: QualityParams<f64>,
    /// Bins spawned per object by the center assigner.
    pub n_candidates_per_object: usize,
    /// How many of those (nearest first) are init-stage positives.
    pub init_pos_num: usize,
    pub noise: f64,
    pub assigner: AssignerKind,
    pub spatial_constraint: bool,
    pub strides: Vec<f64>,
    pub field_stride: f64,
    pub feature_dim: usize,
    /// Steps without a new best total loss before the learning rate halves.
    pub plateau_patience: usize,
    pub scene: SceneConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learn_rate: 1.0,
            steps: 500,
            sigma: 0.4,
            loss_weights: Weights::default(),
            quality: QualityParams::default(),
            n_candidates_per_object: 16,
            init_pos_num: 1,
            noise: 0.05,
            assigner: AssignerKind::Apaa,
            spatial_constraint: true,
            strides: vec![8.0, 16.0, 32.0],
            field_stride: 4.0,
            feature_dim: 8,
            plateau_patience: 50,
            scene: SceneConfig::default(),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learn_rate.is_finite() && self.learn_rate >= 0.0) {
            return bad("learn_rate must be finite and >= 0");
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("sigma must lie in (0, 1]");
        }
        if self.n_candidates_per_object == 0 || self.strides.is_empty() {
            return bad("need at least one candidate per object and one stride");
        }
        if self.strides.iter().any(|s| !(*s > 0.0)) {
            return bad("strides must be positive");
        }
        if let AssignerKind::MaxIou { threshold } = self.assigner {
            if !(threshold > 0.0 && threshold < 1.0) {
                return bad("max-IoU threshold must lie in (0, 1)");
            }
        }
        self.loss_weights.validate()?;
        self.quality.validate()?;
        self.scene.validate()
    }
}

/// Fixed 3x3 initial layout, stride units.
const INIT_LAYOUT: [f64; 3] = [-0.5, 0.0, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyCandidate {
    /// Object whose center bin spawned the candidate.
    pub object: usize,
    pub bin: usize,
    pub stride: f64,
    pub center: Point,
    /// Init-stage offsets from `center`, stride units.
    pub init_offsets: Vec<Point>,
    /// Refine-stage offsets added to the init points, stride units.
    pub refine_offsets: Vec<Point>,
    pub cls_prob: Vec<f64>,
    pub init_positive: bool,
}

impl ToyCandidate {
    pub fn init_points(&self) -> Vec<Point> {
        self.init_offsets
            .iter()
            .map(|o| self.center + *o * self.stride)
            .collect()
    }

    pub fn refined_points(&self) -> Vec<Point> {
        self.init_offsets
            .iter()
            .zip(&self.refine_offsets)
            .map(|(o, r)| self.center + (*o + *r) * self.stride)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub candidates: Vec<ToyCandidate>,
    pub history: Vec<LossBreakdown<f64>>,
    pub learn_rate: f64,
    best_total: f64,
    stall: usize,
    /// Positive samples skipped because their geometry was degenerate.
    pub skipped_degenerate: usize,
    /// Steps whose refine stage had no positives.
    pub empty_steps: usize,
}

impl TrainState {
    pub fn new(candidates: Vec<ToyCandidate>, learn_rate: f64) -> Self {
        Self {
            candidates,
            history: Vec::new(),
            learn_rate,
            best_total: f64::INFINITY,
            stall: 0,
            skipped_degenerate: 0,
            empty_steps: 0,
        }
    }
}

pub fn init_stage(
    scene: &SyntheticScene,
    field: &FeatureField,
    config: &LearnerConfig,
) -> Result<Vec<ToyCandidate>> {
    let grid = BinGrid {
        width: scene.width,
        height: scene.height,
        strides: config.strides.clone(),
    };
    let gts: Vec<Quad> = scene.objects.iter().map(|o| o.gt).collect();
    let centers = center_init_assign(&grid, &gts, config.n_candidates_per_object)?;
    let layout: Vec<Point> = INIT_LAYOUT
        .iter()
        .flat_map(|&y| INIT_LAYOUT.iter().map(move |&x| Point2::new(x, y)))
        .collect();
    let mut out = Vec::new();
    for (object, bins) in centers.per_object.iter().enumerate() {
        for (rank, &bin) in bins.iter().enumerate() {
            let (level, center) = grid.bin(bin).expect("assigned bin exists");
            out.push(ToyCandidate {
                object,
                bin,
                stride: config.strides[level],
                center,
                init_offsets: layout.clone(),
                refine_offsets: vec![Point2::zero(); layout.len()],
                cls_prob: field.class_probabilities(center, config.scene.n_classes),
                init_positive: rank < config.init_pos_num,
            });
        }
    }
    Ok(out)
}

fn to_candidates(state: &TrainState, field: &FeatureField) -> Result<Vec<Candidate<f64>>> {
    state
        .candidates
        .iter()
        .map(|c| {
            let pts = c.refined_points();
            let features = pts.iter().map(|p| field.sample(*p)).collect();
            Ok(Candidate {
                point_set: PointSet::new(pts)?,
                cls_prob: c.cls_prob.clone(),
                features,
                source_bin: c.bin,
            })
        })
        .collect()
}

fn assign(
    state: &TrainState,
    cands: &[Candidate<f64>],
    scene: &SyntheticScene,
    config: &LearnerConfig,
) -> Result<AssignmentResult> {
    let gts: Vec<Quad> = scene.objects.iter().map(|o| o.gt).collect();
    match config.assigner {
        AssignerKind::Apaa => {
            let objects: Vec<(Quad, usize)> =
                scene.objects.iter().map(|o| (o.gt, o.class)).collect();
            let groups: Vec<Vec<usize>> = (0..objects.len())
                .map(|o| {
                    (0..state.candidates.len())
                        .filter(|&i| state.candidates[i].object == o)
                        .collect()
                })
                .collect();
            Ok(apaa_assign(cands, &objects, &groups, config.sigma, &config.quality)?.0)
        }
        AssignerKind::MaxIou { threshold } => max_iou_assign(cands, &gts, threshold),
    }
}

/// Largest distance from the GT center to a corner; a point at a corner of
/// the GT has normalized penalty 1.
pub fn object_radius(gt: &Quad) -> f64 {
    let c = gt.center();
    gt.corners().iter().map(|p| p.dist(c)).fold(0.0, f64::max)
}

/// Localization and spatial terms of one stage, with per-candidate gradients
/// already scaled by the stage normalization.
struct StageGrad {
    terms: StageTerms<f64>,
    grads: Vec<(usize, PointGrad<f64>)>,
}

/// The spatial penalty of object `o` is divided by `scales[o]`, its
/// [`object_radius`], which makes it dimensionless like the GIoU term.
fn stage_losses(
    points: &[Vec<Point>],
    positives: &[(usize, usize)],
    scene: &SyntheticScene,
    spatial: Option<&[f64]>,
    skipped: &mut usize,
) -> Result<StageGrad> {
    let mut terms = StageTerms::default();
    let mut loc = Vec::new();
    for &(i, o) in positives {
        let set = PointSet::new(points[i].clone())?;
        match giou_loss_convexhull(&set, &scene.objects[o].gt) {
            Ok((l, g)) => {
                terms.loc_sum += l;
                terms.n_pos += 1;
                loc.push((i, g));
            }
            Err(Error::DegenerateInput(_)) => *skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut grads: Vec<(usize, PointGrad<f64>)> = Vec::new();
    let loc_scale = if terms.n_pos > 0 {
        1.0 / terms.n_pos as f64
    } else {
        0.0
    };
    for (i, g) in loc {
        grads.push((i, PointGrad(g.0.iter().map(|v| *v * loc_scale).collect())));
    }
    if let Some(scales) = spatial {
        let mut sc = Vec::new();
        for (o, obj) in scene.objects.iter().enumerate() {
            let members: Vec<usize> = positives.iter().filter(|p| p.1 == o).map(|p| p.0).collect();
            if members.is_empty() {
                continue;
            }
            let sets = members
                .iter()
                .map(|&i| PointSet::new(points[i].clone()))
                .collect::<Result<Vec<_>>>()?;
            let (l, g) = spatial_constraint_loss(&sets, &obj.gt)?;
            terms.sc_sum += l / scales[o];
            terms.n_objects += 1;
            let unscale =
                |g: PointGrad<f64>| PointGrad(g.0.iter().map(|v| *v * (1.0 / scales[o])).collect());
            sc.extend(members.into_iter().zip(g.into_iter().map(unscale)));
        }
        let sc_scale = if terms.n_objects > 0 {
            1.0 / terms.n_objects as f64
        } else {
            0.0
        };
        for (i, g) in sc {
            grads.push((i, PointGrad(g.0.iter().map(|v| *v * sc_scale).collect())));
        }
    }
    Ok(StageGrad { terms, grads })
}

/// One training iteration: assign refine positives on the current points,
/// evaluate both stages' losses, take one gradient step and record the loss.
///
/// Refine-stage gradients move only the refine offsets; the init points are
/// treated as constants there.
pub fn refine_step(
    state: &mut TrainState,
    scene: &SyntheticScene,
    field: &FeatureField,
    config: &LearnerConfig,
) -> Result<()> {
    let cands = to_candidates(state, field)?;
    let assignment = assign(state, &cands, scene, config)?;

    let init_points: Vec<Vec<Point>> = state.candidates.iter().map(|c| c.init_points()).collect();
    let refined: Vec<Vec<Point>> = cands
        .iter()
        .map(|c| c.point_set.points().to_vec())
        .collect();
    let init_pos: Vec<(usize, usize)> = state
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.init_positive)
        .map(|(i, c)| (i, c.object))
        .collect();
    let refine_pos: Vec<(usize, usize)> = assignment.positives().collect();

    let scales: Vec<f64> = scene.objects.iter().map(|o| object_radius(&o.gt)).collect();
    let spatial = config.spatial_constraint.then_some(&scales[..]);
    let mut skipped = 0;
    let init = stage_losses(&init_points, &init_pos, scene, spatial, &mut skipped)?;
    let refine = stage_losses(&refined, &refine_pos, scene, spatial, &mut skipped)?;

    let w = &config.loss_weights;
    let mut cls = ClsTerms { sum: 0.0, count: 0 };
    for (c, label) in cands.iter().zip(&assignment.labels) {
        let owner = label.object().map(|o| scene.objects[o].class);
        for (k, &p) in c.cls_prob.iter().enumerate() {
            cls.sum += focal_loss(p, owner == Some(k), w.focal_alpha, w.focal_gamma)?.loss;
        }
        cls.count += 1;
    }
    let breakdown = total_loss(&cls, &init.terms, &refine.terms, w);

    let lr = state.learn_rate;
    for (i, g) in &init.grads {
        let c = &mut state.candidates[*i];
        let step = lr * w.lambda1 * c.stride;
        for (o, d) in c.init_offsets.iter_mut().zip(&g.0) {
            *o = *o - *d * step;
        }
    }
    for (i, g) in &refine.grads {
        let c = &mut state.candidates[*i];
        let step = lr * w.lambda2 * c.stride;
        for (r, d) in c.refine_offsets.iter_mut().zip(&g.0) {
            *r = *r - *d * step;
        }
    }

    if breakdown.total < state.best_total {
        state.best_total = breakdown.total;
        state.stall = 0;
    } else {
        state.stall += 1;
        if state.stall >= config.plateau_patience {
            state.learn_rate *= 0.5;
            state.stall = 0;
        }
    }
    state.skipped_degenerate += skipped;
    if breakdown.empty_refine {
        state.empty_steps += 1;
    }
    state.history.push(breakdown);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub object: usize,
    pub class: usize,
    /// Candidate whose min-area rectangle overlaps the GT best.
    pub best_candidate: Option<usize>,
    pub iou: f64,
    pub orientation_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub steps: usize,
    pub objects: Vec<ObjectReport>,
    pub mean_iou: f64,
    pub mean_orientation_error: Option<f64>,
    /// Refined points of final positives lying outside their owner GT.
    pub outside_points: usize,
    pub num_positives: usize,
    pub final_learn_rate: f64,
    pub skipped_degenerate: usize,
    pub empty_steps: usize,
    pub final_loss: Option<LossBreakdown<f64>>,
}

pub fn report(
    state: &TrainState,
    scene: &SyntheticScene,
    field: &FeatureField,
    config: &LearnerConfig,
    seed: u64,
) -> Result<TrainReport> {
    let cands = to_candidates(state, field)?;
    let mut objects = Vec::with_capacity(scene.objects.len());
    for (o, obj) in scene.objects.iter().enumerate() {
        let gt_poly = obj.gt.to_polygon();
        let mut best: Option<(f64, usize, crate::Rect)> = None;
        for (i, c) in cands.iter().enumerate() {
            if state.candidates[i].object != o {
                continue;
            }
            let Ok(rect) = min_area_rect(&c.point_set) else {
                continue;
            };
            let Ok(poly) = rect.to_polygon() else {
                continue;
            };
            let iou = polygon_iou(&poly, &gt_poly)?;
            if best.as_ref().is_none_or(|b| iou > b.0) {
                best = Some((iou, i, rect));
            }
        }
        objects.push(match best {
            Some((iou, i, rect)) => ObjectReport {
                object: o,
                class: obj.class,
                best_candidate: Some(i),
                iou,
                orientation_error: Some(orientation_error(&rect, &obj.rect)),
            },
            None => ObjectReport {
                object: o,
                class: obj.class,
                best_candidate: None,
                iou: 0.0,
                orientation_error: None,
            },
        });
    }
    let assignment = assign(state, &cands, scene, config)?;
    let mut outside = 0;
    for (i, o) in assignment.positives() {
        let poly = scene.objects[o].gt.to_polygon();
        outside += cands[i]
            .point_set
            .points()
            .iter()
            .filter(|p| !poly.contains(**p))
            .count();
    }
    let n = objects.len() as f64;
    let errs: Vec<f64> = objects.iter().filter_map(|r| r.orientation_error).collect();
    Ok(TrainReport {
        seed,
        steps: state.history.len(),
        mean_iou: objects.iter().map(|r| r.iou).sum::<f64>() / n,
        mean_orientation_error: (!errs.is_empty())
            .then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        outside_points: outside,
        num_positives: assignment.num_positives(),
        final_learn_rate: state.learn_rate,
        skipped_degenerate: state.skipped_degenerate,
        empty_steps: state.empty_steps,
        final_loss: state.history.last().copied(),
        objects,
    })
}

/// Generates the scene and field for `seed`, runs the init stage and
/// `config.steps` refine steps.
pub fn train(seed: u64, config: &LearnerConfig) -> Result<(TrainState, TrainReport)> {
    config.validate()?;
    let scene = gen_scene(seed, &config.scene)?;
    let field = FeatureField::generate(
        &scene,
        config.field_stride,
        config.feature_dim,
        config.noise,
        seed,
    )?;
    let mut state = TrainState::new(init_stage(&scene, &field, config)?, config.learn_rate);
    for _ in 0..config.steps {
        refine_step(&mut state, &scene, &field, config)?;
    }
    let rep = report(&state, &scene, &field, config, seed)?;
    Ok((state, rep))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scenes: Vec<TrainReport>,
    pub mean_iou: f64,
    pub mean_orientation_error: Option<f64>,
    pub mean_outside_points: f64,
}

/// Trains on seeds `first_seed .. first_seed + scenes`.
pub fn benchmark(
    config: &LearnerConfig,
    first_seed: u64,
    scenes: usize,
) -> Result<BenchmarkReport> {
    if scenes == 0 {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one scene".into(),
        ));
    }
    let reports = (0..scenes as u64)
        .map(|s| train(first_seed + s, config).map(|r| r.1))
        .collect::<Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    let errs: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.mean_orientation_error)
        .collect();
    Ok(BenchmarkReport {
        mean_iou: reports.iter().map(|r| r.mean_iou).sum::<f64>() / n,
        mean_orientation_error: (!errs.is_empty())
            .then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        mean_outside_points: reports.iter().map(|r| r.outside_points as f64).sum::<f64>() / n,
        scenes: reports,
    })
}
