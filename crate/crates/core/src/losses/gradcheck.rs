//! Central finite-difference gradient checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, PointSet, QuadBox, RotatedRect};
use crate::scalar::Scalar;

use super::{
    ConvexHullGiouLoss, FocalLoss, NearestCornerGiouLoss, Objective, SpatialConstraintLoss,
};

/// Pass threshold for the relative error reported by [`grad_check`].
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck<T> {
    /// `max_i |analytic_i - numeric_i|` divided by the larger of the two
    /// gradients' max-norms (floored at 1e-12).
    pub max_rel_error: T,
    pub max_abs_error: T,
    /// A finite-difference probe landed on a different smooth piece.
    pub piece_changed: bool,
}

/// Compares the analytic gradient of `op` at `params` with central
/// differences of step `h`.
pub fn grad_check<T: Scalar, O: Objective<T> + ?Sized>(
    op: &O,
    params: &[T],
    h: T,
) -> Result<GradCheck<T>> {
    if !(h >= T::lit(1e-8) && h <= T::lit(1e-4)) {
        return Err(Error::InvalidArgument(format!(
            "step {h} outside [1e-8, 1e-4]"
        )));
    }
    let base = op.evaluate(params)?;
    let mut numeric = Vec::with_capacity(params.len());
    let mut piece_changed = false;
    let mut x = params.to_vec();
    for i in 0..params.len() {
        x[i] = params[i] + h;
        let hi = op.evaluate(&x)?;
        x[i] = params[i] - h;
        let lo = op.evaluate(&x)?;
        x[i] = params[i];
        piece_changed |= hi.pieces != base.pieces || lo.pieces != base.pieces;
        numeric.push((hi.value - lo.value) / (h + h));
    }
    let scale = base
        .grad
        .iter()
        .chain(&numeric)
        .fold(T::lit(1e-12), |m, v| m.max(v.abs()));
    let max_abs_error = base
        .grad
        .iter()
        .zip(&numeric)
        .fold(T::zero(), |m, (a, n)| m.max((*a - *n).abs()));
    Ok(GradCheck {
        max_rel_error: max_abs_error / scale,
        max_abs_error,
        piece_changed,
    })
}

/// [`grad_check`] for point losses.
pub fn grad_check_points<T: Scalar, O: Objective<T> + ?Sized>(
    op: &O,
    set: &PointSet<T>,
    h: T,
) -> Result<GradCheck<T>> {
    let params: Vec<T> = set.points().iter().flat_map(|p| [p.x, p.y]).collect();
    grad_check(op, &params, h)
}

/// True when displacing any single coordinate by `±radius` changes the
/// smooth piece or makes the loss undefined.
pub fn near_piece_boundary<T: Scalar, O: Objective<T> + ?Sized>(
    op: &O,
    params: &[T],
    radius: T,
) -> bool {
    let Ok(base) = op.evaluate(params) else {
        return true;
    };
    let mut x = params.to_vec();
    for i in 0..params.len() {
        for s in [radius, -radius] {
            x[i] = params[i] + s;
            match op.evaluate(&x) {
                Ok(e) if e.pieces == base.pieces => {}
                _ => return true,
            }
        }
        x[i] = params[i];
    }
    false
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub loss: &'static str,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
}

impl SuiteRow {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_error < GRADCHECK_TOLERANCE
    }
}

fn random_gt(rng: &mut ChaCha8Rng) -> QuadBox<f64> {
    let w = rng.random_range(2.0..6.0);
    let h = rng.random_range(1.0..w);
    let c = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    RotatedRect::new(c, w, h, rng.random_range(-90.0..90.0))
        .to_quad()
        .expect("positive-size rect")
}

fn jitter(rng: &mut ChaCha8Rng, c: Point2<f64>, r: f64) -> Point2<f64> {
    c + Point2::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn flat(pts: &[Point2<f64>]) -> Vec<f64> {
    pts.iter().flat_map(|p| [p.x, p.y]).collect()
}

/// Draws one objective and the point at which to check it.
type CaseMaker<'a> = dyn FnMut(&mut ChaCha8Rng) -> (Box<dyn Objective<f64>>, Vec<f64>) + 'a;

/// Checks every differentiable loss on `cases` seeded configurations each,
/// skipping configurations within `1e-5` of a combinatorial boundary.
pub fn gradcheck_suite(seed: u64, cases: usize, h: f64) -> Vec<SuiteRow> {
    const BOUNDARY_RADIUS: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    let mut run = |name: &'static str, rng: &mut ChaCha8Rng, make: &mut CaseMaker| {
        let mut row = SuiteRow {
            loss: name,
            checked: 0,
            skipped: 0,
            max_rel_error: 0.0,
        };
        let mut attempts = 0;
        while row.checked < cases && attempts < cases * 50 {
            attempts += 1;
            let (op, params) = make(rng);
            if near_piece_boundary(op.as_ref(), &params, BOUNDARY_RADIUS) {
                row.skipped += 1;
                continue;
            }
            match grad_check(op.as_ref(), &params, h) {
                Ok(r) if !r.piece_changed => {
                    row.checked += 1;
                    row.max_rel_error = row.max_rel_error.max(r.max_rel_error);
                }
                _ => row.skipped += 1,
            }
        }
        rows.push(row);
    };

    run("giou_loss_convexhull", &mut rng, &mut |rng| {
        let gt = random_gt(rng);
        let c = gt.center();
        let spread = rng.random_range(0.5..4.0);
        let pts: Vec<_> = (0..9).map(|_| jitter(rng, c, spread)).collect();
        (Box::new(ConvexHullGiouLoss { gt }), flat(&pts))
    });

    run("giou_loss_nearestcorner", &mut rng, &mut |rng| {
        let gt = random_gt(rng);
        let mut pts: Vec<_> = gt.corners().iter().map(|&g| jitter(rng, g, 0.6)).collect();
        let c = gt.center();
        pts.extend((0..5).map(|_| jitter(rng, c, 0.5)));
        (Box::new(NearestCornerGiouLoss { gt }), flat(&pts))
    });

    run("spatial_constraint_loss", &mut rng, &mut |rng| {
        let gt = random_gt(rng);
        let c = gt.center();
        let pts: Vec<_> = (0..18).map(|_| jitter(rng, c, 4.0)).collect();
        (
            Box::new(SpatialConstraintLoss {
                gt,
                set_sizes: vec![9, 9],
            }),
            flat(&pts),
        )
    });

    run("focal_loss", &mut rng, &mut |rng| {
        let op = FocalLoss {
            positive: rng.random_bool(0.5),
            alpha: 0.25,
            gamma: 2.0,
        };
        (Box::new(op), vec![rng.random_range(-5.0..5.0)])
    });

    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Evaluation;

    struct Quadratic;

    impl Objective<f64> for Quadratic {
        fn evaluate(&self, p: &[f64]) -> Result<Evaluation<f64>> {
            Ok(Evaluation {
                value: p
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64 + 1.0) * v * v)
                    .sum(),
                grad: p
                    .iter()
                    .enumerate()
                    .map(|(i, v)| 2.0 * (i as f64 + 1.0) * v)
                    .collect(),
                pieces: Vec::new(),
            })
        }
    }

    #[test]
    fn quadratic_sanity() {
        let r = grad_check(&Quadratic, &[0.3, -1.2, 2.5], 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-10, "{r:?}");
        assert!(!r.piece_changed);
    }

    #[test]
    fn step_range_enforced() {
        assert!(grad_check(&Quadratic, &[1.0], 1e-3).is_err());
        assert!(grad_check(&Quadratic, &[1.0], 1e-9).is_err());
    }

    #[test]
    fn wrong_gradient_is_detected() {
        struct Wrong;
        impl Objective<f64> for Wrong {
            fn evaluate(&self, p: &[f64]) -> Result<Evaluation<f64>> {
                Ok(Evaluation {
                    value: p[0] * p[0],
                    grad: vec![p[0]],
                    pieces: Vec::new(),
                })
            }
        }
        assert!(grad_check(&Wrong, &[1.0], 1e-6).unwrap().max_rel_error > 0.4);
    }
}
