use crate::error::{Error, Result};
use crate::geometry::{Point2, PointSet, QuadBox};
use crate::scalar::Scalar;

use super::{Evaluation, Objective, PointGrad};

/// Spatial constraint for one object: points outside the GT are penalized by
/// their distance to the GT center, averaged over the outside points of each
/// set and then over the `N_a` assigned sets. Boundary points count as inside.
pub fn spatial_constraint_loss<T: Scalar>(
    sets: &[PointSet<T>],
    gt: &QuadBox<T>,
) -> Result<(T, Vec<PointGrad<T>>)> {
    let slices: Vec<&[Point2<T>]> = sets.iter().map(|s| s.points()).collect();
    let (loss, grads, _) = spatial_on_slices(&slices, gt)?;
    Ok((loss, grads))
}

pub(crate) fn spatial_on_slices<T: Scalar>(
    sets: &[&[Point2<T>]],
    gt: &QuadBox<T>,
) -> Result<(T, Vec<PointGrad<T>>, Vec<i64>)> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument(
            "spatial constraint needs at least one assigned point set".into(),
        ));
    }
    let poly = gt.to_polygon();
    let center = gt.center();
    let n_a = T::from_usize(sets.len()).expect("count fits scalar");
    let mut total = T::zero();
    let mut grads = Vec::with_capacity(sets.len());
    let mut pieces = Vec::new();
    for pts in sets {
        let outside: Vec<usize> = (0..pts.len()).filter(|&i| !poly.contains(pts[i])).collect();
        let mut g = PointGrad::zeros(pts.len());
        pieces.extend(outside.iter().map(|&i| i as i64));
        pieces.push(-1);
        if !outside.is_empty() {
            let n_o = T::from_usize(outside.len()).expect("count fits scalar");
            let scale = T::one() / (n_a * n_o);
            for &i in &outside {
                let d = pts[i] - center;
                let r = d.norm();
                total += r * scale;
                g.0[i] = d * (scale / r);
            }
        }
        grads.push(g);
    }
    Ok((total, grads, pieces))
}

/// [`spatial_constraint_loss`] over flattened parameters; `set_sizes` splits
/// the flat point list into sets.
#[derive(Clone, Debug)]
pub struct SpatialConstraintLoss<T> {
    pub gt: QuadBox<T>,
    pub set_sizes: Vec<usize>,
}

impl<T: Scalar> Objective<T> for SpatialConstraintLoss<T> {
    fn evaluate(&self, params: &[T]) -> Result<Evaluation<T>> {
        let pts: Vec<_> = params
            .chunks_exact(2)
            .map(|c| Point2::new(c[0], c[1]))
            .collect();
        if self.set_sizes.iter().sum::<usize>() != pts.len() {
            return Err(Error::InvalidArgument(
                "set sizes do not cover the parameters".into(),
            ));
        }
        let mut slices = Vec::with_capacity(self.set_sizes.len());
        let mut start = 0;
        for &n in &self.set_sizes {
            slices.push(&pts[start..start + n]);
            start += n;
        }
        let (value, grads, pieces) = spatial_on_slices(&slices, &self.gt)?;
        Ok(Evaluation {
            value,
            grad: grads.iter().flat_map(|g| g.flatten()).collect(),
            pieces,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn gt() -> QuadBox<f64> {
        QuadBox::new([p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 1.0), p(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn all_inside_is_exactly_zero() {
        let s = PointSet::new(vec![p(0.0, 0.0), p(0.5, 0.5), p(1.0, 0.0), p(-1.0, -1.0)]).unwrap();
        let (l, g) = spatial_constraint_loss(&[s], &gt()).unwrap();
        assert_eq!(l, 0.0);
        assert!(g[0].0.iter().all(|v| *v == Point2::zero()));
    }

    #[test]
    fn single_outside_point() {
        let s = PointSet::new(vec![p(0.0, 0.0), p(2.0, 0.0), p(0.5, 0.5)]).unwrap();
        let (l, g) = spatial_constraint_loss(&[s], &gt()).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g[0].0[1], p(1.0, 0.0));
    }

    #[test]
    fn outside_points_are_averaged() {
        let thin = QuadBox::new([p(-2.0, -0.5), p(2.0, -0.5), p(2.0, 0.5), p(-2.0, 0.5)]).unwrap();
        let s = PointSet::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(0.0, -3.0), p(0.5, 0.2)]).unwrap();
        let (l, g) = spatial_constraint_loss(&[s], &thin).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g[0].0[1], p(0.0, 0.5));
        assert_eq!(g[0].0[2], p(0.0, -0.5));
    }

    #[test]
    fn averaged_over_assigned_sets() {
        let a = PointSet::new(vec![p(0.0, 0.0), p(2.0, 0.0), p(0.5, 0.5)]).unwrap();
        let b = PointSet::new(vec![p(0.0, 0.0), p(0.1, 0.0), p(0.5, 0.5)]).unwrap();
        let (l, g) = spatial_constraint_loss(&[a, b], &gt()).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g[0].0[1], p(0.5, 0.0));
        assert!(spatial_constraint_loss::<f64>(&[], &gt()).is_err());
    }
}
