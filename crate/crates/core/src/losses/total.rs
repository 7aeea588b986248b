use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stage and focal-loss weights. Defaults: `lambda1 = 0.3`, `lambda2 = 1.0`,
/// `alpha = 0.25`, `gamma = 2.0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub focal_alpha: T,
    pub focal_gamma: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            lambda1: T::lit(0.3),
            lambda2: T::lit(1.0),
            focal_alpha: T::lit(0.25),
            focal_gamma: T::lit(2.0),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("focal_alpha", self.focal_alpha),
            ("focal_gamma", self.focal_gamma),
        ] {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Sum of per-candidate classification losses and the candidate count.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClsTerms<T> {
    pub sum: T,
    pub count: usize,
}

/// Accumulated localization and spatial-constraint terms for one stage.
///
/// `loc_sum` is summed over positives and normalized by `n_pos`;
/// `sc_sum` holds one per-object spatial loss for each of `n_objects`
/// objects with positives and is averaged over them.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTerms<T> {
    pub loc_sum: T,
    pub n_pos: usize,
    pub sc_sum: T,
    pub n_objects: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown<T> {
    pub cls: T,
    pub loc_init: T,
    pub loc_refine: T,
    pub sc_init: T,
    pub sc_refine: T,
    pub total: T,
    /// Set when the refinement stage had no positives and its terms are 0.
    pub empty_refine: bool,
    pub empty_init: bool,
}

impl<T: Scalar> LossBreakdown<T> {
    /// Combines already-normalized components.
    pub fn from_components(
        cls: T,
        loc_init: T,
        sc_init: T,
        loc_refine: T,
        sc_refine: T,
        w: &LossWeights<T>,
    ) -> Self {
        Self {
            cls,
            loc_init,
            loc_refine,
            sc_init,
            sc_refine,
            total: cls + w.lambda1 * (loc_init + sc_init) + w.lambda2 * (loc_refine + sc_refine),
            empty_refine: false,
            empty_init: false,
        }
    }
}

fn mean<T: Scalar>(sum: T, n: usize) -> T {
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize(n).expect("count fits scalar")
    }
}

/// Classification is averaged over all candidates, localization over each
/// stage's own positive count.
pub fn total_loss<T: Scalar>(
    cls: &ClsTerms<T>,
    init: &StageTerms<T>,
    refine: &StageTerms<T>,
    w: &LossWeights<T>,
) -> LossBreakdown<T> {
    let mut out = LossBreakdown::from_components(
        mean(cls.sum, cls.count),
        mean(init.loc_sum, init.n_pos),
        mean(init.sc_sum, init.n_objects),
        mean(refine.loc_sum, refine.n_pos),
        mean(refine.sc_sum, refine.n_objects),
        w,
    );
    out.empty_init = init.n_pos == 0;
    out.empty_refine = refine.n_pos == 0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_everywhere() {
        let b = total_loss::<f64>(
            &ClsTerms::default(),
            &StageTerms::default(),
            &StageTerms::default(),
            &LossWeights::default(),
        );
        assert_eq!(b.total, 0.0);
        assert!(b.empty_refine && b.empty_init);
    }

    #[test]
    fn stage_weighting() {
        let b =
            LossBreakdown::<f64>::from_components(1.0, 1.0, 0.0, 1.0, 0.0, &LossWeights::default());
        assert!((b.total - 2.3).abs() < 1e-15);
    }

    #[test]
    fn normalization_counts() {
        let b = total_loss(
            &ClsTerms { sum: 4.0, count: 8 },
            &StageTerms {
                loc_sum: 3.0,
                n_pos: 3,
                sc_sum: 0.5,
                n_objects: 1,
            },
            &StageTerms {
                loc_sum: 1.0,
                n_pos: 4,
                sc_sum: 1.0,
                n_objects: 2,
            },
            &LossWeights::default(),
        );
        assert_eq!(b.cls, 0.5);
        assert_eq!(b.loc_init, 1.0);
        assert_eq!(b.loc_refine, 0.25);
        assert_eq!(b.sc_refine, 0.5);
        assert!(!b.empty_refine);
    }

    #[test]
    fn weights_validate() {
        let mut w = LossWeights::<f64>::default();
        assert!(w.validate().is_ok());
        w.lambda1 = -1.0;
        assert!(w.validate().is_err());
    }
}
