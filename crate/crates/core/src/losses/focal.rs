use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Evaluation, Objective};

const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FocalValue<T> {
    pub loss: T,
    /// d(loss)/d(logit), where `p = sigmoid(logit)`.
    pub dlogit: T,
}

#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary focal loss of probability `p` for label `positive`.
///
/// `p` is clamped to `[1e-12, 1 - 1e-12]` before evaluation.
pub fn focal_loss<T: Scalar>(p: T, positive: bool, alpha: T, gamma: T) -> Result<FocalValue<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let eps = T::lit(PROB_CLAMP);
    let p = p.max(eps).min(T::one() - eps);
    let q = T::one() - p;
    Ok(if positive {
        let w = q.powf(gamma);
        FocalValue {
            loss: -alpha * w * p.ln(),
            dlogit: alpha * w * (gamma * p * p.ln() - q),
        }
    } else {
        let w = p.powf(gamma);
        let one_m_alpha = T::one() - alpha;
        FocalValue {
            loss: -one_m_alpha * w * q.ln(),
            dlogit: one_m_alpha * w * (p - gamma * q * q.ln()),
        }
    })
}

pub fn focal_loss_logit<T: Scalar>(
    logit: T,
    positive: bool,
    alpha: T,
    gamma: T,
) -> Result<FocalValue<T>> {
    focal_loss(sigmoid(logit), positive, alpha, gamma)
}

/// Focal loss as an objective of a single logit parameter.
#[derive(Clone, Copy, Debug)]
pub struct FocalLoss<T> {
    pub positive: bool,
    pub alpha: T,
    pub gamma: T,
}

impl<T: Scalar> Objective<T> for FocalLoss<T> {
    fn evaluate(&self, params: &[T]) -> Result<Evaluation<T>> {
        let [z] = params else {
            return Err(Error::InvalidArgument(
                "focal objective takes one logit".into(),
            ));
        };
        let v = focal_loss_logit(*z, self.positive, self.alpha, self.gamma)?;
        Ok(Evaluation {
            value: v.loss,
            grad: vec![v.dlogit],
            pieces: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confident_positive_is_nearly_free() {
        let v = focal_loss(1.0 - 1e-12, true, 0.25, 2.0).unwrap();
        assert!(v.loss < 1e-20);
    }

    #[test]
    fn half_probability_positive() {
        let v = focal_loss(0.5, true, 0.25, 2.0).unwrap();
        let expect = 0.25 * 0.25 * std::f64::consts::LN_2;
        assert!((v.loss - expect).abs() < 1e-15);
        assert!((v.loss - 0.04332).abs() < 1e-5);
    }

    #[test]
    fn negative_label_formula() {
        let v = focal_loss(0.3, false, 0.25, 2.0).unwrap();
        let expect = -(0.75) * 0.09 * (0.7f64).ln();
        assert!((v.loss - expect).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_probability() {
        assert!(focal_loss(1.5, true, 0.25, 2.0).is_err());
        assert!(focal_loss(-0.1, false, 0.25, 2.0).is_err());
        assert!(focal_loss(f64::NAN, false, 0.25, 2.0).is_err());
    }

    #[test]
    fn zero_gamma_reduces_to_weighted_bce_gradient() {
        let p: f64 = 0.3;
        let z = (p / (1.0 - p)).ln();
        let v = focal_loss_logit(z, true, 0.5, 0.0).unwrap();
        assert!((v.dlogit - 0.5 * (p - 1.0)).abs() < 1e-12);
    }
}
