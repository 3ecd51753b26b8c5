use nalgebra::DVector;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::data::ClassId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Logistic,
}

/// Output activation shared by every neuron of a classifier.
///
/// Binary targets are clamped to `[ε, 1 − ε]` before inversion so the
/// logit stays finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub clamp_epsilon: f64,
}

impl Default for ActivationSpec {
    fn default() -> Self {
        Self { kind: ActivationKind::Logistic, clamp_epsilon: 0.05 }
    }
}

impl ActivationSpec {
    pub fn logistic(clamp_epsilon: f64) -> Result<Self> {
        let spec = Self { kind: ActivationKind::Logistic, clamp_epsilon };
        spec.validate()?;
        Ok(spec)
    }

    /// ε must lie in `(0, 0.5]`; 0.5 collapses every target onto the
    /// sigmoid's symmetry point.
    pub fn validate(&self) -> Result<()> {
        let eps = self.clamp_epsilon;
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::input(format!("clamp epsilon must be in (0, 0.5], got {eps}")));
        }
        Ok(())
    }

    pub fn forward<T: Scalar>(&self, x: T) -> T {
        match self.kind {
            ActivationKind::Logistic => {
                // Split on sign so exp never overflows.
                if x >= T::zero() {
                    T::one() / (T::one() + Float::exp(-x))
                } else {
                    let e = Float::exp(x);
                    e / (T::one() + e)
                }
            }
        }
    }

    /// Logit of `y ∈ (0, 1)`.
    pub fn inverse<T: Scalar>(&self, y: T) -> T {
        match self.kind {
            ActivationKind::Logistic => Float::ln(y) - Float::ln_1p(-y),
        }
    }

    /// Derivative at pre-activation `x`, i.e. `σ(x)(1 − σ(x))`.
    pub fn derivative<T: Scalar>(&self, x: T) -> T {
        match self.kind {
            ActivationKind::Logistic => {
                let e = Float::exp(-Float::abs(x));
                let d = T::one() + e;
                e / (d * d)
            }
        }
    }

    /// Derivative expressed through the output value `y = σ(x)`.
    pub fn derivative_from_output<T: Scalar>(&self, y: T) -> T {
        match self.kind {
            ActivationKind::Logistic => y * (T::one() - y),
        }
    }
}

/// Per-sample training signals for one output neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedTargets<T: Scalar> {
    /// Clamped target in output space.
    pub y: DVector<T>,
    /// Target mapped back through the inverse activation.
    pub d_bar: DVector<T>,
    /// Activation derivative at the target, `y(1 − y)`.
    pub f_prime: DVector<T>,
}

/// One-vs-rest targets for `target_class`.
pub fn encode_targets<T: Scalar>(
    labels: &[ClassId],
    target_class: ClassId,
    activation: &ActivationSpec,
) -> Result<EncodedTargets<T>> {
    activation.validate()?;
    let eps = T::lit(activation.clamp_epsilon);
    // The logistic is odd-symmetric around 0.5, so the positive target is
    // the exact mirror of the negative one and both share one derivative.
    // Deriving both from ε keeps that symmetry bit-exact.
    let logit = activation.inverse(eps);
    let slope = activation.derivative_from_output(eps);
    let n = labels.len();
    let mut y = DVector::from_element(n, eps);
    let mut d_bar = DVector::from_element(n, logit);
    for (j, &label) in labels.iter().enumerate() {
        if label == target_class {
            y[j] = T::one() - eps;
            d_bar[j] = -logit;
        }
    }
    Ok(EncodedTargets { y, d_bar, f_prime: DVector::from_element(n, slope) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(eps: f64) -> ActivationSpec {
        ActivationSpec::logistic(eps).unwrap()
    }

    #[test]
    fn positive_target_encoding() {
        let t = encode_targets::<f64>(&[ClassId(3)], ClassId(3), &spec(0.05)).unwrap();
        assert_abs_diff_eq!(t.y[0], 0.95, epsilon = 1e-15);
        // ln(0.95 / 0.05) = ln 19
        assert_abs_diff_eq!(t.d_bar[0], 2.944_438_979_166_440_5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.f_prime[0], 0.0475, epsilon = 1e-15);
    }

    #[test]
    fn negative_target_encoding() {
        let t = encode_targets::<f64>(&[ClassId(1)], ClassId(3), &spec(0.05)).unwrap();
        assert_abs_diff_eq!(t.y[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(t.d_bar[0], -2.944_438_979_166_440_5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.f_prime[0], 0.0475, epsilon = 1e-15);
    }

    #[test]
    fn half_epsilon_is_symmetry_point() {
        let labels = [ClassId(0), ClassId(1), ClassId(0)];
        let t = encode_targets::<f64>(&labels, ClassId(0), &spec(0.5)).unwrap();
        for j in 0..3 {
            assert_eq!(t.y[j], 0.5);
            assert_eq!(t.d_bar[j], 0.0);
            assert_eq!(t.f_prime[j], 0.25);
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(ActivationSpec::logistic(0.0).is_err());
        assert!(ActivationSpec::logistic(0.6).is_err());
        assert!(ActivationSpec::logistic(f64::NAN).is_err());
    }

    #[test]
    fn forward_is_bounded_at_extremes() {
        let s = ActivationSpec::default();
        assert_eq!(s.forward(-1000.0f64), 0.0);
        assert!(s.forward(-700.0f64) > 0.0);
        assert!(s.forward(0.0f64) == 0.5);
        assert!(s.forward(30.0f64) < 1.0);
    }

    proptest! {
        // Below x ≈ 8 an f64 output near 1 still carries enough bits for a 1e-12 round trip.
        #[test]
        fn inverse_round_trips_tightly(x in -30.0f64..8.0) {
            let s = ActivationSpec::default();
            prop_assert!((s.inverse(s.forward(x)) - x).abs() <= 1e-12);
        }

        // Near 1 the output's spacing is 2⁻⁵³, so the recoverable precision
        // of x is bounded by that spacing divided by the slope y(1 − y).
        #[test]
        fn inverse_round_trips_within_conditioning(x in 8.0f64..=30.0) {
            let s = ActivationSpec::default();
            let y = s.forward(x);
            let bound = 2.0 * f64::EPSILON / s.derivative(x) + 1e-12;
            prop_assert!((s.inverse(y) - x).abs() <= bound);
        }

        #[test]
        fn forward_is_strictly_monotone(x in -30.0f64..30.0, dx in 1e-3f64..1.0) {
            let s = ActivationSpec::default();
            prop_assert!(s.forward(x + dx) > s.forward(x));
            let y = s.forward(x);
            prop_assert!(y > 0.0 && y < 1.0);
        }

        #[test]
        fn derivative_matches_output_form(x in -700.0f64..700.0) {
            let s = ActivationSpec::default();
            let d = s.derivative(x);
            prop_assert!(d > 0.0);
            if x.abs() < 30.0 {
                let y = s.forward(x);
                prop_assert!((d - y * (1.0 - y)).abs() <= 1e-15);
            }
        }
    }
}
