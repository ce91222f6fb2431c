//! Abstract scalar used by every formula that must be evaluated both on
//! plain numbers and on the autodiff tape.
//!
//! Pose algebra, distances, the network forward pass and the losses are
//! written once against [`Scalar`]. Instantiated with `f64` they give plain
//! numeric values; instantiated with [`crate::autodiff::Var`] they record a
//! graph that can be differentiated. Both instantiations perform the same
//! floating point operations in the same order, so forward values agree
//! bit for bit.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Upper bound applied to the argument of `acos` when evaluating its slope.
///
/// `d/dx acos(x)` is unbounded at `x = 1`; the value itself is evaluated on
/// the unclamped (unit-clipped) argument.
pub const ACOS_SLOPE_CLAMP: f64 = 1.0 - 1e-7;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Numeric value.
    fn value(self) -> f64;

    /// A constant living in the same context as `self`.
    fn lift(self, c: f64) -> Self;

    /// Square root. The slope at zero is taken as zero.
    fn sqrt(self) -> Self;

    fn abs(self) -> Self;

    fn tanh(self) -> Self;

    fn relu(self) -> Self;

    /// `acos` of the argument clipped to `[-1, 1]`, with the slope evaluated
    /// at the argument clipped to `[-ACOS_SLOPE_CLAMP, ACOS_SLOPE_CLAMP]`.
    fn acos_unit(self) -> Self;

    /// `max(self, floor)` for a constant floor.
    fn max_const(self, floor: f64) -> Self;

    /// `bias + Σ weights[i] * inputs[i]`.
    fn affine(bias: Self, weights: &[Self], inputs: &[Self]) -> Self;

    /// A node with externally computed `value` and partial derivatives
    /// `partials[i] = ∂value/∂parents[i]`. `parents` must be non-empty.
    fn fused(value: f64, parents: &[Self], partials: &[f64]) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn lift(self, c: f64) -> Self {
        c
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }

    #[inline]
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }

    #[inline]
    fn acos_unit(self) -> Self {
        self.clamp(-1.0, 1.0).acos()
    }

    #[inline]
    fn max_const(self, floor: f64) -> Self {
        if self > floor {
            self
        } else {
            floor
        }
    }

    fn affine(bias: Self, weights: &[Self], inputs: &[Self]) -> Self {
        debug_assert_eq!(weights.len(), inputs.len());
        let mut acc = bias;
        for (w, x) in weights.iter().zip(inputs) {
            acc += w * x;
        }
        acc
    }

    fn fused(value: f64, _parents: &[Self], _partials: &[f64]) -> Self {
        value
    }
}

/// Slope of `acos` used by differentiable implementations of
/// [`Scalar::acos_unit`].
pub(crate) fn acos_unit_slope(x: f64) -> f64 {
    let c = x.clamp(-ACOS_SLOPE_CLAMP, ACOS_SLOPE_CLAMP);
    -1.0 / (1.0 - c * c).sqrt()
}
