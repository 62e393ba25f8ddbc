//! Scalar component types and the carrier abstraction.
//!
//! `Scalar` is the component type stored inside an [`crate::hdual::HDual`]
//! (plain `f64`, or [`crate::analysis::CountingScalar`] when tallying
//! arithmetic). `AdNum` is the carrier a differentiable function body is
//! generic over: any `Scalar` is a carrier, and so is `HDual` itself, which
//! is what lets one function body produce values, gradients and Hessian
//! chunks depending on what it is evaluated on.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real-number component: IEEE-754 double semantics, copyable, orderable.
pub trait Scalar:
    Copy
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(c: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
    /// Sign with the subgradient convention `sign(0) = 0`.
    fn signum0(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn signum0(self) -> Self {
        if self == 0.0 {
            0.0
        } else {
            f64::signum(self)
        }
    }
}

/// The value carrier a differentiable function body runs over.
///
/// Mixed-scalar arithmetic (`carrier op f64`) is part of the contract so
/// function bodies can use literal constants without lifting them by hand.
pub trait AdNum:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    /// Lift a constant: derivative parts, if any, are zero.
    fn constant(c: f64) -> Self;
    /// The plain value component.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
}

impl<S> AdNum for S
where
    S: Scalar
        + Add<f64, Output = S>
        + Sub<f64, Output = S>
        + Mul<f64, Output = S>
        + Div<f64, Output = S>,
{
    #[inline]
    fn constant(c: f64) -> Self {
        S::from_f64(c)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.to_f64()
    }
    #[inline]
    fn sin(self) -> Self {
        Scalar::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        Scalar::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        Scalar::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        Scalar::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        Scalar::ln(self)
    }
    #[inline]
    fn abs(self) -> Self {
        Scalar::abs(self)
    }
}
