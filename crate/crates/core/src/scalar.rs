//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the library computes in: `f32` or `f64`.
///
/// Tolerances throughout the crate are written as `f64` literals tuned for
/// double precision and converted through [`Scalar::tol`], which raises them
/// to a per-type floor so single precision stays decidable.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Smallest tolerance that is meaningful at this precision.
    const PRECISION_FLOOR: f64;

    /// Converts an `f64` constant. Panics only on NaN-free overflow, which
    /// cannot happen for the constants used in this crate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// A tolerance, clamped from below to [`Scalar::PRECISION_FLOOR`].
    fn tol(x: f64) -> Self {
        Self::of(x.max(Self::PRECISION_FLOOR))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const PRECISION_FLOOR: f64 = 0.0;
}

impl Scalar for f32 {
    const PRECISION_FLOOR: f64 = 1e-5;
}
