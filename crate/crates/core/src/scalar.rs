//! Floating-point abstraction used by every numeric kernel in this crate.
//!
//! All solvers are written against [`Scalar`] rather than a concrete float so the same
//! code instantiates at `f64` (the default throughout the crate root aliases) and `f32`
//! (useful for quick-and-dirty sweeps and for catching accidental precision assumptions
//! in tests). The trait is a thin bundle over `num_traits::Float` plus the assignment
//! operators and conversions the kernels actually use — nothing here is exotic.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type for probability flows, adjoints, controls, and costs.
///
/// Implemented for `f32` and `f64`. Code generic over `S: Scalar` must route every
/// literal through [`Scalar::lit`] so the constant is rounded once, at the use site.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts a finite `f64` literal into `Self`.
    ///
    /// Panics on values that do not convert (NaN never does; for `f32` targets the
    /// conversion rounds). Only meant for compile-time constants, hence the panic
    /// instead of a `Result`.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("numeric literal must be representable in the scalar type")
    }

    /// Widens to `f64` for diagnostics and error reporting.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses the decimal form produced by this type's `Display`. The pair is
    /// lossless: `parse_str(format!("{x}")) == Some(x)` for every finite `x`, which
    /// is what makes the CSV artifacts exact round-trips.
    fn parse_str(text: &str) -> Option<Self>;
}

impl Scalar for f32 {
    #[inline]
    fn parse_str(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}

impl Scalar for f64 {
    #[inline]
    fn parse_str(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}
