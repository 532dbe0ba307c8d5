//! Floating-point scalar abstraction.
//!
//! Every numerical routine in this crate is generic over a [`Scalar`] so the
//! same code runs in `f32` or `f64`. The concrete aliases exported from the
//! crate root fix `f64`, which is what the convergence studies and the CLI
//! use; `f32` compiles and runs but cannot reach the tight linear-solve
//! tolerances the benchmarks require.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar used throughout the solver.
///
/// This bundles the `num-traits` capabilities the stencil and optimizer
/// formulas need (transcendentals via [`Float`], π constants via
/// [`FloatConst`], literal conversion via [`FromPrimitive`]) together with
/// the thread-safety bounds required for parallel sweeps over grid points.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only for non-finite inputs,
    /// which never occur for the fixed literals used internally.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal must convert to Scalar")
    }

    /// Lossy view as `f64`, used for reporting and error messages.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar must convert to f64")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
