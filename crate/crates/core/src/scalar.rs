//! Floating-point abstraction shared by the math modules.
//!
//! Everything that touches beliefs, kernels or fused cells is generic over
//! [`Scalar`]. Mapping runs in `f64` by default; `f32` is supported but its
//! tolerances are correspondingly looser.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Largest tolerated deviation of `sum(b) + u` from one for a stored opinion.
    fn mass_tolerance() -> Self;

    /// Drift threshold above which a fused opinion is renormalized.
    fn renorm_tolerance() -> Self;

    /// Denominator floor for Dempster's rule; `1 - C` at or below this is total conflict.
    fn conflict_floor() -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::lit(std::f64::consts::TAU)
    }
}

impl Scalar for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
    fn renorm_tolerance() -> Self {
        1e-12
    }
    fn conflict_floor() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn mass_tolerance() -> Self {
        1e-5
    }
    fn renorm_tolerance() -> Self {
        1e-6
    }
    fn conflict_floor() -> Self {
        1e-6
    }
}
