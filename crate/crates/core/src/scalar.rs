//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the solvers are generic over (`f32` or `f64`).
///
/// Tolerances in this crate are written as `f64` literals tuned for double
/// precision; [`Scalar::tol`] clamps them from below so that single precision
/// runs use thresholds the type can actually resolve.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Display + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64;

    /// Machine epsilon.
    fn eps() -> Self;

    /// `x` raised to at least a small multiple of machine epsilon.
    fn tol(x: f64) -> Self {
        let floor = Self::eps() * Self::lit(16.0);
        let t = Self::lit(x);
        if t < floor {
            floor
        } else {
            t
        }
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn eps() -> Self {
                <$t>::EPSILON
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
