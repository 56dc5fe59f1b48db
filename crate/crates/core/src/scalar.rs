//! Scalar abstraction shared by every numerical kernel.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: implemented for `f32` and `f64`.
///
/// Integrals, CI coefficients, density matrices and orbital coefficients are
/// all generic over this trait. File formats and random sampling go through
/// `f64` at the boundary.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or tolerance into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest meaningful symmetry tolerance at this precision.
    #[inline]
    fn symmetry_floor() -> Self {
        let eps = Self::default_epsilon() * Self::lit(64.0);
        if eps > Self::lit(1e-12) {
            eps
        } else {
            Self::lit(1e-12)
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Picks the looser of a requested tolerance and the precision floor of `T`.
pub(crate) fn tol<T: Real>(requested: f64) -> T {
    let floor = T::default_epsilon() * T::lit(64.0);
    let req = T::lit(requested);
    if req > floor {
        req
    } else {
        floor
    }
}
