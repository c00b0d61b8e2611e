//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use crate::dd::Dd;

/// Real scalar the physics is written against.
///
/// Implemented for `f32`, `f64` and the double-double [`Dd`]. The
/// extended type is what the near-critical sweeps run in: soft-mode
/// stiffnesses there scale like the square of the distance to the critical
/// coupling and drop below `f64` round-off long before the asymptotic
/// regime is reached.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Converts an `f64` literal; infallible for every implementor.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the working precision.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for Dd {
    fn eps() -> Self {
        Dd::new(2f64.powi(-104))
    }
}

pub type C<T> = Complex<T>;

/// `(cos θ, sin θ)` renormalized onto the unit circle.
pub fn unit_phase<T: Real>(theta: T) -> (T, T) {
    let (c, s) = (theta.cos(), theta.sin());
    let r = c.hypot(s);
    (c / r, s / r)
}

pub fn cis<T: Real>(theta: T) -> C<T> {
    let (c, s) = unit_phase(theta);
    C::new(c, s)
}
