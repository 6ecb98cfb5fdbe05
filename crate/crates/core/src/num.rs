//! Scalar abstraction: all numerics are generic over a real floating-point
//! type through [`Real`], with `f64` aliases exported at the crate root.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` literal (constants, tolerances, tableau coefficients).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i theta}` as a complex number.
pub fn cis<R: Real>(theta: R) -> Complex<R> {
    Complex::new(theta.cos(), theta.sin())
}

/// Imaginary unit.
pub fn i<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::one())
}

/// A real number promoted to a complex one.
pub fn re<R: Real>(x: R) -> Complex<R> {
    Complex::new(x, R::zero())
}
