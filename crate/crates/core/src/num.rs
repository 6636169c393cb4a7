//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftNum;

/// Gathers the traits the simulation and estimation code needs from a real
/// floating point type. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Machine-independent label used in serialized headers.
    const NAME: &'static str;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

macro_rules! impl_scalar {
    ($f:ty, $name:literal) => {
        impl Scalar for $f {
            const NAME: &'static str = $name;

            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$f>>::sample(&StandardNormal, rng)
            }

            #[inline]
            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }
        }
    };
}

impl_scalar!(f32, "f32");
impl_scalar!(f64, "f64");

/// Complex amplitude over a [`Scalar`].
pub type Complex<T> = num_complex::Complex<T>;

/// `true` when `x` is finite and strictly positive.
#[inline]
pub(crate) fn positive<T: Scalar>(x: T) -> bool {
    x.is_finite() && x > T::zero()
}
