//! Scalar abstractions shared by every numerical kernel.
//!
//! All physics in this crate is written against [`Scalar`] so that the same
//! code runs in `f32` and `f64`. Matrix entries may be real or complex; both
//! implement [`Entry`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Real floating point type usable throughout the crate (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A requested absolute tolerance, floored at a small multiple of the
    /// machine epsilon so that `f32` callers get attainable bounds.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(requested).max(floor)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Element of a dense matrix: either a real scalar or a complex number.
pub trait Entry: Copy + PartialEq + Debug + Send + Sync + Num + Neg<Output = Self> + 'static {
    type Real: Scalar;

    fn modulus(self) -> Self::Real;
    fn conj(self) -> Self;
    fn from_real(r: Self::Real) -> Self;
    fn to_complex(self) -> Complex<Self::Real>;
    fn finite(self) -> bool;
}

impl<T: Scalar> Entry for T {
    type Real = T;

    #[inline]
    fn modulus(self) -> T {
        self.abs()
    }
    #[inline]
    fn conj(self) -> T {
        self
    }
    #[inline]
    fn from_real(r: T) -> T {
        r
    }
    #[inline]
    fn to_complex(self) -> Complex<T> {
        Complex::new(self, T::zero())
    }
    #[inline]
    fn finite(self) -> bool {
        Float::is_finite(self)
    }
}

impl<T: Scalar> Entry for Complex<T> {
    type Real = T;

    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    #[inline]
    fn to_complex(self) -> Complex<T> {
        self
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Shorthand for building a complex number from two real parts.
#[inline]
pub fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}
