//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate assume `f64`; `f32` instantiations
/// compile and run but only meet single-precision accuracy.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Sum + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn from_i64_(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable")
    }

    #[inline]
    fn to_f64_(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `2^n` for a signed dyadic index.
    #[inline]
    fn pow2(n: i32) -> Self {
        Self::lit(2.0).powi(n)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A point or vector in three dimensions.
pub type Vec3<T> = [T; 3];

/// Velocity gradient, `m[i][j] = ∂ᵢuⱼ`.
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn zero3<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

#[inline]
pub fn add3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale3<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<T: Real>(a: Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

/// Largest absolute component.
#[inline]
pub fn max_abs3<T: Real>(a: Vec3<T>) -> T {
    a[0].abs().max(a[1].abs()).max(a[2].abs())
}

#[inline]
pub fn zero33<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

#[inline]
pub fn trace33<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] + m[1][1] + m[2][2]
}

/// `(u·∇)u` given `u` and `m[i][j] = ∂ᵢuⱼ`.
#[inline]
pub fn convective<T: Real>(u: Vec3<T>, m: &Mat3<T>) -> Vec3<T> {
    let mut out = zero3();
    for (j, o) in out.iter_mut().enumerate() {
        *o = u[0] * m[0][j] + u[1] * m[1][j] + u[2] * m[2][j];
    }
    out
}

/// `Σᵢⱼ ∂ᵢuⱼ ∂ⱼuᵢ`, which equals `∇·(u·∇u)` for divergence-free `u`.
#[inline]
pub fn grad_contraction<T: Real>(m: &Mat3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            s = s + m[i][j] * m[j][i];
        }
    }
    s
}
