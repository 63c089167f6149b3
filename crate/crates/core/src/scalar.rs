use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::kernel::Factor;

/// Values a kernel can take. Real kernels run entirely on `f64`.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Zero
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + std::fmt::Debug
    + 'static
{
    fn from_real(x: f64) -> Self;
    fn factor(f: &Factor, t: f64) -> Self;
    fn modulus(self) -> f64;
    fn parts(self) -> (f64, f64);
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }

    #[inline]
    fn factor(f: &Factor, t: f64) -> Self {
        f.value_real(t)
    }

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    #[inline]
    fn factor(f: &Factor, t: f64) -> Self {
        f.value_complex(t)
    }

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}
