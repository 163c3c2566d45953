use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// The two scalar fields the solvers run over. Real matrices take the
/// `f64` path, which is several times cheaper.
pub(crate) trait Field:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + 'static
{
    const ZERO: Self;
    fn conj(self) -> Self;
    fn abs_sq(self) -> f64;
    fn abs(self) -> f64;
    fn scale(self, r: f64) -> Self;
    /// `z/|z|`, and 0 for 0.
    fn phase(self) -> Self;
    fn from_complex(z: Complex64) -> Self;
}

impl Field for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self * self
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    #[inline]
    fn scale(self, r: f64) -> Self {
        self * r
    }
    #[inline]
    fn phase(self) -> Self {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
}

impl Field for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn abs(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn scale(self, r: f64) -> Self {
        self * r
    }
    #[inline]
    fn phase(self) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Self::ZERO
        } else {
            self / r
        }
    }
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        z
    }
}

/// `|x|^e` with an integer fast path.
#[inline]
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e.abs() <= 16.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}
