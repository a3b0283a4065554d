//! Scalar abstraction shared by the numeric modules.

use nalgebra as na;
use num_complex::Complex;
use num_traits as nt;
use std::fmt;

/// Real floating point type the engine is generic over (`f32` or `f64`).
///
/// Matrices are always complex, with entries `Complex<R>`.
pub trait Real:
    na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + fmt::LowerExp + Default + Send + Sync
{
    /// Machine epsilon of the type as an `f64`.
    const EPS: f64;
}

impl Real for f32 {
    const EPS: f64 = f32::EPSILON as f64;
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;
}

/// Converts an `f64` literal into `R`.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    na::convert(x)
}

/// Converts `R` into `f64`.
#[inline]
pub fn to_f64<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<R: Real>(re: R, im: R) -> Complex<R> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<R: Real>(re: R) -> Complex<R> {
    Complex::new(re, R::zero())
}

/// Modulus `|z|`, computed without overflow.
#[inline]
pub fn cabs<R: Real>(z: Complex<R>) -> R {
    z.re.hypot(z.im)
}

/// Squared modulus without the square root.
#[inline]
pub fn norm_sqr<R: Real>(z: Complex<R>) -> R {
    z.re * z.re + z.im * z.im
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug)]
pub struct KahanSum<R> {
    sum: R,
    comp: R,
}

impl<R: Real> Default for KahanSum<R> {
    fn default() -> Self {
        Self { sum: R::zero(), comp: R::zero() }
    }
}

impl<R: Real> KahanSum<R> {
    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> R {
        self.sum + self.comp
    }
}

impl<R: Real> FromIterator<R> for KahanSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = KahanSum::<f64>::default();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn literal_roundtrip() {
        assert_eq!(lit::<f32>(0.5), 0.5f32);
        assert_eq!(to_f64(lit::<f64>(1e-12)), 1e-12);
    }
}
