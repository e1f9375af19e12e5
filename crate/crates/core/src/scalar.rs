//! Scalar abstraction for the probability arithmetic.
//!
//! Everything that evaluates a density works over [`Real`], so the same code
//! runs in `f64` (the default everywhere) and `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable for log-probability computations.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Natural log of the absolute value of the gamma function.
    fn log_gamma(self) -> Self;

    /// Lossy conversion from `f64`; used for literals and RNG draws.
    fn of(x: f64) -> Self;

    /// Conversion from a count.
    fn of_count(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn log_gamma(self) -> Self {
        libm::lgamma(self)
    }

    #[inline]
    fn of(x: f64) -> Self {
        x
    }
}

impl Real for f32 {
    #[inline]
    fn log_gamma(self) -> Self {
        libm::lgammaf(self)
    }

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(x)))` over a slice; `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let s: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}
