//! Scalar abstractions.
//!
//! Two tiers: [`Scalar`] is enough for the parameter predicates (it admits exact
//! rationals such as `num_rational::Ratio<i64>`), while [`Real`] adds the
//! transcendental functions the solver and the functionals need.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Ordered field element usable by the threshold predicates.
pub trait Scalar: Num + PartialOrd + Copy + FromPrimitive + Debug {
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("dimension representable in scalar type")
    }

    /// `num / den` as a scalar, exact for rational types.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer representable") / Self::from_i64(den).expect("integer representable")
    }
}

impl<T> Scalar for T where T: Num + PartialOrd + Copy + FromPrimitive + Debug {}

/// Floating-point scalar for the numerical parts of the crate (`f32`, `f64`).
pub trait Real:
    Scalar + Float + FloatConst + ToPrimitive + Sum + Display + Default + Send + Sync + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Volume of the unit ball in `R^n`, via `V_n = V_{n-2} * 2π / n`.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let (mut v, start) = if n.is_multiple_of(2) { (T::one(), 2) } else { (T::lit(2.0), 3) };
    let mut k = start;
    while k <= n {
        v = v * two_pi / T::of_usize(k);
        k += 2;
    }
    v
}

/// Surface area of the unit sphere, `ω_n = n |B_1|`.
pub fn sphere_area<T: Real>(n: usize) -> T {
    T::of_usize(n) * unit_ball_volume::<T>(n)
}

/// `∫_a^c s^e ds` for `0 ≤ a ≤ c`, stable when `e` is close to `-1`.
///
/// Requires `a > 0` unless `e > -1`.
pub(crate) fn power_integral<T: Real>(a: T, c: T, e: T) -> T {
    if c <= a {
        return T::zero();
    }
    let k = e + T::one();
    if a == T::zero() {
        return c.powf(k) / k;
    }
    let log_ratio = (c / a).ln();
    if k == T::zero() {
        return log_ratio;
    }
    a.powf(k) * (k * log_ratio).exp_m1() / k
}
