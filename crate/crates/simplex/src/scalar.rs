use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field operations the dictionary pivots need.
///
/// The sign predicates carry the tolerance policy: `f64` compares against
/// small absolute thresholds, `BigRational` compares exactly.
pub trait Scalar: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;

    fn is_exact_zero(&self) -> bool;
    /// Reduced cost counts as improving.
    fn is_improving(&self) -> bool;
    /// Column entry is usable as a pivot (strictly negative in dictionary form).
    fn is_pivot_candidate(&self) -> bool;
    /// Strictly below zero beyond the feasibility tolerance.
    fn is_infeasible(&self) -> bool;
    fn lt(&self, other: &Self) -> bool;
    /// Equal within the ratio-test tolerance.
    fn near(&self, other: &Self) -> bool;
    /// Snap tiny negatives produced by rounding back to zero.
    fn clean(&mut self) {}
    /// Relaxation added to the right-hand side of row `row` while pivoting,
    /// so that ties in the ratio test are rare. Zero for exact types.
    fn perturbation(_row: usize, _rhs: &Self) -> Self {
        Self::zero()
    }
}

const F64_COST_EPS: f64 = 1e-10;
const F64_PIVOT_EPS: f64 = 1e-9;
const F64_FEAS_EPS: f64 = 1e-9;
const F64_RATIO_EPS: f64 = 1e-12;
const F64_PERTURB: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    #[inline]
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_improving(&self) -> bool {
        *self > F64_COST_EPS
    }
    fn is_pivot_candidate(&self) -> bool {
        *self < -F64_PIVOT_EPS
    }
    fn is_infeasible(&self) -> bool {
        *self < -F64_FEAS_EPS
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
    fn near(&self, other: &Self) -> bool {
        f64::abs(self - other) <= F64_RATIO_EPS * (1.0 + f64::abs(*self).max(f64::abs(*other)))
    }
    fn clean(&mut self) {
        if *self < 0.0 && *self > -F64_FEAS_EPS {
            *self = 0.0;
        }
    }
    fn perturbation(row: usize, rhs: &Self) -> Self {
        // Golden-ratio sequence: distinct, deterministic offsets in [1, 2).
        let u = (row as f64 * 0.618_033_988_749_895).fract();
        F64_PERTURB * (1.0 + u) * (1.0 + f64::abs(*rhs))
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    /// Simplest rational that rounds to `x` (so `0.1` becomes `1/10`);
    /// panics on non-finite input.
    fn from_f64(x: f64) -> Self {
        simplest_rounding_to(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn is_improving(&self) -> bool {
        self.is_positive()
    }
    fn is_pivot_candidate(&self) -> bool {
        self.is_negative()
    }
    fn is_infeasible(&self) -> bool {
        self.is_negative()
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
    fn near(&self, other: &Self) -> bool {
        self == other
    }
}

/// Simplest rational (least denominator, then least numerator) in the
/// closed interval of reals within half an ulp of `x`.
pub fn simplest_rounding_to(x: f64) -> BigRational {
    assert!(x.is_finite(), "finite f64");
    if x == 0.0 {
        return <BigRational as Zero>::zero();
    }
    let a = x.abs();
    let exact = BigRational::from_float(a).expect("finite f64");
    let up = BigRational::from_float(a.next_up()).expect("finite f64");
    let two = BigRational::from_integer(BigInt::from(2));
    let half = (&up - &exact) / &two;
    let lo = if a.next_down() > 0.0 {
        let down = BigRational::from_float(a.next_down()).expect("finite f64");
        &exact - (&exact - down) / &two
    } else {
        exact.clone() / &two
    };
    let mut r = simplest_between(lo, &exact + half);
    // A tie at the interval edge can round to the neighbour instead.
    if ToPrimitive::to_f64(&r) != Some(a) {
        r = exact;
    }
    if x < 0.0 {
        -r
    } else {
        r
    }
}

/// Simplest rational in `[lo, hi]` for `0 < lo <= hi`, by continued fractions.
fn simplest_between(lo: BigRational, hi: BigRational) -> BigRational {
    let c = lo.ceil();
    if c <= hi {
        return c;
    }
    let n = lo.floor();
    let inner = simplest_between((&hi - &n).recip(), (&lo - &n).recip());
    n + inner.recip()
}

/// Rational with the given integer numerator and denominator.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
