//! Scalar types used by the evaluators.
//!
//! Networks store `f64` weights; evaluation can run in plain `f64` or in
//! double-double ([`Dd`], ~106 bits of mantissa) when error bounds fall below
//! `f64` resolution.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn is_positive(self) -> bool {
        self > Self::zero()
    }
    /// Multiply by an `f64` weight.
    fn scale(self, w: f64) -> Self {
        self * Self::from_f64(w)
    }
    /// `hi` extended below its last bit by `frac ∈ (−½, ½)` of a unit in the
    /// last place, where the type has room for it.
    fn refine(hi: f64, _frac: f64) -> Self {
        Self::from_f64(hi)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    #[inline]
    fn scale(self, w: f64) -> Self {
        self * w
    }
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn powi(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::new(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hi + self.lo)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        // long division, two correction steps
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        Dd::from_sum(q1, q2) + Dd::new(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}
impl SubAssign for Dd {
    fn sub_assign(&mut self, o: Dd) {
        *self = *self - o;
    }
}
impl MulAssign for Dd {
    fn mul_assign(&mut self, o: Dd) {
        *self = *self * o;
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, o: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&o.lo),
            c => Some(c),
        }
    }
}

impl Scalar for Dd {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dd::new(v)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    #[inline]
    fn scale(self, w: f64) -> Self {
        let (p, e) = two_prod(self.hi, w);
        let e = e + self.lo * w;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
    fn refine(hi: f64, frac: f64) -> Self {
        Dd::from_sum(hi, frac * hi.abs() * f64::EPSILON / 4.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_keeps_bits_beyond_f64() {
        let tiny = 2f64.powi(-80);
        let a = Dd::new(1.0) + Dd::new(tiny);
        assert_eq!(a.hi, 1.0);
        assert_eq!(a.lo, tiny);
        let b = a - Dd::new(1.0);
        assert_eq!(b.to_f64(), tiny);
    }

    #[test]
    fn dd_mul_matches_exact_product() {
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60, exactly representable as dd
        let x = Dd::new(1.0 + 2f64.powi(-30));
        let y = x * x;
        let r = y - Dd::new(1.0 + 2f64.powi(-29));
        assert_eq!(r.to_f64(), 2f64.powi(-60));
    }

    #[test]
    fn dd_div_roundtrip() {
        let a = Dd::new(1.0) / Dd::new(3.0);
        let back = a * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn dd_powi_and_order() {
        let third = Dd::new(1.0) / Dd::new(3.0);
        let p = third.powi(5);
        assert!((p.to_f64() - 1.0 / 243.0).abs() < 1e-18);
        assert!(Dd::new(1.0) > Dd::from_sum(1.0, -1e-20));
        assert_eq!(Dd::new(-2.0).abs().to_f64(), 2.0);
    }

    #[test]
    fn scale_is_exact_for_dyadic_weights() {
        let x = Dd::from_sum(1.0, 2f64.powi(-70));
        let y = x.scale(0.25);
        assert_eq!(y.hi, 0.25);
        assert_eq!(y.lo, 2f64.powi(-72));
    }
}
