//! Double-double arithmetic: an unevaluated sum of two `f64`s giving ~31
//! significant decimal digits.
//!
//! The billiard step near a glancing chord resolves quantities of size
//! eps^6 with eps down to 1e-3; those drown in `f64` roundoff, so the curve
//! pipeline runs on this type instead when that regime matters. Algorithms are
//! the classic error-free transformations (Dekker splitting, Knuth two-sum);
//! only the operations the [`crate::scalar::Real`] trait needs are provided,
//! each to full double-double accuracy.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::scalar::Real;

#[derive(Clone, Copy, PartialEq)]
pub struct DDouble {
    hi: f64,
    lo: f64,
}

const PI_HI: f64 = 3.141592653589793;
const PI_LO: f64 = 1.2246467991473532e-16;
const HALF_PI_HI: f64 = 1.5707963267948966;
const HALF_PI_LO: f64 = 6.123233995736766e-17;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Requires |a| >= |b| (or a == 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134217729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DDouble {
    #[inline]
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        DDouble { hi, lo }
    }

    #[inline]
    pub fn new(x: f64) -> Self {
        DDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        DDouble { hi: h, lo: l }
    }

    pub fn pi() -> Self {
        DDouble { hi: PI_HI, lo: PI_LO }
    }

    pub fn half_pi() -> Self {
        DDouble { hi: HALF_PI_HI, lo: HALF_PI_LO }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, mut e) = two_prod(self.hi, b);
        e += self.lo * b;
        Self::renorm(p, e)
    }

    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            Real::floor(self)
        } else {
            -Real::floor(-self)
        }
    }

    /// sin and cos on |r| <~ pi/4 + slack by Taylor series.
    fn sin_cos_reduced(self) -> (Self, Self) {
        let x2 = self * self;
        let mut term = self;
        let mut sin = self;
        let mut i = 1.0f64;
        loop {
            term = term * x2 / Self::new(-(2.0 * i) * (2.0 * i + 1.0));
            sin += term;
            i += 1.0;
            if term.hi.abs() < 1e-36 || i > 30.0 {
                break;
            }
        }
        let mut term = Self::one();
        let mut cos = Self::one();
        let mut i = 1.0f64;
        loop {
            term = term * x2 / Self::new(-(2.0 * i - 1.0) * (2.0 * i));
            cos += term;
            i += 1.0;
            if term.hi.abs() < 1e-36 || i > 30.0 {
                break;
            }
        }
        (sin, cos)
    }
}

impl Add for DDouble {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::renorm(s1, s2 + t2)
    }
}

impl Sub for DDouble {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for DDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for DDouble {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (p, mut e) = two_prod(self.hi, o.hi);
        e += self.hi * o.lo + self.lo * o.hi;
        Self::renorm(p, e)
    }
}

impl Div for DDouble {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self - o.mul_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o.mul_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self::renorm(hi, lo + q3)
    }
}

impl Rem for DDouble {
    type Output = Self;
    fn rem(self, o: Self) -> Self {
        self - o * (self / o).trunc()
    }
}

impl AddAssign for DDouble {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl SubAssign for DDouble {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl MulAssign for DDouble {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl DivAssign for DDouble {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}
impl RemAssign for DDouble {
    fn rem_assign(&mut self, o: Self) {
        *self = *self % o;
    }
}

impl PartialOrd for DDouble {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            ord => ord,
        }
    }
}

impl Zero for DDouble {
    fn zero() -> Self {
        DDouble { hi: 0.0, lo: 0.0 }
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DDouble {
    fn one() -> Self {
        DDouble { hi: 1.0, lo: 0.0 }
    }
}

impl fmt::Display for DDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.hi)
    }
}

impl fmt::Debug for DDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dd({:e}, {:e})", self.hi, self.lo)
    }
}

impl Real for DDouble {
    // 2^-104, the roundoff unit of a normalized double-double.
    const EPS: f64 = 4.93e-32;
    type Promoted = DDouble;

    fn from_f64(x: f64) -> Self {
        Self::new(x)
    }

    fn to_f64(self) -> f64 {
        self.hi
    }

    fn promote(self) -> DDouble {
        self
    }

    fn demote(x: DDouble) -> Self {
        x
    }

    fn pi() -> Self {
        Self::pi()
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if self.hi < 0.0 {
            return Self::new(f64::NAN);
        }
        let mut y = Self::new(self.hi.sqrt());
        let half = Self::new(0.5);
        y = half * (y + self / y);
        y = half * (y + self / y);
        y
    }

    fn cbrt(self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut y = Self::new(self.hi.cbrt());
        for _ in 0..2 {
            let y2 = y * y;
            y = y - (y2 * y - self) / (Self::new(3.0) * y2);
        }
        y
    }

    fn sin_cos(self) -> (Self, Self) {
        let k = (self.hi / HALF_PI_HI).round();
        let r = self - Self::half_pi().mul_f64(k);
        let (s, c) = r.sin_cos_reduced();
        let j = (k as i64).rem_euclid(4);
        match j {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn floor(self) -> Self {
        let f = self.hi.floor();
        if self.hi == f {
            let g = self.lo.floor();
            return Self::renorm(f, g);
        }
        let frac = self.hi - f;
        let adj = frac + self.lo;
        if adj >= 1.0 {
            Self::new(f + 1.0)
        } else if adj < 0.0 {
            Self::new(f - 1.0)
        } else {
            Self::new(f)
        }
    }

    fn round(self) -> Self {
        Real::floor(self + Self::new(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DDouble {
        DDouble::new(x)
    }

    #[test]
    fn add_keeps_low_bits() {
        let x = dd(1e16) + dd(1.0) - dd(1e16);
        assert_eq!(x.hi, 1.0);
        assert_eq!(x.lo, 0.0);
    }

    #[test]
    fn third_times_three() {
        let t = DDouble::one() / dd(3.0);
        let r = t * dd(3.0) - DDouble::one();
        assert!(r.hi.abs() < 1e-31, "{r:?}");
    }

    #[test]
    fn sqrt_squares_back() {
        let r = Real::sqrt(dd(2.0));
        let d = r * r - dd(2.0);
        assert!(d.hi.abs() < 1e-30, "{d:?}");
    }

    #[test]
    fn cbrt_cubes_back() {
        for v in [2.0, 8.0, 0.37] {
            let r = Real::cbrt(dd(v));
            let d = r * r * r - dd(v);
            assert!(d.hi.abs() < 1e-30, "{v}: {d:?}");
        }
    }

    #[test]
    fn trig_identities() {
        for v in [0.1, 0.7, 2.0, 5.9, 1000.0, -3.3] {
            let (s, c) = Real::sin_cos(dd(v));
            let r = s * s + c * c - DDouble::one();
            assert!(r.hi.abs() < 1e-30, "{v}: {r:?}");
            assert!((s.hi - v.sin()).abs() < 1e-14, "{v}");
            assert!((c.hi - v.cos()).abs() < 1e-14, "{v}");
        }
        let (s, _) = Real::sin_cos(DDouble::pi() / dd(6.0));
        let d = s - dd(0.5);
        assert!(d.hi.abs() < 1e-31, "{d:?}");
        // sin at an argument needing several reduction turns
        let (s, _) = Real::sin_cos(DDouble::pi().mul_f64(100.5));
        assert!((s.hi - 1.0).abs() < 1e-29);
    }

    #[test]
    fn floor_resolves_low_word() {
        let just_below = dd(3.0) - dd(1e-20);
        assert_eq!(Real::floor(just_below).hi, 2.0);
        let just_above = dd(3.0) + dd(1e-20);
        assert_eq!(Real::floor(just_above).hi, 3.0);
        assert_eq!(Real::floor(dd(2.5)).hi, 2.0);
        assert_eq!(Real::floor(dd(-2.5)).hi, -3.0);
    }

    #[test]
    fn division_round_trips() {
        let x = dd(0.123456789) + DDouble::from_parts(0.0, 3.1e-18);
        let y = dd(1.7);
        let r = (x / y) * y - x;
        assert!(r.hi.abs() < 1e-31, "{r:?}");
    }
}
