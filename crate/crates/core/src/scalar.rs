//! Scalar abstraction for the numerical kernels.
//!
//! Everything below the fitting / linear-algebra layer (curve construction,
//! spectral series, billiard map, orbit solver) is generic over [`Real`] so the
//! same code path can run in `f64` for production work and in [`crate::dd::DDouble`]
//! when a computation needs headroom below the `f64` roundoff floor (the
//! glancing-orbit defect does). `f32` works too, with proportionally loose
//! tolerances.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{NumAssignOps, NumOps, One, Zero};

pub trait Real:
    Copy
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + NumOps
    + NumAssignOps
    + Neg<Output = Self>
{
    /// Unit roundoff of the representation; tolerances in generic code scale with this.
    const EPS: f64;

    /// A wider scalar for short plateau-sensitive stretches (root polishing,
    /// composed sampling), where jitter at this type's own roundoff would
    /// otherwise alias into spurious high-frequency spectral content.
    /// `DDouble` promotes to itself: there is nothing wider.
    type Promoted: Real;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn promote(self) -> Self::Promoted;
    fn demote(x: Self::Promoted) -> Self;
    fn pi() -> Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn cbrt(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn floor(self) -> Self;
    fn round(self) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
    fn two_pi() -> Self {
        Self::pi() + Self::pi()
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn powi(self, n: i32) -> Self {
        let mut out = Self::one();
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                out *= base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;
    type Promoted = crate::dd::DDouble;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn promote(self) -> crate::dd::DDouble {
        crate::dd::DDouble::new(self)
    }
    fn demote(x: crate::dd::DDouble) -> Self {
        x.to_f64()
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn cbrt(self) -> Self {
        f64::cbrt(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn round(self) -> Self {
        f64::round(self)
    }
}

impl Real for f32 {
    const EPS: f64 = f32::EPSILON as f64;
    type Promoted = f64;

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn promote(self) -> f64 {
        self as f64
    }
    fn demote(x: f64) -> Self {
        x as f32
    }
    fn pi() -> Self {
        std::f32::consts::PI
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn cbrt(self) -> Self {
        f32::cbrt(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f32::sin_cos(self)
    }
    fn floor(self) -> Self {
        f32::floor(self)
    }
    fn round(self) -> Self {
        f32::round(self)
    }
}

/// Wraps `t` into `[0, period)`.
pub fn wrap<S: Real>(t: S, period: S) -> S {
    let mut r = t - period * (t / period).floor();
    if r >= period {
        r -= period;
    }
    if r < S::zero() {
        r += period;
    }
    r
}
