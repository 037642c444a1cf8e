//! Trigonometric series on a periodic interval, built from uniform samples.
//!
//! Everything downstream (curve tables, chord roots, area sums) evaluates
//! these series, so they carry the resolution bookkeeping: coefficients below
//! the scalar's roundoff floor are dropped, and a series whose spectrum still
//! has content in the top third of representable modes reports itself as
//! under-resolved rather than silently aliasing.
//!
//! The transform is a hand-rolled radix-2 FFT (twiddles from fresh `sin_cos`
//! calls each stage, so error stays near machine level) with a table-driven
//! direct transform for grids that are not powers of two. It is generic over
//! the scalar so the double-double pipeline reuses it unchanged.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cplx<S> {
    pub re: S,
    pub im: S,
}

impl<S: Real> Cplx<S> {
    #[inline]
    fn new(re: S, im: S) -> Self {
        Cplx { re, im }
    }

    #[inline]
    fn zero() -> Self {
        Cplx { re: S::zero(), im: S::zero() }
    }

    #[inline]
    fn add(self, o: Self) -> Self {
        Cplx::new(self.re + o.re, self.im + o.im)
    }

    #[inline]
    fn sub(self, o: Self) -> Self {
        Cplx::new(self.re - o.re, self.im - o.im)
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        Cplx::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Forward DFT, no normalization: X_m = sum_k x_k e^{-2 pi i m k / n}.
pub(crate) fn dft<S: Real>(buf: &mut Vec<Cplx<S>>) {
    let n = buf.len();
    if n.is_power_of_two() {
        fft_pow2(buf);
    } else {
        *buf = dft_naive(buf);
    }
}

fn fft_pow2<S: Real>(buf: &mut [Cplx<S>]) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2usize;
    while len <= n {
        let half = len / 2;
        let step = -(S::two_pi() / S::from_usize(len));
        // fresh twiddles each stage: total n-1 trig calls per transform
        let tw: Vec<Cplx<S>> = (0..half)
            .map(|k| {
                let (s, c) = (step * S::from_usize(k)).sin_cos();
                Cplx::new(c, s)
            })
            .collect();
        let mut start = 0;
        while start < n {
            for k in 0..half {
                let u = buf[start + k];
                let v = buf[start + k + half].mul(tw[k]);
                buf[start + k] = u.add(v);
                buf[start + k + half] = u.sub(v);
            }
            start += len;
        }
        len <<= 1;
    }
}

fn dft_naive<S: Real>(buf: &[Cplx<S>]) -> Vec<Cplx<S>> {
    let n = buf.len();
    let tw: Vec<Cplx<S>> = (0..n)
        .map(|j| {
            let (s, c) = (-(S::two_pi() * S::from_usize(j) / S::from_usize(n))).sin_cos();
            Cplx::new(c, s)
        })
        .collect();
    (0..n)
        .map(|m| {
            let mut acc = Cplx::zero();
            for (k, &x) in buf.iter().enumerate() {
                acc = acc.add(x.mul(tw[(m * k) % n]));
            }
            acc
        })
        .collect()
}

/// A real periodic function as a finite cos/sin series:
/// f(t) = c_0 + sum_{m>=1} c_m cos(2 pi m t / P) + s_m sin(2 pi m t / P).
#[derive(Clone, Debug)]
pub struct SpectralSeries<S> {
    period: S,
    cos: Vec<S>,
    sin: Vec<S>,
    /// Sample count this was built from; 0 when assembled from coefficients.
    grid: usize,
}

impl<S: Real> SpectralSeries<S> {
    pub fn from_samples(samples: &[S], period: S) -> Self {
        let n = samples.len();
        assert!(n >= 4, "need at least 4 samples");
        let mut buf: Vec<Cplx<S>> = samples.iter().map(|&x| Cplx::new(x, S::zero())).collect();
        dft(&mut buf);
        let nn = S::from_usize(n);
        let half = n / 2;
        let mut cos = vec![S::zero(); half + 1];
        let mut sin = vec![S::zero(); half + 1];
        cos[0] = buf[0].re / nn;
        let two = S::from_f64(2.0);
        for m in 1..half {
            cos[m] = two * buf[m].re / nn;
            sin[m] = -(two * buf[m].im / nn);
        }
        if n % 2 == 0 {
            cos[half] = buf[half].re / nn;
        } else {
            cos[half] = two * buf[half].re / nn;
            sin[half] = -(two * buf[half].im / nn);
        }
        let mut out = SpectralSeries { period, cos, sin, grid: n };
        out.truncate_roundoff();
        out
    }

    /// Raw constructor, no cleanup. Tiny coefficients stay: callers shaping
    /// spectra by hand (say dividing by 1 - m^2) may rely on a tail that only
    /// becomes significant after differentiation.
    pub fn from_parts(period: S, cos: Vec<S>, sin: Vec<S>) -> Self {
        SpectralSeries { period, cos, sin, grid: 0 }
    }

    pub fn constant(period: S, value: S) -> Self {
        SpectralSeries { period, cos: vec![value], sin: vec![S::zero()], grid: 0 }
    }

    pub fn period(&self) -> S {
        self.period
    }

    /// Largest mode index carried (inclusive).
    pub fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    pub fn cos_coeff(&self, m: usize) -> S {
        self.cos.get(m).copied().unwrap_or_else(S::zero)
    }

    pub fn sin_coeff(&self, m: usize) -> S {
        self.sin.get(m).copied().unwrap_or_else(S::zero)
    }

    pub fn mean(&self) -> S {
        self.cos_coeff(0)
    }

    fn peak(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    fn roundoff_floor(&self) -> f64 {
        32.0 * S::EPS * self.peak()
    }

    /// Floor for the aliasing check. Looser than the truncation floor: sample
    /// noise entering the transform gets amplified by the sampled function's
    /// steepness, which can leave a near-Nyquist plateau a few decades above
    /// roundoff, while genuine unresolved content at any practical grid sits
    /// orders of magnitude higher still.
    fn aliasing_floor(&self) -> f64 {
        8192.0 * S::EPS * self.peak()
    }

    fn truncate_roundoff(&mut self) {
        let tol = self.roundoff_floor();
        let live = |v: &[S]| {
            v.iter()
                .rposition(|c| c.to_f64().abs() > tol)
                .map_or(0, |p| p + 1)
        };
        let keep = live(&self.cos).max(live(&self.sin)).max(1);
        self.cos.truncate(keep);
        self.sin.truncate(keep.min(self.sin.len()));
        if self.sin.is_empty() {
            self.sin.push(S::zero());
        }
    }

    /// Error if spectral content survives into the top third of the modes the
    /// build grid could represent (aliasing would corrupt everything visible).
    pub fn check_resolved(&self) -> Result<()> {
        if self.grid == 0 {
            return Ok(());
        }
        let cutoff = self.grid / 3;
        let tol = self.aliasing_floor();
        for m in (0..=self.modes()).rev() {
            if self.cos_coeff(m).to_f64().abs() > tol || self.sin_coeff(m).to_f64().abs() > tol {
                if m >= cutoff {
                    return Err(Error::UnderResolved { grid: self.grid, mode: m });
                }
                break;
            }
        }
        Ok(())
    }

    /// Largest |sin coefficient|: the asymmetric residue of a function that
    /// should be even about t = 0.
    pub fn odd_part_max(&self) -> f64 {
        self.sin.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: S) -> S {
        let th = S::two_pi() * t / self.period;
        let (s1, c1) = th.sin_cos();
        let mut acc = self.cos_coeff(0);
        let (mut cm, mut sm) = (S::one(), S::zero());
        for m in 1..=self.modes() {
            let c_next = cm * c1 - sm * s1;
            let s_next = sm * c1 + cm * s1;
            cm = c_next;
            sm = s_next;
            acc = acc + self.cos_coeff(m) * cm + self.sin_coeff(m) * sm;
        }
        acc
    }

    pub fn sample_uniform(&self, n: usize) -> Vec<S> {
        (0..n)
            .map(|k| self.eval(self.period * S::from_usize(k) / S::from_usize(n)))
            .collect()
    }

    pub fn derivative(&self) -> Self {
        let omega = S::two_pi() / self.period;
        let top = self.modes();
        let mut cos = vec![S::zero(); top + 1];
        let mut sin = vec![S::zero(); top + 1];
        for m in 1..=top {
            let f = omega * S::from_usize(m);
            cos[m] = f * self.sin_coeff(m);
            sin[m] = -(f * self.cos_coeff(m));
        }
        SpectralSeries { period: self.period, cos, sin, grid: self.grid }
    }

    /// Antiderivative split as (mean slope, zero-mean periodic part):
    /// F(t) = mean * t + periodic(t), F' = self.
    pub fn antiderivative(&self) -> (S, Self) {
        let omega = S::two_pi() / self.period;
        let top = self.modes();
        let mut cos = vec![S::zero(); top + 1];
        let mut sin = vec![S::zero(); top + 1];
        for m in 1..=top {
            let f = omega * S::from_usize(m);
            sin[m] = self.cos_coeff(m) / f;
            cos[m] = -(self.sin_coeff(m) / f);
        }
        (
            self.mean(),
            SpectralSeries { period: self.period, cos, sin, grid: self.grid },
        )
    }

    /// a*f + b*g + shift, termwise. Periods must agree.
    pub fn combine(f: &Self, a: S, g: &Self, b: S, shift: S) -> Self {
        assert!(
            (f.period.to_f64() - g.period.to_f64()).abs() <= 1e-12 * f.period.to_f64().abs(),
            "period mismatch"
        );
        let top = f.modes().max(g.modes());
        let mut cos = vec![S::zero(); top + 1];
        let mut sin = vec![S::zero(); top + 1];
        for m in 0..=top {
            cos[m] = a * f.cos_coeff(m) + b * g.cos_coeff(m);
            sin[m] = a * f.sin_coeff(m) + b * g.sin_coeff(m);
        }
        cos[0] += shift;
        SpectralSeries { period: f.period, cos, sin, grid: f.grid.max(g.grid) }
    }

    /// Drops the sin part (projection onto functions even about t = 0).
    pub fn even_projected(mut self) -> Self {
        for s in &mut self.sin {
            *s = S::zero();
        }
        self
    }

    /// Drops the cos part (projection onto functions odd about t = 0).
    pub fn odd_projected(mut self) -> Self {
        for c in &mut self.cos {
            *c = S::zero();
        }
        self
    }

    /// Largest |cos coefficient|, the symmetric residue of a function that
    /// should be odd about t = 0.
    pub fn even_part_max(&self) -> f64 {
        self.cos.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: S) -> Self {
        SpectralSeries {
            period: self.period,
            cos: self.cos.iter().map(|&x| c * x).collect(),
            sin: self.sin.iter().map(|&x| c * x).collect(),
            grid: self.grid,
        }
    }

    pub fn to_f64(&self) -> SpectralSeries<f64> {
        SpectralSeries {
            period: self.period.to_f64(),
            cos: self.cos.iter().map(|c| c.to_f64()).collect(),
            sin: self.sin.iter().map(|c| c.to_f64()).collect(),
            grid: self.grid,
        }
    }

    /// The same series with coefficients widened to the promoted scalar.
    pub fn promoted(&self) -> SpectralSeries<S::Promoted> {
        SpectralSeries {
            period: self.period.promote(),
            cos: self.cos.iter().map(|c| c.promote()).collect(),
            sin: self.sin.iter().map(|c| c.promote()).collect(),
            grid: self.grid,
        }
    }
}
