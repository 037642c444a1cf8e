//! Even trigonometric maps on the unit circle and weight-graded sequence
//! spaces: the function side n(theta) = sum n_p cos(2 pi p theta) and the
//! sequence side u_q, each normed by sup of the index^gamma weighted entry.

use crate::error::{Error, Result};

/// 1-periodic even map held by its cosine coefficients, with the regularity
/// exponent used for its norm.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenFourierMap {
    coeffs: Vec<f64>,
    gamma: f64,
}

impl EvenFourierMap {
    pub fn new(coeffs: Vec<f64>, gamma: f64) -> Self {
        assert!(gamma.is_finite() && gamma > 0.0, "exponent must be positive");
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        EvenFourierMap { coeffs, gamma }
    }

    pub fn constant(value: f64, gamma: f64) -> Self {
        EvenFourierMap::new(vec![value], gamma)
    }

    /// Single mode cos(2 pi p theta).
    pub fn mode(p: usize, gamma: f64) -> Self {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[p] = 1.0;
        EvenFourierMap::new(coeffs, gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coeff(&self, p: usize) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest stored mode index.
    pub fn top_mode(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_deriv(theta, 0)
    }

    /// r-th derivative in theta: each mode picks up (2 pi p)^r and a quarter
    /// turn of phase per order.
    pub fn eval_deriv(&self, theta: f64, r: u32) -> f64 {
        let mut acc = 0.0;
        for (p, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let w = 2.0 * std::f64::consts::PI * p as f64;
            let phase = w * theta + r as f64 * std::f64::consts::FRAC_PI_2;
            acc += c * w.powi(r as i32) * phase.cos();
        }
        acc
    }

    /// sup over p >= 1 of p^gamma |n_p|, together with |n_0|.
    pub fn norm_gamma(&self) -> f64 {
        let mut best = self.coeff(0).abs();
        for (p, &c) in self.coeffs.iter().enumerate().skip(1) {
            best = best.max((p as f64).powf(self.gamma) * c.abs());
        }
        best
    }

    /// Cyclic average over the orbit of rotation by 1/q, returned as
    /// (plain, centered): the centered value has the mean coefficient
    /// removed. Computed both as a direct sum of point values and through
    /// the divisor identity (only modes divisible by q survive); the two
    /// must agree or the spectral data is inconsistent.
    pub fn cyclic_sum(&self, q: usize) -> Result<(f64, f64)> {
        assert!(q >= 1);
        let direct: f64 = (0..q).map(|j| self.eval(j as f64 / q as f64)).sum::<f64>() / q as f64;
        let mut divisor = 0.0;
        let mut m = 0;
        while m * q <= self.top_mode() {
            divisor += self.coeff(m * q);
            m += 1;
        }
        let scale = 1.0 + self.norm_gamma();
        if (direct - divisor).abs() > 1e-12 * scale {
            return Err(Error::InternalConsistency(format!(
                "cyclic average mismatch at q = {q}: direct {direct:.17e} vs divisor sum {divisor:.17e}"
            )));
        }
        Ok((divisor, divisor - self.coeff(0)))
    }

    /// Pointwise product, assembled exactly on the doubled mode window.
    pub fn product(&self, other: &EvenFourierMap) -> EvenFourierMap {
        let mut out = vec![0.0; self.top_mode() + other.top_mode() + 1];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let w = 0.5 * ca * cb;
                out[a + b] += w;
                out[a.abs_diff(b)] += w;
            }
        }
        EvenFourierMap::new(out, self.gamma)
    }
}

/// Sequence u_0..u_Q graded by the same sup-type norm as the map side.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSequence {
    entries: Vec<f64>,
    gamma: f64,
}

impl GammaSequence {
    pub fn new(entries: Vec<f64>, gamma: f64) -> Self {
        assert!(gamma.is_finite() && gamma > 0.0);
        let entries = if entries.is_empty() { vec![0.0] } else { entries };
        GammaSequence { entries, gamma }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn entry(&self, q: usize) -> f64 {
        self.entries.get(q).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn top_index(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn norm_gamma(&self) -> f64 {
        let mut best = self.entry(0).abs();
        for (q, &u) in self.entries.iter().enumerate().skip(1) {
            best = best.max((q as f64).powf(self.gamma) * u.abs());
        }
        best
    }
}

/// Riemann zeta for real s > 1 by Euler-Maclaurin with a short direct sum.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    let cut = 24.0f64;
    let mut acc = 0.0;
    let mut k = 1.0f64;
    while k < cut {
        acc += k.powf(-s);
        k += 1.0;
    }
    let n = cut;
    acc += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0;
    acc
}
