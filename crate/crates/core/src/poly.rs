//! Dense univariate polynomials with real coefficients, plus Gaussian moment
//! helpers used by the closed-form conditional expectations.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// `Σ_p c_p x^p`, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn monomial(p: usize, c: f64) -> Self {
        let mut v = vec![0.0; p + 1];
        v[p] = c;
        Poly(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Coefficient of `x^p` (zero beyond the stored length).
    pub fn coeff(&self, p: usize) -> f64 {
        self.0.get(p).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, a: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * a).collect())
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(p, c)| p as f64 * c).collect())
    }

    /// Coefficient vector padded with zeros to `len`.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        (0..len).map(|p| self.coeff(p)).collect()
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Poly) -> f64 {
        let n = self.0.len().max(other.0.len());
        (0..n).map(|p| (self.coeff(p) - other.coeff(p)).abs()).fold(0.0, f64::max)
    }

    /// `E[P(x + y)]` as a polynomial in `x`, for a centered Gaussian `y` of
    /// variance `v`.
    pub fn gaussian_shift(&self, v: f64) -> Poly {
        self.gaussian_shift_times(0, v)
    }

    /// `E[P(x + y) · y^q]` as a polynomial in `x`, for a centered Gaussian `y`
    /// of variance `v`.
    pub fn gaussian_shift_times(&self, q: usize, v: f64) -> Poly {
        let mut out = vec![0.0; self.0.len().max(1)];
        for (j, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for r in 0..=j {
                let m = gaussian_moment(r + q, v);
                if m != 0.0 {
                    out[j - r] += c * binomial(j, r) * m;
                }
            }
        }
        Poly(out)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly((0..n).map(|p| self.coeff(p) + rhs.coeff(p)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly((0..n).map(|p| self.coeff(p) - rhs.coeff(p)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly(vec![0.0]);
        }
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(q-1)!!`, with `(-1)!! = 1`.
pub fn double_factorial_odd(q: usize) -> f64 {
    (1..q).step_by(2).map(|i| i as f64).product()
}

/// `E[y^q]` for a centered Gaussian of variance `v`.
pub fn gaussian_moment(q: usize, v: f64) -> f64 {
    if q % 2 == 1 {
        0.0
    } else {
        double_factorial_odd(q) * v.powi((q / 2) as i32)
    }
}
