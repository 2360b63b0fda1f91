//! Conditional expectations `E[f | x_n]`.
//!
//! Two routes are provided. For polynomials of a Gaussian field the
//! expectation is computed in closed form from the increment
//! `x_m(s) = x_n(s) + y`, `y ~ N(0, σ_2(n, m))`. For general weighted
//! ensembles `E[f | x_n]` is estimated as the weighted least-squares
//! projection of `f` onto `{x_n(s)^p}_{p ≤ D}`, with block-jackknife errors.
//!
//! By translation covariance every estimate is computed at `s = 0`; values at
//! other points follow by translating the samples.

use nalgebra::{DMatrix, DVector};

use crate::ensemble::{check_ess, Ensemble};
use crate::error::{Error, Result};
use crate::free::FreeMeasureSpec;
use crate::jackknife::jackknife;
use crate::modes::FieldConfig;
use crate::poly::Poly;
use crate::JACKKNIFE_BLOCKS;

pub const MAX_OBSERVABLE_DEGREE: usize = 8;
pub const MAX_FIT_DEGREE: usize = 6;

/// A polynomial in `x_level(s)` at a fixed point.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialObservable {
    pub level: usize,
    pub poly: Poly,
}

impl PolynomialObservable {
    pub fn new(level: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_OBSERVABLE_DEGREE + 1 {
            return Err(Error::InvalidParameter(format!(
                "observable needs 1..={} coefficients, got {}",
                MAX_OBSERVABLE_DEGREE + 1,
                coeffs.len()
            )));
        }
        Ok(PolynomialObservable { level, poly: Poly::new(coeffs) })
    }

    pub fn degree(&self) -> usize {
        self.poly.coeffs().len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }
}

/// A fitted conditional expectation `Σ_p c_p x_n(s)^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct CEEstimate {
    pub level: usize,
    pub coefficients: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Weighted mean squared residual of the fit.
    pub residual: f64,
}

impl CEEstimate {
    pub fn poly(&self) -> Poly {
        Poly::new(self.coefficients.clone())
    }

    /// Human-readable basis labels.
    pub fn basis(&self) -> Vec<String> {
        (0..self.coefficients.len()).map(|p| format!("x_{}(s)^{p}", self.level)).collect()
    }
}

/// Differences below this are treated as roundoff in exact comparisons.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// Comparison of two coefficient vectors with error bars.
#[derive(Clone, Debug, PartialEq)]
pub struct Deviation {
    pub difference: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `max |difference|`.
    pub max_abs: f64,
    /// `max |difference| / stderr`; entries without stderr count as `0` up to
    /// roundoff and as `inf` beyond it.
    pub max_z: f64,
}

impl Deviation {
    pub fn new(difference: Vec<f64>, stderr: Vec<f64>) -> Self {
        let max_abs = difference.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let max_z = difference
            .iter()
            .zip(&stderr)
            .map(|(d, s)| {
                if *s > 0.0 {
                    d.abs() / s
                } else if d.abs() <= EXACT_TOLERANCE {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        Deviation { difference, stderr, max_abs, max_z }
    }

    /// Exact comparison (no sampling error).
    pub fn exact(difference: Vec<f64>) -> Self {
        let n = difference.len();
        Deviation::new(difference, vec![0.0; n])
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.max_z < sigmas
    }
}

/// `E[f(x_m(s)) | x_n]` for the free measure, as a polynomial in `x_n(s)`.
pub fn ce_gaussian_poly(f: &PolynomialObservable, n: usize, spec: &FreeMeasureSpec) -> Result<PolynomialObservable> {
    spec.check_level(f.level)?;
    if n > f.level {
        return Err(Error::InvalidParameter(format!("cannot condition level {} on finer level {n}", f.level)));
    }
    let v = spec.sigma2_band(n, f.level)?;
    Ok(PolynomialObservable { level: n, poly: f.poly.gaussian_shift(v) })
}

/// Weighted least-squares projector onto `{x^p}_{p ≤ degree}`.
///
/// The basis is rescaled by the weighted RMS of `x` before forming the normal
/// equations; coefficients are returned in the unscaled basis.
pub struct PolyProjector<'a> {
    x: &'a [f64],
    w: &'a [f64],
    degree: usize,
    scale: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> PolyProjector<'a> {
    pub fn new(x: &'a [f64], w: &'a [f64], degree: usize) -> Result<Self> {
        let total: f64 = w.iter().sum();
        let ms = x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>() / total;
        let scale = if ms > 0.0 && ms.is_finite() { ms.sqrt() } else { 1.0 };
        let k = degree + 1;
        let mut moments = vec![0.0; 2 * degree + 1];
        for (&xi, &wi) in x.iter().zip(w) {
            if wi == 0.0 {
                continue;
            }
            let t = xi / scale;
            let mut tp = wi;
            for m in moments.iter_mut() {
                *m += tp;
                tp *= t;
            }
        }
        let gram = DMatrix::from_fn(k, k, |i, j| moments[i + j] / total);
        // conditioning on the diagonally normalized Gram matrix
        let d: Vec<f64> = (0..k).map(|i| gram[(i, i)].sqrt()).collect();
        if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::RankDeficient { degree });
        }
        let normalized = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] / (d[i] * d[j]));
        let eig = normalized.symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if lo.is_nan() || lo <= 1e-13 * hi {
            return Err(Error::RankDeficient { degree });
        }
        let chol = gram.cholesky().ok_or(Error::RankDeficient { degree })?;
        Ok(PolyProjector { x, w, degree, scale, chol })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients `c_p` of the projection of `y`.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let k = self.degree + 1;
        let mut rhs = vec![0.0; k];
        let mut total = 0.0;
        for ((&xi, &wi), &yi) in self.x.iter().zip(self.w).zip(y) {
            if wi == 0.0 {
                continue;
            }
            total += wi;
            let t = xi / self.scale;
            let mut tp = wi * yi;
            for r in rhs.iter_mut() {
                *r += tp;
                tp *= t;
            }
        }
        let sol = self.chol.solve(&DVector::from_iterator(k, rhs.into_iter().map(|r| r / total)));
        sol.iter().enumerate().map(|(p, c)| c / self.scale.powi(p as i32)).collect()
    }

    /// Weighted mean squared residual of `y` against coefficients `c`.
    pub fn residual(&self, y: &[f64], c: &[f64]) -> f64 {
        let poly = Poly::new(c.to_vec());
        let (num, den) = self
            .x
            .iter()
            .zip(self.w)
            .zip(y)
            .fold((0.0, 0.0), |(n, d), ((&x, &w), &y)| (n + w * (y - poly.eval(x)).powi(2), d + w));
        num / den
    }
}

/// Weighted polynomial fit of `y` against `x`, with jackknife errors.
pub fn fit_with_errors(x: &[f64], y: &[f64], weights: &[f64], level: usize, degree: usize) -> Result<CEEstimate> {
    if degree > MAX_FIT_DEGREE {
        return Err(Error::InvalidParameter(format!("fit degree {degree} exceeds {MAX_FIT_DEGREE}")));
    }
    check_ess(weights)?;
    let jk = jackknife(weights, JACKKNIFE_BLOCKS, |w| Ok(PolyProjector::new(x, w, degree)?.project(y)))?;
    let residual = PolyProjector::new(x, weights, degree)?.residual(y, &jk.estimate);
    Ok(CEEstimate { level, coefficients: jk.estimate, stderr: jk.stderr, residual })
}

/// `E[f | x_n]` at `s = 0` by weighted regression on `{x_n(0)^p}_{p ≤ degree}`.
pub fn ce_mc<F>(f: F, ens: &Ensemble, n: usize, degree: usize) -> Result<CEEstimate>
where
    F: Fn(&FieldConfig, &[f64]) -> f64 + Sync,
{
    let s = vec![0.0; ens.spec().dim];
    ce_mc_at(f, ens, n, degree, &s)
}

/// `E[f(·, s) | x_n]` by regression on `{x_n(s)^p}`.
pub fn ce_mc_at<F>(f: F, ens: &Ensemble, n: usize, degree: usize, s: &[f64]) -> Result<CEEstimate>
where
    F: Fn(&FieldConfig, &[f64]) -> f64 + Sync,
{
    ens.spec().check_level(n)?;
    let feats = ens.point_features(s);
    let y: Vec<f64> = (0..ens.count()).map(|i| f(&ens.sample(i), s)).collect();
    fit_with_errors(feats.level(n), &y, ens.weights(), n, degree)
}

/// Closed-form tower check: `E[E[f | x_p] | x_n]` against `E[f | x_n]`.
pub fn tower_check_gaussian(f: &PolynomialObservable, n: usize, p: usize, spec: &FreeMeasureSpec) -> Result<Deviation> {
    if !(n <= p && p <= f.level) {
        return Err(Error::InvalidParameter(format!("need n <= p <= level, got {n}, {p}, {}", f.level)));
    }
    let direct = ce_gaussian_poly(f, n, spec)?;
    let two_stage = ce_gaussian_poly(&ce_gaussian_poly(f, p, spec)?, n, spec)?;
    let len = direct.poly.coeffs().len();
    Ok(Deviation::exact((&direct.poly - &two_stage.poly).padded(len)))
}

/// Monte Carlo tower check: one-shot regression on `x_n(0)` against the
/// two-stage regression through `x_p(0)`. Errors are jackknifed on the
/// difference itself.
pub fn tower_check_mc<F>(f: F, ens: &Ensemble, n: usize, p: usize, degree: usize) -> Result<Deviation>
where
    F: Fn(&FieldConfig, &[f64]) -> f64 + Sync,
{
    if !(n < p && p <= ens.spec().n_max) {
        return Err(Error::InvalidParameter(format!("need n < p <= N, got {n}, {p}")));
    }
    check_ess(ens.weights())?;
    let s = vec![0.0; ens.spec().dim];
    let feats = ens.point_features(&s);
    let y: Vec<f64> = (0..ens.count()).map(|i| f(&ens.sample(i), &s)).collect();
    let (xn, xp) = (feats.level(n), feats.level(p));
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        let direct = PolyProjector::new(xn, w, degree)?.project(&y);
        let inner = Poly::new(PolyProjector::new(xp, w, degree)?.project(&y));
        let inner_vals: Vec<f64> = xp.iter().map(|&x| inner.eval(x)).collect();
        let two_stage = PolyProjector::new(xn, w, degree)?.project(&inner_vals);
        Ok(direct.iter().zip(&two_stage).map(|(a, b)| a - b).collect())
    })?;
    Ok(Deviation::new(jk.estimate, jk.stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::sample_free;

    fn spec() -> FreeMeasureSpec {
        FreeMeasureSpec::new(1, 1.0, 4).unwrap()
    }

    #[test]
    fn gaussian_examples() {
        let spec = spec();
        let x = PolynomialObservable::new(3, vec![0.0, 1.0]).unwrap();
        assert_eq!(ce_gaussian_poly(&x, 1, &spec).unwrap().poly, Poly::new(vec![0.0, 1.0]));
        let sq = PolynomialObservable::new(3, vec![0.0, 0.0, 1.0]).unwrap();
        let v = spec.sigma2_band(1, 3).unwrap();
        assert_eq!(ce_gaussian_poly(&sq, 1, &spec).unwrap().poly, Poly::new(vec![v, 0.0, 1.0]));
        assert!(ce_gaussian_poly(&sq, 4, &spec).is_err());
        let too_high = PolynomialObservable::new(5, vec![1.0]).unwrap();
        assert!(ce_gaussian_poly(&too_high, 0, &spec).is_err());
    }

    #[test]
    fn wick_density_is_a_martingale_in_closed_form() {
        let spec = spec();
        for n in 0..4 {
            for m in n + 1..=4 {
                let s2m = spec.sigma2(m).unwrap();
                let s2n = spec.sigma2(n).unwrap();
                let f = PolynomialObservable::new(m, vec![3.0 * s2m * s2m, 0.0, -6.0 * s2m, 0.0, 1.0]).unwrap();
                let got = ce_gaussian_poly(&f, n, &spec).unwrap().poly;
                let want = Poly::new(vec![3.0 * s2n * s2n, 0.0, -6.0 * s2n, 0.0, 1.0]);
                assert!(got.max_abs_diff(&want) < 1e-10);
            }
        }
    }

    #[test]
    fn constant_observable_is_fixed() {
        let ens = sample_free(&spec(), 4000, 11).unwrap();
        let est = ce_mc(|_, _| 7.0, &ens, 2, 4).unwrap();
        assert!((est.coefficients[0] - 7.0).abs() < 1e-9);
        for c in &est.coefficients[1..] {
            assert!(c.abs() < 1e-9);
        }
        assert!(est.residual < 1e-15);
    }

    #[test]
    fn degenerate_design_is_rejected() {
        let x = vec![1.0; 500];
        let w = vec![1.0; 500];
        assert!(matches!(PolyProjector::new(&x, &w, 2), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn low_ess_is_rejected() {
        let ens = sample_free(&spec(), 50, 1).unwrap();
        assert!(matches!(ce_mc(|_, _| 1.0, &ens, 1, 2), Err(Error::LowEss { .. })));
    }

    #[test]
    fn projector_recovers_exact_polynomial() {
        let x: Vec<f64> = (0..200).map(|i| -2.0 + i as f64 * 0.02).collect();
        let w: Vec<f64> = (0..200).map(|i| 1.0 + (i % 3) as f64).collect();
        let truth = Poly::new(vec![0.5, -1.0, 0.25, 2.0, -0.125]);
        let y: Vec<f64> = x.iter().map(|&v| truth.eval(v)).collect();
        let c = PolyProjector::new(&x, &w, 4).unwrap().project(&y);
        assert!(Poly::new(c).max_abs_diff(&truth) < 1e-9);
    }
}
