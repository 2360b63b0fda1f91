//! Fixed-cutoff measure evolution `dμ_n/dλ = −(∫ 𝓛_n(μ_λ; s) ds) μ_n`.
//!
//! The measure is a free ensemble carrying per-sample log-weights; `−logw` is
//! the aggregate effective Lagrangian. Each step rebuilds `𝓛_n` from the
//! current measure, either as the Wick quartic of the current `σ_2`, `σ_4` or
//! through the α-series.
//!
//! Moments are torus averages, `σ_p = ⟨∫ x_n(s)^p ds⟩ / (2π)^d`, so the
//! refreshed Wick density has weighted mean exactly zero.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{series_point, SeriesTruncation};
use crate::appell::{wick4, PolynomialDensity, Slot};
use crate::ensemble::{check_ess, Ensemble, PointFeatures};
use crate::error::{Error, Result};
use crate::free::{sample_free, FreeMeasureSpec, GaussianOracle, LinearFunctional};
use crate::jackknife::{jackknife, weighted_mean};
use crate::modes::{FieldConfig, TorusGrid};
use crate::poly::Poly;
use crate::JACKKNIFE_BLOCKS;

/// Default step size.
pub const DEFAULT_DLAMBDA: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Euler,
    /// Midpoint rule: the density is refreshed at the half step.
    Rk2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refresh {
    #[default]
    Wick,
    /// α-series on the current ensemble, truncated at the ensemble's top
    /// cutoff, with functional coefficients of the given degree.
    AlphaSeries { degree: usize },
}

/// Per-sample data shared by every state of one flow.
#[derive(Debug)]
struct FlowData {
    base: Ensemble,
    /// `∫ x_n(s)^j ds`, `[j][sample]`.
    integrals: Vec<Vec<f64>>,
    /// Point values at `s = 0`, for α-series refresh.
    features: Option<PointFeatures>,
    volume: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub lambda: f64,
    pub level: usize,
    pub integrator: Integrator,
    pub refresh: Refresh,
    data: Arc<FlowData>,
    logw: Vec<f64>,
    sigma2: f64,
    sigma4: f64,
    density: PolynomialDensity,
}

/// Free ensemble at `λ = 0`, Wick density from the exact free moments.
pub fn flow_init(spec: &FreeMeasureSpec, n: usize, count: usize, seed: u64) -> Result<FlowState> {
    FlowState::init(spec, n, count, seed, Integrator::Euler, Refresh::Wick)
}

impl FlowState {
    pub fn init(
        spec: &FreeMeasureSpec,
        n: usize,
        count: usize,
        seed: u64,
        integrator: Integrator,
        refresh: Refresh,
    ) -> Result<FlowState> {
        spec.check_level(n)?;
        let max_power = match refresh {
            Refresh::Wick => 4,
            Refresh::AlphaSeries { degree } => {
                if n >= spec.n_max {
                    return Err(Error::InvalidParameter(format!(
                        "α-series refresh needs a level below the top cutoff {}, got {n}",
                        spec.n_max
                    )));
                }
                if degree > 4 {
                    return Err(Error::InvalidParameter(format!("α-series degree {degree} exceeds 4")));
                }
                4 + degree
            }
        };
        let base = sample_free(spec, count, seed)?;
        let integrals = base.level_power_integrals(n, max_power)?;
        let features = match refresh {
            Refresh::Wick => None,
            Refresh::AlphaSeries { .. } => Some(base.point_features(&vec![0.0; spec.dim])),
        };
        let volume = TorusGrid::new(spec.dim, 1).volume();
        let s2 = spec.sigma2(n)?;
        let s4 = 3.0 * s2 * s2;
        let data = Arc::new(FlowData { base, integrals, features, volume });
        Ok(FlowState {
            lambda: 0.0,
            level: n,
            integrator,
            refresh,
            data,
            logw: vec![0.0; count],
            sigma2: s2,
            sigma4: s4,
            density: PolynomialDensity::wick(n, s2, s4),
        })
    }

    pub fn base(&self) -> &Ensemble {
        &self.data.base
    }

    pub fn logw(&self) -> &[f64] {
        &self.logw
    }

    pub fn weights(&self) -> Vec<f64> {
        self.logw.iter().map(|l| l.exp()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.logw.iter().map(|l| l.exp()).sum()
    }

    pub fn ess(&self) -> f64 {
        crate::jackknife::effective_sample_size(&self.weights())
    }

    /// Current `σ_2(n)`, `σ_4(n)` the density was built from.
    pub fn moments(&self) -> (f64, f64) {
        (self.sigma2, self.sigma4)
    }

    pub fn density(&self) -> &PolynomialDensity {
        &self.density
    }

    /// `∫ 𝓛(x_n(s)) ds` per sample.
    pub fn integrated_density(&self, density: &PolynomialDensity) -> Vec<f64> {
        let c = density.total_poly();
        let ints = &self.data.integrals;
        (0..self.logw.len())
            .into_par_iter()
            .map(|i| c.coeffs().iter().enumerate().map(|(j, a)| a * ints[j][i]).sum())
            .collect()
    }

    fn torus_moments(&self, w: &[f64]) -> (f64, f64) {
        let ints = &self.data.integrals;
        let v = self.data.volume;
        (weighted_mean(w, &ints[2]) / v, weighted_mean(w, &ints[4]) / v)
    }

    fn rebuild(&self, logw: &[f64]) -> Result<(f64, f64, PolynomialDensity)> {
        let w: Vec<f64> = logw.iter().map(|l| l.exp()).collect();
        check_ess(&w)?;
        let (s2, s4) = self.torus_moments(&w);
        let density = match self.refresh {
            Refresh::Wick => PolynomialDensity::wick(self.level, s2, s4),
            Refresh::AlphaSeries { degree } => {
                let feats = self.data.features.as_ref().expect("features present in α-series mode");
                let trunc = SeriesTruncation::new(self.data.base.spec().n_max, degree);
                let alpha = series_point(feats, &w, trunc)?;
                let [a0, a1, a2, a3] = alpha[self.level].clone();
                let slot = |p: Poly| Slot::from_poly(p, None);
                PolynomialDensity::new(self.level, [slot(a0), slot(a1), slot(a2), slot(a3)])
            }
        };
        Ok((s2, s4, density))
    }

    /// Advances `λ` by `dlambda`.
    pub fn flow_step(&self, dlambda: f64) -> Result<FlowState> {
        if !(dlambda >= 0.0 && dlambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be finite and non-negative, got {dlambda}")));
        }
        if dlambda == 0.0 {
            return Ok(self.clone());
        }
        let rate = match self.integrator {
            Integrator::Euler => self.integrated_density(&self.density),
            Integrator::Rk2 => {
                let k1 = self.integrated_density(&self.density);
                let mid: Vec<f64> = self.logw.iter().zip(&k1).map(|(l, k)| l - 0.5 * dlambda * k).collect();
                let (_, _, mid_density) = self.rebuild(&mid)?;
                self.integrated_density(&mid_density)
            }
        };
        let logw: Vec<f64> = self.logw.iter().zip(&rate).map(|(l, k)| l - dlambda * k).collect();
        let (sigma2, sigma4, density) = self.rebuild(&logw)?;
        Ok(FlowState {
            lambda: self.lambda + dlambda,
            level: self.level,
            integrator: self.integrator,
            refresh: self.refresh,
            data: self.data.clone(),
            logw,
            sigma2,
            sigma4,
            density,
        })
    }

    /// Weighted mean and jackknife error of per-sample values.
    pub fn observable_values(&self, values: &[f64]) -> Result<(f64, f64)> {
        if values.len() != self.logw.len() {
            return Err(Error::DimensionMismatch { expected: self.logw.len(), got: values.len() });
        }
        let w = self.weights();
        check_ess(&w)?;
        let jk = jackknife(&w, JACKKNIFE_BLOCKS, |w| Ok(vec![weighted_mean(w, values)]))?;
        Ok((jk.estimate[0], jk.stderr[0]))
    }

    /// `⟨f⟩` under the current measure.
    pub fn observable<F>(&self, f: F) -> Result<(f64, f64)>
    where
        F: Fn(&FieldConfig) -> f64 + Sync,
    {
        let base = &self.data.base;
        let values: Vec<f64> = (0..base.count()).into_par_iter().map(|i| f(&base.sample(i))).collect();
        self.observable_values(&values)
    }

    /// `⟨∫ 𝓛_n ds⟩` under the current measure.
    pub fn mean_density(&self) -> Result<(f64, f64)> {
        let k = self.integrated_density(&self.density);
        self.observable_values(&k)
    }

    /// `Σ exp(logw) / count − 1`, with the jackknife error of the weight mean.
    pub fn mass_drift(&self) -> Result<(f64, f64)> {
        let w = self.weights();
        let ones = vec![1.0; w.len()];
        let jk = jackknife(&ones, JACKKNIFE_BLOCKS, |b| Ok(vec![weighted_mean(b, &w) - 1.0]))?;
        Ok((jk.estimate[0], jk.stderr[0]))
    }

    /// Least-squares fit of `−logw` on `{1, ∫x^2, ∫x^4, (∫x^2)^2}`.
    pub fn aggregate_lagrangian(&self) -> Result<AggregateFit> {
        let ints = &self.data.integrals;
        let count = self.logw.len();
        let columns: Vec<Vec<f64>> =
            vec![ints[0].clone(), ints[2].clone(), ints[4].clone(), ints[2].iter().map(|v| v * v).collect()];
        let y: Vec<f64> = self.logw.iter().map(|l| -l).collect();
        let names = AGGREGATE_BASIS.iter().map(|s| s.to_string()).collect();
        let ones = vec![1.0; count];
        let jk = jackknife(&ones, JACKKNIFE_BLOCKS, |b| least_squares(&columns, &y, b))?;
        let residual = {
            let fit: Vec<f64> =
                (0..count).map(|i| columns.iter().zip(&jk.estimate).map(|(c, a)| a * c[i]).sum()).collect();
            (0..count).map(|i| (y[i] - fit[i]).powi(2)).sum::<f64>() / count as f64
        };
        Ok(AggregateFit { lambda: self.lambda, names, coefficients: jk.estimate, stderr: jk.stderr, residual })
    }
}

pub const AGGREGATE_BASIS: [&str; 4] = ["1", "int_x2", "int_x4", "int_x2_sq"];

/// Regression report for the aggregate effective Lagrangian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateFit {
    pub lambda: f64,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean squared residual per sample.
    pub residual: f64,
}

impl AggregateFit {
    /// Coefficient of `∫x^4`, which is also the coefficient of `∫:x^4:`.
    pub fn quartic(&self) -> (f64, f64) {
        (self.coefficients[2], self.stderr[2])
    }
}

fn least_squares(columns: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let scale: Vec<f64> = columns
        .iter()
        .map(|c| {
            let ms = weighted_mean(w, &c.iter().map(|v| v * v).collect::<Vec<_>>());
            if ms > 0.0 && ms.is_finite() {
                ms.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for i in 0..y.len() {
        if w[i] == 0.0 {
            continue;
        }
        for a in 0..k {
            let xa = columns[a][i] / scale[a];
            rhs[a] += w[i] * xa * y[i];
            for b in 0..=a {
                gram[(a, b)] += w[i] * xa * columns[b][i] / scale[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo.is_nan() || lo <= 1e-13 * hi {
        return Err(Error::RankDeficient { degree: k - 1 });
    }
    let chol = gram.cholesky().ok_or(Error::RankDeficient { degree: k - 1 })?;
    let sol = chol.solve(&rhs);
    Ok(sol.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

/// Finite-difference `d⟨f⟩/dλ` at the given state against a reference value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCheck {
    /// Richardson combination `2 D(δ/2) − D(δ)`.
    pub finite_difference: f64,
    pub stderr: f64,
    pub reference: f64,
}

impl ResponseCheck {
    pub fn z(&self) -> f64 {
        let d = (self.finite_difference - self.reference).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Steps by `δ` and `δ/2`, and jackknifes the extrapolated derivative of the
/// weighted mean of `values` jointly over all three states.
pub fn first_order_response(state: &FlowState, values: &[f64], delta: f64, reference: f64) -> Result<ResponseCheck> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let full = state.flow_step(delta)?;
    let half = state.flow_step(0.5 * delta)?;
    let w0 = state.weights();
    let w1 = full.weights();
    let wh = half.weights();
    let ones = vec![1.0; w0.len()];
    let mean = |b: &[f64], w: &[f64]| {
        let (num, den) = (0..w.len()).fold((0.0, 0.0), |(n, d), i| (n + b[i] * w[i] * values[i], d + b[i] * w[i]));
        num / den
    };
    let jk = jackknife(&ones, JACKKNIFE_BLOCKS, |b| {
        let m0 = mean(b, &w0);
        let d1 = (mean(b, &w1) - m0) / delta;
        let dh = (mean(b, &wh) - m0) / (0.5 * delta);
        Ok(vec![2.0 * dh - d1])
    })?;
    Ok(ResponseCheck { finite_difference: jk.estimate[0], stderr: jk.stderr[0], reference })
}

/// `−⟨f ∫ :x_n(s)^4: ds⟩` on the free measure for `f` a sum of monomials in
/// linear functionals, by contraction over the torus grid.
pub fn response_oracle(spec: &FreeMeasureSpec, n: usize, monomials: &[Vec<LinearFunctional>]) -> Result<f64> {
    spec.check_level(n)?;
    let oracle = GaussianOracle::new(spec);
    let s2 = spec.sigma2(n)?;
    let wick = wick4(s2, 3.0 * s2 * s2);
    let max_deg = monomials.iter().map(|m| m.len()).max().unwrap_or(0);
    let grid = TorusGrid::new(spec.dim, (max_deg + 4) * spec.n_max.max(1) + 1);
    let total = grid.integrate(|s| {
        let h = oracle.level_at(n, s);
        monomials.iter().map(|m| oracle.expectation_with_poly(m, &h, &wick)).sum()
    });
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> FreeMeasureSpec {
        FreeMeasureSpec::new(1, 2.0, 2).unwrap()
    }

    #[test]
    fn init_state() {
        let st = flow_init(&spec(), 2, 4000, 5).unwrap();
        assert_eq!(st.lambda, 0.0);
        assert_eq!(st.total_weight(), 4000.0);
        let (one, err) = st.observable(|_| 1.0).unwrap();
        assert_eq!(one, 1.0);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn zero_step_is_identity() {
        let st = flow_init(&spec(), 2, 1000, 5).unwrap();
        let next = st.flow_step(0.0).unwrap();
        assert_eq!(next.logw(), st.logw());
        assert_eq!(next.lambda, 0.0);
    }

    #[test]
    fn refreshed_density_is_centered() {
        let st = flow_init(&spec(), 2, 4000, 5).unwrap().flow_step(0.01).unwrap();
        let (m, _) = st.mean_density().unwrap();
        assert!(m.abs() < 1e-10, "{m}");
    }

    #[test]
    fn aggregate_at_zero_is_zero() {
        let st = flow_init(&spec(), 2, 2000, 5).unwrap();
        let fit = st.aggregate_lagrangian().unwrap();
        assert!(fit.coefficients.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn aggregate_quartic_tracks_lambda() {
        let st = flow_init(&spec(), 2, 4000, 5).unwrap().flow_step(0.02).unwrap();
        let (c, _) = st.aggregate_lagrangian().unwrap().quartic();
        assert!((c - 0.02).abs() < 1e-8, "{c}");
    }

    #[test]
    fn tadpole_oracle_vanishes() {
        let s = spec();
        let oracle = GaussianOracle::new(&s);
        let x0 = oracle.level_at(2, &[0.0]);
        let v = response_oracle(&s, 2, &[vec![x0.clone(), x0]]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn rk2_and_alpha_refresh_run() {
        let s = spec();
        let st = FlowState::init(&s, 1, 3000, 2, Integrator::Rk2, Refresh::AlphaSeries { degree: 2 }).unwrap();
        let next = st.flow_step(0.01).unwrap();
        assert!(next.ess() > 100.0);
        assert!(FlowState::init(&s, 2, 10, 2, Integrator::Euler, Refresh::AlphaSeries { degree: 2 }).is_err());
    }
}
