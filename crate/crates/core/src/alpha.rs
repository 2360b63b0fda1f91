//! Tail-series construction of a compatible quartic family for even,
//! translation-invariant, asymptotically free measures.
//!
//! With `u_i = x'_i(s)` and all conditional expectations taken given `x_n`:
//!
//! ```text
//! α_3(n) = 4 Σ_i E[u_i]
//! α_2(n) = 3 Σ_i E[α_3(i) u_i] + lim_m { 6 Σ_{i≤m} E[u_i^2] − 6σ_2(m) }
//! α_1(n) = 2 Σ_i E[α_2(i) u_i] + 3 Σ_i E[α_3(i) u_i^2] + 4 Σ_i E[u_i^3]
//! α_0(n) = Σ_i E[α_1(i) u_i] + Σ_i E[α_3(i) u_i^3]
//!          + lim_m { Σ_{i≤m} E[α_2(i) u_i^2] + Σ_{i≤m} E[u_i^4] + 6σ_2(m)^2 − σ_4(m) }
//! ```
//!
//! Sums run over `i = n+1, ...`. Here every sum and limit is evaluated at the
//! finite truncation `m = M`; the value at each intermediate `m` is kept as a
//! convergence diagnostic. No extrapolation is attempted.

use serde::{Deserialize, Serialize};

use crate::appell::{renorm_core, renorm_step_gaussian, PolynomialDensity, Slot, StepData};
use crate::ce::{Deviation, PolyProjector};
use crate::ensemble::{check_ess, Ensemble, PointFeatures};
use crate::error::{Error, Result};
use crate::free::{FreeMeasureSpec, GaussianOracle, LinearFunctional};
use crate::jackknife::{jackknife, weighted_mean};
use crate::modes::TorusGrid;
use crate::poly::Poly;
use crate::JACKKNIFE_BLOCKS;

/// Where the infinite tails are cut, and the regression degree used for the
/// functional coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub top: usize,
    pub degree: usize,
}

impl SeriesTruncation {
    pub fn new(top: usize, degree: usize) -> Self {
        SeriesTruncation { top, degree }
    }
}

/// `P(x_i(s)) · u_i^power`.
struct Term {
    factor: Poly,
    power: usize,
}

impl Term {
    fn new(factor: Poly, power: usize) -> Self {
        Term { factor, power }
    }
}

trait CondExpectation {
    /// `E[Σ terms | x_n]` for terms living on level `i > n`.
    fn cond(&mut self, n: usize, i: usize, terms: &[Term]) -> Result<Poly>;
    /// `⟨x_m(s)^p⟩`.
    fn moment(&self, p: usize, m: usize) -> f64;
}

struct GaussianBackend {
    spec: FreeMeasureSpec,
}

impl CondExpectation for GaussianBackend {
    fn cond(&mut self, n: usize, i: usize, terms: &[Term]) -> Result<Poly> {
        // x_i = x_n + w + u_i with w = x_{i-1} − x_n independent of u_i
        let vu = self.spec.sigma2_shell(i);
        let vw = self.spec.sigma2_band(n, i - 1)?;
        Ok(terms.iter().fold(Poly::constant(0.0), |acc, t| {
            &acc + &t.factor.gaussian_shift_times(t.power, vu).gaussian_shift(vw)
        }))
    }

    fn moment(&self, p: usize, m: usize) -> f64 {
        crate::poly::gaussian_moment(p, self.spec.sigma2(m).unwrap())
    }
}

struct RegressionBackend<'a> {
    feats: &'a PointFeatures,
    w: &'a [f64],
    degree: usize,
    projectors: Vec<Option<PolyProjector<'a>>>,
    scratch: Vec<f64>,
}

impl<'a> RegressionBackend<'a> {
    fn new(feats: &'a PointFeatures, w: &'a [f64], degree: usize) -> Self {
        let levels = feats.n_levels();
        RegressionBackend { feats, w, degree, projectors: (0..levels).map(|_| None).collect(), scratch: vec![0.0; w.len()] }
    }
}

impl CondExpectation for RegressionBackend<'_> {
    fn cond(&mut self, n: usize, i: usize, terms: &[Term]) -> Result<Poly> {
        if self.projectors[n].is_none() {
            self.projectors[n] = Some(PolyProjector::new(self.feats.level(n), self.w, self.degree)?);
        }
        let xi = self.feats.level(i);
        let ui = self.feats.shell(i);
        for j in 0..self.w.len() {
            self.scratch[j] = terms.iter().map(|t| t.factor.eval(xi[j]) * ui[j].powi(t.power as i32)).sum();
        }
        let proj = self.projectors[n].as_ref().unwrap();
        Ok(Poly::new(proj.project(&self.scratch)))
    }

    fn moment(&self, p: usize, m: usize) -> f64 {
        let x = self.feats.level(m);
        let vals: Vec<f64> = x.iter().map(|v| v.powi(p as i32)).collect();
        weighted_mean(self.w, &vals)
    }
}

/// Everything computed for one weight vector.
struct RawSeries {
    /// `[n][p]`, `n = 0..=M`.
    alpha: Vec<[Poly; 4]>,
    /// `[p][n][m - n - 1]`: value of `α_p(n)` with all sums and limits cut at `m`.
    partials: Vec<Vec<Vec<Poly>>>,
    /// `σ_2(n)`, `σ_4(n)`, `n = 0..=M`.
    sigma2: Vec<f64>,
    sigma4: Vec<f64>,
}

fn build_series(backend: &mut dyn CondExpectation, top: usize) -> Result<RawSeries> {
    let zero = || Poly::constant(0.0);
    let sigma2: Vec<f64> = (0..=top).map(|m| backend.moment(2, m)).collect();
    let sigma4: Vec<f64> = (0..=top).map(|m| backend.moment(4, m)).collect();
    let mut alpha: Vec<[Poly; 4]> = (0..=top).map(|_| [zero(), zero(), zero(), zero()]).collect();
    alpha[top] = [
        Poly::constant(6.0 * sigma2[top] * sigma2[top] - sigma4[top]),
        zero(),
        Poly::constant(-6.0 * sigma2[top]),
        zero(),
    ];
    let mut partials = vec![vec![Vec::new(); top + 1]; 4];
    let one = || Poly::constant(1.0);
    for p in (0..4).rev() {
        for n in 0..top {
            let mut acc = zero();
            for i in n + 1..=top {
                let a = &alpha[i];
                let terms = match p {
                    3 => vec![Term::new(Poly::constant(4.0), 1)],
                    2 => vec![Term::new(a[3].scale(3.0), 1), Term::new(Poly::constant(6.0), 2)],
                    1 => vec![
                        Term::new(a[2].scale(2.0), 1),
                        Term::new(a[3].scale(3.0), 2),
                        Term::new(Poly::constant(4.0), 3),
                    ],
                    _ => vec![
                        Term::new(a[1].clone(), 1),
                        Term::new(a[2].clone(), 2),
                        Term::new(a[3].clone(), 3),
                        Term::new(one(), 4),
                    ],
                };
                acc = &acc + &backend.cond(n, i, &terms)?;
                let limit = match p {
                    2 => -6.0 * sigma2[i],
                    0 => 6.0 * sigma2[i] * sigma2[i] - sigma4[i],
                    _ => 0.0,
                };
                partials[p][n].push(&acc + &Poly::constant(limit));
            }
            alpha[n][p] = partials[p][n].last().unwrap().clone();
        }
    }
    Ok(RawSeries { alpha, partials, sigma2, sigma4 })
}

/// Point estimate of `α(n)` for every `n ≤ M` under weights `w`, no errors.
pub(crate) fn series_point(feats: &PointFeatures, w: &[f64], trunc: SeriesTruncation) -> Result<Vec<[Poly; 4]>> {
    let mut backend = RegressionBackend::new(feats, w, trunc.degree);
    Ok(build_series(&mut backend, trunc.top)?.alpha)
}

impl RawSeries {
    fn flatten(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for a in &self.alpha {
            for p in a {
                out.extend(p.padded(k));
            }
        }
        for per_p in &self.partials {
            for per_n in per_p {
                for poly in per_n {
                    out.extend(poly.padded(k));
                }
            }
        }
        out.extend(&self.sigma2);
        out.extend(&self.sigma4);
        out
    }
}

/// Coefficient vector with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub coefficients: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Estimate {
    pub fn exact(poly: &Poly, k: usize) -> Self {
        Estimate { coefficients: poly.padded(k), stderr: vec![0.0; k] }
    }

    pub fn poly(&self) -> Poly {
        Poly::new(self.coefficients.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

/// The truncated α-series with its convergence diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSeries {
    pub truncation: SeriesTruncation,
    /// Whether the values are exact (free measure) or Monte Carlo estimates.
    pub exact: bool,
    /// `[n][p]`.
    alpha: Vec<Vec<Estimate>>,
    /// `[p][n][m - n - 1]`.
    partials: Vec<Vec<Vec<Estimate>>>,
    sigma2: Vec<(f64, f64)>,
    sigma4: Vec<(f64, f64)>,
}

impl AlphaSeries {
    /// Closed-form series for the free measure.
    pub fn free(spec: &FreeMeasureSpec, trunc: SeriesTruncation) -> Result<Self> {
        spec.check_level(trunc.top)?;
        let raw = build_series(&mut GaussianBackend { spec: *spec }, trunc.top)?;
        let width = trunc.degree + 1;
        let values = raw.flatten(width);
        Ok(Self::unflatten(trunc, true, &values, &vec![0.0; values.len()]))
    }

    /// Monte Carlo series on a weighted ensemble, jackknifed end to end.
    pub fn estimate(ens: &Ensemble, trunc: SeriesTruncation) -> Result<Self> {
        ens.spec().check_level(trunc.top)?;
        check_ess(ens.weights())?;
        let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
        let width = trunc.degree + 1;
        let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
            let mut backend = RegressionBackend::new(&feats, w, trunc.degree);
            Ok(build_series(&mut backend, trunc.top)?.flatten(width))
        })?;
        Ok(Self::unflatten(trunc, false, &jk.estimate, &jk.stderr))
    }

    fn unflatten(trunc: SeriesTruncation, exact: bool, values: &[f64], errs: &[f64]) -> Self {
        let k = trunc.degree + 1;
        let top = trunc.top;
        let mut pos = 0;
        let mut take = |len: usize| {
            let e = Estimate { coefficients: values[pos..pos + len].to_vec(), stderr: errs[pos..pos + len].to_vec() };
            pos += len;
            e
        };
        let alpha = (0..=top).map(|_| (0..4).map(|_| take(k)).collect()).collect();
        let partials = (0..4)
            .map(|_| (0..=top).map(|n| (0..top.saturating_sub(n)).map(|_| take(k)).collect()).collect())
            .collect();
        let s2: Vec<Estimate> = (0..=top).map(|_| take(1)).collect();
        let s4: Vec<Estimate> = (0..=top).map(|_| take(1)).collect();
        let pair = |e: &Estimate| (e.coefficients[0], e.stderr[0]);
        AlphaSeries {
            truncation: trunc,
            exact,
            alpha,
            partials,
            sigma2: s2.iter().map(pair).collect(),
            sigma4: s4.iter().map(pair).collect(),
        }
    }

    pub fn top(&self) -> usize {
        self.truncation.top
    }

    /// `α_p(n)` for `p ≤ 3`.
    pub fn alpha(&self, p: usize, n: usize) -> &Estimate {
        &self.alpha[n][p]
    }

    pub fn alpha3(&self, n: usize) -> &Estimate {
        self.alpha(3, n)
    }

    pub fn alpha2(&self, n: usize) -> &Estimate {
        self.alpha(2, n)
    }

    pub fn alpha1(&self, n: usize) -> &Estimate {
        self.alpha(1, n)
    }

    pub fn alpha0(&self, n: usize) -> &Estimate {
        self.alpha(0, n)
    }

    /// `σ_2(n)` of the measure, with standard error.
    pub fn sigma2(&self, n: usize) -> (f64, f64) {
        self.sigma2[n]
    }

    pub fn sigma4(&self, n: usize) -> (f64, f64) {
        self.sigma4[n]
    }

    /// The density `𝓛_n` as a [`PolynomialDensity`].
    pub fn density(&self, n: usize) -> PolynomialDensity {
        let slot = |p: usize| {
            let e = &self.alpha[n][p];
            if self.exact {
                Slot::from_poly(e.poly(), None)
            } else {
                Slot::Functional { coefficients: e.coefficients.clone(), stderr: e.stderr.clone() }
            }
        };
        PolynomialDensity::new(n, [slot(0), slot(1), slot(2), slot(3)])
    }

    /// Values of `α_p(n)` with every sum and limit cut at `m = n+1, ..., M`.
    pub fn partial_values(&self, p: usize, n: usize) -> &[Estimate] {
        &self.partials[p][n]
    }

    /// Successive differences of the partial values (largest coefficient
    /// change), one fewer than the number of partial values.
    pub fn diagnostics(&self, p: usize, n: usize) -> Vec<f64> {
        self.partials[p][n]
            .windows(2)
            .map(|w| w[1].poly().max_abs_diff(&w[0].poly()))
            .collect()
    }

    /// `α_p(n)` minus the Wick coefficient built from the measure's own
    /// `σ_2(n)`, `σ_4(n)`.
    pub fn gap(&self, p: usize, n: usize) -> Poly {
        let (s2, _) = self.sigma2[n];
        let (s4, _) = self.sigma4[n];
        let wick = crate::appell::wick4(s2, s4);
        &self.alpha[n][p].poly() - &Poly::constant(wick.coeff(p))
    }
}

/// Closed-form compatibility `E[𝓛_{n+1} | x_n] = 𝓛_n` of the free series.
pub fn compatibility_free(spec: &FreeMeasureSpec, series: &AlphaSeries) -> Result<Vec<(usize, Deviation)>> {
    let k = series.truncation.degree + 1;
    (0..series.top())
        .map(|n| {
            let stepped = renorm_step_gaussian(&series.density(n + 1), spec)?;
            Ok((n, Deviation::exact(stepped.slot_difference(&series.density(n), k))))
        })
        .collect()
}

/// Monte Carlo compatibility of the constructed family: for each `n < M`,
/// the series value `α(n)` against one regression step applied to `α(n+1)`,
/// jackknifed jointly.
pub fn compatibility_mc(ens: &Ensemble, trunc: SeriesTruncation) -> Result<Vec<(usize, Deviation)>> {
    ens.spec().check_level(trunc.top)?;
    check_ess(ens.weights())?;
    let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
    let k = trunc.degree + 1;
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        let mut backend = RegressionBackend::new(&feats, w, trunc.degree);
        let raw = build_series(&mut backend, trunc.top)?;
        let mut out = Vec::new();
        for n in 0..trunc.top {
            let data = StepData { coarse: feats.level(n), fine: feats.level(n + 1), increment: feats.shell(n + 1) };
            let stepped = renorm_core(&raw.alpha[n + 1], &data, w, trunc.degree)?;
            for p in 0..4 {
                out.extend((&stepped[p] - &raw.alpha[n][p]).padded(k));
            }
        }
        Ok(out)
    })?;
    let per = 4 * k;
    Ok((0..trunc.top)
        .map(|n| {
            let r = n * per..(n + 1) * per;
            (n, Deviation::new(jk.estimate[r.clone()].to_vec(), jk.stderr[r].to_vec()))
        })
        .collect())
}

/// Conditional expectations of the integrated Wick density at several cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedLimitProbe {
    pub level: usize,
    pub m_values: Vec<usize>,
    /// Regression coefficients on `{x_n(0)^p}` per `m`.
    pub values: Vec<Estimate>,
    /// Last minus first value, with jackknifed errors of the difference.
    pub drift: Vec<f64>,
    pub drift_stderr: Vec<f64>,
    /// `max |drift| / stderr`.
    pub drift_z: f64,
    /// Drift exceeds the 4-sigma band.
    pub non_convergent: bool,
}

/// `E[∫ 𝓛̃_m(x_m(s)) ds | x_n]` for `m ∈ m_values`, where `𝓛̃_m` is the Wick
/// quartic built from the ensemble's own `σ_2(m)`, `σ_4(m)`.
pub fn failed_limit_probe(ens: &Ensemble, n: usize, m_values: &[usize], degree: usize) -> Result<FailedLimitProbe> {
    if m_values.len() < 2 {
        return Err(Error::InvalidParameter("need at least two cutoffs".into()));
    }
    for &m in m_values {
        ens.spec().check_level(m)?;
        if m <= n {
            return Err(Error::InvalidParameter(format!("cutoff {m} is not above level {n}")));
        }
    }
    check_ess(ens.weights())?;
    let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
    let integrals: Vec<Vec<Vec<f64>>> =
        m_values.iter().map(|&m| ens.level_power_integrals(m, 4)).collect::<Result<_>>()?;
    let vol = TorusGrid::new(ens.spec().dim, 1).volume();
    let k = degree + 1;
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        let proj = PolyProjector::new(feats.level(n), w, degree)?;
        let mut out = Vec::new();
        for ints in &integrals {
            // grid averages of x_m(s)^2, x_m(s)^4
            let s2 = weighted_mean(w, &ints[2]) / vol;
            let s4 = weighted_mean(w, &ints[4]) / vol;
            let c = 6.0 * s2 * s2 - s4;
            let y: Vec<f64> = (0..w.len()).map(|j| ints[4][j] - 6.0 * s2 * ints[2][j] + c * ints[0][j]).collect();
            out.extend(proj.project(&y));
        }
        let first = out[..k].to_vec();
        let last = out[out.len() - k..].to_vec();
        out.extend(last.iter().zip(&first).map(|(a, b)| a - b));
        Ok(out)
    })?;
    let values = (0..m_values.len())
        .map(|i| Estimate {
            coefficients: jk.estimate[i * k..(i + 1) * k].to_vec(),
            stderr: jk.stderr[i * k..(i + 1) * k].to_vec(),
        })
        .collect();
    let off = m_values.len() * k;
    let drift = jk.estimate[off..off + k].to_vec();
    let drift_stderr = jk.stderr[off..off + k].to_vec();
    let dev = Deviation::new(drift.clone(), drift_stderr.clone());
    Ok(FailedLimitProbe {
        level: n,
        m_values: m_values.to_vec(),
        values,
        drift,
        drift_stderr,
        drift_z: dev.max_z,
        non_convergent: !dev.within(4.0),
    })
}

/// Closed form for the free measure: `E[∫ :x_m(s)^4: ds | x_n(0)]` equals
/// `κ_n :x_n(0)^4:` for every `m ≥ n`, with `κ_n = ∫ (C_n(s)/σ_2(n))^4 ds` and
/// `C_n` the level-`n` covariance function. Returns the polynomial per `m`.
pub fn failed_limit_free(spec: &FreeMeasureSpec, n: usize, m_values: &[usize]) -> Result<Vec<Poly>> {
    spec.check_level(n)?;
    let oracle = GaussianOracle::new(spec);
    let grid = TorusGrid::for_cutoff(spec.dim, spec.n_max.max(1));
    let origin = vec![0.0; spec.dim];
    let x0 = oracle.level_at(n, &origin);
    let s2n = spec.sigma2(n)?;
    let kappa = grid.integrate(|s| (oracle.covariance(&x0, &oracle.level_at(n, s)) / s2n).powi(4));
    m_values
        .iter()
        .map(|&m| {
            spec.check_level(m)?;
            if m < n {
                return Err(Error::InvalidParameter(format!("cutoff {m} below level {n}")));
            }
            // E[:x_m(s)^4:_m | x_n] = :x_n(s)^4:_n, then project onto x_n(0)
            Ok(crate::appell::wick4(s2n, 3.0 * s2n * s2n).scale(kappa))
        })
        .collect()
}

/// Residual of the parity decomposition
/// `σ_4(m) = σ_4(n) + Σ σ'_4(i) + 6 Σ ⟨x_n^2 u_i^2⟩ + 6 Σ_{i<j} ⟨u_i^2 u_j^2⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

impl IdentityResidual {
    pub fn z(&self) -> f64 {
        if self.stderr > 0.0 {
            self.residual.abs() / self.stderr
        } else if self.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// A function of (shell values, level values) at one point.
type PointFn<'a> = &'a dyn Fn(&[f64], &[f64]) -> f64;

fn identity_terms(n: usize, m: usize, moment: &dyn Fn(PointFn) -> f64) -> (f64, f64) {
    // `moment` averages a function of (shell values, level values)
    let lhs = moment(&|_, lv| lv[m].powi(4));
    let mut rhs = moment(&|_, lv| lv[n].powi(4));
    for i in n + 1..=m {
        rhs += moment(&|sh, _| sh[i].powi(4));
        rhs += 6.0 * moment(&|sh, lv| lv[n].powi(2) * sh[i].powi(2));
        for j in i + 1..=m {
            rhs += 6.0 * moment(&|sh, _| sh[i].powi(2) * sh[j].powi(2));
        }
    }
    (lhs, rhs)
}

/// Parity identity on the free measure, every moment from the contraction
/// oracle.
pub fn proof_identity_sigma4_free(spec: &FreeMeasureSpec, n: usize, m: usize) -> Result<IdentityResidual> {
    spec.check_level(m)?;
    if n > m {
        return Err(Error::InvalidParameter(format!("need n <= m, got {n}, {m}")));
    }
    let oracle = GaussianOracle::new(spec);
    let origin = vec![0.0; spec.dim];
    let shells = oracle.shells_at(&origin);
    let levels: Vec<_> = (0..=spec.n_max).map(|l| oracle.level_at(l, &origin)).collect();
    let e = |f: &[&LinearFunctional]| oracle.expectation(&f.iter().map(|x| (*x).clone()).collect::<Vec<_>>());
    let lhs = e(&[&levels[m]; 4]);
    let mut rhs = e(&[&levels[n]; 4]);
    for i in n + 1..=m {
        rhs += e(&[&shells[i]; 4]);
        rhs += 6.0 * e(&[&levels[n], &levels[n], &shells[i], &shells[i]]);
        for j in i + 1..=m {
            rhs += 6.0 * e(&[&shells[i], &shells[i], &shells[j], &shells[j]]);
        }
    }
    Ok(IdentityResidual { lhs, rhs, residual: lhs - rhs, stderr: 0.0 })
}

/// Parity identity on a weighted ensemble, jackknifed.
pub fn proof_identity_sigma4(ens: &Ensemble, n: usize, m: usize) -> Result<IdentityResidual> {
    ens.spec().check_level(m)?;
    if n > m {
        return Err(Error::InvalidParameter(format!("need n <= m, got {n}, {m}")));
    }
    check_ess(ens.weights())?;
    let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
    let count = ens.count();
    let nl = feats.n_levels();
    let sh: Vec<Vec<f64>> = (0..count).map(|j| (0..nl).map(|l| feats.shell(l)[j]).collect()).collect();
    let lv: Vec<Vec<f64>> = (0..count).map(|j| (0..nl).map(|l| feats.level(l)[j]).collect()).collect();
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        let moment = |f: &dyn Fn(&[f64], &[f64]) -> f64| {
            let vals: Vec<f64> = (0..count).map(|j| f(&sh[j], &lv[j])).collect();
            weighted_mean(w, &vals)
        };
        let (lhs, rhs) = identity_terms(n, m, &moment);
        Ok(vec![lhs, rhs, lhs - rhs])
    })?;
    Ok(IdentityResidual { lhs: jk.estimate[0], rhs: jk.estimate[1], residual: jk.estimate[2], stderr: jk.stderr[2] })
}
