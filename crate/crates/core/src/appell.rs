//! Wick/Appell quartic densities and the one-step renormalization map.
//!
//! A density at level `n` is `𝓛_n(x; s) = Σ_{p=0}^{4} α_p(n; x_n; s) x_n(s)^p`
//! with `α_4 = 1`. Each lower coefficient is either a constant or a
//! polynomial in `x_n(s)` (the translation-covariant representation of a
//! conditional expectation). Writing `x_{n+1}(s) = x_n(s) + u` with
//! `u = x'_{n+1}(s)`, the conditional expectation `E[𝓛_{n+1} | x_n]` splits into
//!
//! ```text
//! x^4
//! E[α_3 + 4u | x_n] x^3
//! E[α_2 + 3α_3 u + 6u^2 | x_n] x^2
//! E[α_1 + 2α_2 u + 3α_3 u^2 + 4u^3 | x_n] x
//! E[α_0 + α_1 u + α_2 u^2 + α_3 u^3 + u^4 | x_n]
//! ```
//!
//! which is triangular: the new `α_p` only sees old `α_q` with `q ≥ p`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ce::{Deviation, PolyProjector};
use crate::ensemble::{check_ess, Ensemble};
use crate::error::{Error, Result};
use crate::free::FreeMeasureSpec;
use crate::jackknife::jackknife;
use crate::poly::{binomial, Poly};
use crate::JACKKNIFE_BLOCKS;

/// One lower coefficient `α_p` of a quartic density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Slot {
    Constant(f64),
    /// Polynomial in `x_level(s)`, with per-coefficient standard errors.
    Functional { coefficients: Vec<f64>, stderr: Vec<f64> },
}

impl Slot {
    pub fn from_poly(poly: Poly, stderr: Option<Vec<f64>>) -> Slot {
        let stderr = stderr.unwrap_or_else(|| vec![0.0; poly.coeffs().len()]);
        if poly.coeffs().iter().skip(1).all(|&c| c == 0.0) && stderr.iter().all(|&e| e == 0.0) {
            Slot::Constant(poly.coeff(0))
        } else {
            Slot::Functional { coefficients: poly.0, stderr }
        }
    }

    pub fn poly(&self) -> Poly {
        match self {
            Slot::Constant(c) => Poly::constant(*c),
            Slot::Functional { coefficients, .. } => Poly::new(coefficients.clone()),
        }
    }

    pub fn stderr(&self) -> Vec<f64> {
        match self {
            Slot::Constant(_) => vec![0.0],
            Slot::Functional { stderr, .. } => stderr.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Slot::Constant(c) => *c,
            Slot::Functional { coefficients, .. } => coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }
}

/// Quartic density at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDensity {
    pub level: usize,
    /// `α_0, α_1, α_2, α_3`; `α_4 = 1` is implicit.
    pub alpha: [Slot; 4],
}

impl PolynomialDensity {
    pub fn new(level: usize, alpha: [Slot; 4]) -> Self {
        PolynomialDensity { level, alpha }
    }

    /// The Wick-ordered quartic for the given moments.
    pub fn wick(level: usize, sigma2: f64, sigma4: f64) -> Self {
        let c = wick4(sigma2, sigma4);
        PolynomialDensity::new(
            level,
            [Slot::Constant(c.coeff(0)), Slot::Constant(0.0), Slot::Constant(c.coeff(2)), Slot::Constant(0.0)],
        )
    }

    /// Constant density `c` (all of `α_1..α_4` zero). Only meaningful for the
    /// compatibility check, where any constant family is a martingale.
    pub fn constant(level: usize, c: f64) -> ConstantDensity {
        ConstantDensity { level, value: c }
    }

    /// `α_p`, with `α_4 = 1`.
    pub fn slot(&self, p: usize) -> Slot {
        if p == 4 {
            Slot::Constant(1.0)
        } else {
            self.alpha[p].clone()
        }
    }

    /// `Σ_p α_p(x) x^p` as one polynomial in `x = x_n(s)`.
    pub fn total_poly(&self) -> Poly {
        let mut acc = Poly::monomial(4, 1.0);
        for (p, slot) in self.alpha.iter().enumerate() {
            acc = &acc + &(&slot.poly() * &Poly::monomial(p, 1.0));
        }
        acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = x.powi(4);
        let mut xp = 1.0;
        for slot in &self.alpha {
            acc += slot.eval(x) * xp;
            xp *= x;
        }
        acc
    }

    /// Slot-wise difference, coefficient vectors concatenated (`α_0` first),
    /// each padded to `width`.
    pub fn slot_difference(&self, other: &PolynomialDensity, width: usize) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .flat_map(|(a, b)| (&a.poly() - &b.poly()).padded(width))
            .collect()
    }

    fn slot_polys(&self) -> [Poly; 4] {
        [self.alpha[0].poly(), self.alpha[1].poly(), self.alpha[2].poly(), self.alpha[3].poly()]
    }

    fn width(&self) -> usize {
        self.alpha.iter().map(|s| s.poly().coeffs().len()).max().unwrap_or(1)
    }
}

/// A density with no field dependence at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantDensity {
    pub level: usize,
    pub value: f64,
}

/// Coefficients of `x^4 − 6σ_2 x^2 + 6σ_2^2 − σ_4`, ascending.
pub fn wick4(sigma2: f64, sigma4: f64) -> Poly {
    Poly::new(vec![6.0 * sigma2 * sigma2 - sigma4, 0.0, -6.0 * sigma2, 0.0, 1.0])
}

/// Appell polynomials `A_0..A_p` for a measure with raw moments
/// `moments[j-1] = ⟨x^j⟩`, `j = 1..=p`.
///
/// `A_q(x) = Σ_j C(q, j) a_{q-j} x^j` with `a_0 = 1` and the constants fixed
/// by `⟨A_q⟩ = 0`, so that `A_q' = q A_{q-1}`.
pub fn appell_sequence(moments: &[f64], p: usize) -> Result<Vec<Poly>> {
    if moments.len() < p {
        return Err(Error::InvalidParameter(format!("need {p} moments, got {}", moments.len())));
    }
    let mu = |j: usize| if j == 0 { 1.0 } else { moments[j - 1] };
    let mut a = vec![1.0];
    for q in 1..=p {
        let s: f64 = (1..=q).map(|j| binomial(q, j) * a[q - j] * mu(j)).sum();
        a.push(-s);
    }
    Ok((0..=p)
        .map(|q| Poly::new((0..=q).map(|j| binomial(q, j) * a[q - j]).collect()))
        .collect())
}

/// Per-sample regression targets of the five displayed terms. `alpha` holds
/// `α_0..α_3` of the finer level evaluated on the sample, `u` the increment.
pub(crate) fn cubic_target(a3: f64, u: f64) -> f64 {
    a3 + 4.0 * u
}

pub(crate) fn quadratic_target(a2: f64, a3: f64, u: f64) -> f64 {
    a2 + 3.0 * a3 * u + 6.0 * u * u
}

pub(crate) fn linear_target(a1: f64, a2: f64, a3: f64, u: f64) -> f64 {
    a1 + 2.0 * a2 * u + 3.0 * a3 * u * u + 4.0 * u.powi(3)
}

pub(crate) fn constant_target(a0: f64, a1: f64, a2: f64, a3: f64, u: f64) -> f64 {
    a0 + a1 * u + a2 * u * u + a3 * u.powi(3) + u.powi(4)
}

/// One step `n+1 → n` for the free measure, in closed form.
pub fn renorm_step_gaussian(density: &PolynomialDensity, spec: &FreeMeasureSpec) -> Result<PolynomialDensity> {
    let top = density.level;
    if top == 0 {
        return Err(Error::InvalidParameter("cannot step below level 0".into()));
    }
    spec.check_level(top)?;
    let v = spec.sigma2_shell(top);
    let [a0, a1, a2, a3] = density.slot_polys();
    let e = |p: &Poly, q: usize| p.gaussian_shift_times(q, v);
    let one = Poly::constant(1.0);
    let cubic = &e(&a3, 0) + &e(&one, 1).scale(4.0);
    let quadratic = &(&e(&a2, 0) + &e(&a3, 1).scale(3.0)) + &e(&one, 2).scale(6.0);
    let linear = &(&(&e(&a1, 0) + &e(&a2, 1).scale(2.0)) + &e(&a3, 2).scale(3.0)) + &e(&one, 3).scale(4.0);
    let constant = &(&(&(&e(&a0, 0) + &e(&a1, 1)) + &e(&a2, 2)) + &e(&a3, 3)) + &e(&one, 4);
    Ok(PolynomialDensity::new(
        top - 1,
        [
            Slot::from_poly(constant, None),
            Slot::from_poly(linear, None),
            Slot::from_poly(quadratic, None),
            Slot::from_poly(cubic, None),
        ],
    ))
}

/// Sample-level data for one conditioning step at `s = 0`.
pub(crate) struct StepData<'a> {
    pub coarse: &'a [f64],
    pub fine: &'a [f64],
    pub increment: &'a [f64],
}

/// Regression core of one step; returns the four new slot polynomials.
pub(crate) fn renorm_core(alpha: &[Poly; 4], data: &StepData, w: &[f64], degree: usize) -> Result<[Poly; 4]> {
    let n = w.len();
    let mut t = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let x = data.fine[j];
        let u = data.increment[j];
        let a: Vec<f64> = alpha.iter().map(|p| p.eval(x)).collect();
        t[3][j] = cubic_target(a[3], u);
        t[2][j] = quadratic_target(a[2], a[3], u);
        t[1][j] = linear_target(a[1], a[2], a[3], u);
        t[0][j] = constant_target(a[0], a[1], a[2], a[3], u);
    }
    let proj = PolyProjector::new(data.coarse, w, degree)?;
    Ok(t.map(|y| Poly::new(proj.project(&y))))
}

/// One step `n+1 → n` on a weighted ensemble: each slot is the regression of
/// its displayed target on `{x_n(0)^p}_{p ≤ degree}`, with jackknife errors.
pub fn renorm_step(density: &PolynomialDensity, ens: &Ensemble, degree: usize) -> Result<PolynomialDensity> {
    let top = density.level;
    if top == 0 {
        return Err(Error::InvalidParameter("cannot step below level 0".into()));
    }
    ens.spec().check_level(top)?;
    check_ess(ens.weights())?;
    let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
    let data = StepData { coarse: feats.level(top - 1), fine: feats.level(top), increment: feats.shell(top) };
    let alpha = density.slot_polys();
    let k = degree + 1;
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        let out = renorm_core(&alpha, &data, w, degree)?;
        Ok(out.iter().flat_map(|p| p.padded(k)).collect())
    })?;
    let slot = |p: usize| {
        Slot::Functional {
            coefficients: jk.estimate[p * k..(p + 1) * k].to_vec(),
            stderr: jk.stderr[p * k..(p + 1) * k].to_vec(),
        }
    };
    Ok(PolynomialDensity::new(top - 1, [slot(0), slot(1), slot(2), slot(3)]))
}

/// The measure a perturbation refers to.
#[derive(Clone, Copy, Debug)]
pub enum MeasureHandle<'a> {
    Free(FreeMeasureSpec),
    Ensemble(&'a Ensemble),
}

/// A family of densities over contiguous levels.
#[derive(Clone, Debug)]
pub struct Perturbation<'a> {
    densities: BTreeMap<usize, PolynomialDensity>,
    measure: MeasureHandle<'a>,
}

impl<'a> Perturbation<'a> {
    pub fn new(densities: Vec<PolynomialDensity>, measure: MeasureHandle<'a>) -> Result<Self> {
        let densities: BTreeMap<usize, PolynomialDensity> = densities.into_iter().map(|d| (d.level, d)).collect();
        let levels: Vec<usize> = densities.keys().copied().collect();
        if levels.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidParameter(format!("levels {levels:?} are not contiguous")));
        }
        let finite = densities
            .values()
            .all(|d| d.alpha.iter().all(|s| s.poly().coeffs().iter().all(|c| c.is_finite())));
        if !finite {
            return Err(Error::InvalidParameter("density coefficients must be finite".into()));
        }
        Ok(Perturbation { densities, measure })
    }

    /// Wick-4 densities of the free measure at levels `0..=n_max`.
    pub fn free_wick(spec: &FreeMeasureSpec) -> Perturbation<'static> {
        let densities = (0..=spec.n_max)
            .map(|n| {
                let s2 = spec.sigma2(n).unwrap();
                PolynomialDensity::wick(n, s2, 3.0 * s2 * s2)
            })
            .collect();
        Perturbation::new(densities, MeasureHandle::Free(*spec)).expect("contiguous levels")
    }

    pub fn density(&self, level: usize) -> Option<&PolynomialDensity> {
        self.densities.get(&level)
    }

    pub fn measure(&self) -> MeasureHandle<'a> {
        self.measure
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.densities.keys().copied()
    }
}

/// Compatibility check `E[𝓛_m | x_n] = 𝓛_n`, slot-wise.
///
/// For the free measure the conditional expectation is composed in closed
/// form and the report is exact. For an ensemble the composed regression and
/// the comparison are jackknifed together.
pub fn martingale_check(pert: &Perturbation, n: usize, m: usize, degree: usize) -> Result<Deviation> {
    if n >= m {
        return Err(Error::InvalidParameter(format!("need n < m, got {n}, {m}")));
    }
    let lower = pert.density(n).ok_or(Error::LevelOutOfRange { level: n, max: m })?;
    let upper = pert.density(m).ok_or(Error::LevelOutOfRange { level: m, max: m })?;
    match pert.measure() {
        MeasureHandle::Free(spec) => {
            let mut d = upper.clone();
            while d.level > n {
                d = renorm_step_gaussian(&d, &spec)?;
            }
            let width = d.width().max(lower.width());
            Ok(Deviation::exact(d.slot_difference(lower, width)))
        }
        MeasureHandle::Ensemble(ens) => {
            ens.spec().check_level(m)?;
            check_ess(ens.weights())?;
            let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
            let k = degree + 1;
            let target = lower.slot_polys();
            let start = upper.slot_polys();
            let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
                let mut alpha = start.clone();
                for top in (n + 1..=m).rev() {
                    let data =
                        StepData { coarse: feats.level(top - 1), fine: feats.level(top), increment: feats.shell(top) };
                    alpha = renorm_core(&alpha, &data, w, degree)?;
                }
                Ok(alpha.iter().zip(&target).flat_map(|(a, b)| (a - b).padded(k.max(b.coeffs().len()))).collect())
            })?;
            Ok(Deviation::new(jk.estimate, jk.stderr))
        }
    }
}

/// Constant families are always compatible: `E[c | x_n] = c`.
pub fn martingale_check_constant(levels: &[ConstantDensity]) -> Deviation {
    let diffs = levels.windows(2).map(|w| w[1].value - w[0].value).collect();
    Deviation::exact(diffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::sample_free;

    #[test]
    fn wick4_examples() {
        assert_eq!(wick4(0.0, 0.0), Poly::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]));
        assert_eq!(wick4(1.0, 3.0), Poly::new(vec![3.0, 0.0, -6.0, 0.0, 1.0]));
        assert_eq!(wick4(2.0, 12.0), Poly::new(vec![12.0, 0.0, -12.0, 0.0, 1.0]));
    }

    #[test]
    fn appell_gaussian_matches_wick() {
        let a = appell_sequence(&[0.0, 1.0, 0.0, 3.0], 4).unwrap();
        assert_eq!(a[4], wick4(1.0, 3.0));
        assert_eq!(a[1], Poly::new(vec![0.0, 1.0]));
        for q in 1..=4 {
            let d = a[q].derivative();
            assert!(d.max_abs_diff(&a[q - 1].scale(q as f64)) < 1e-12);
        }
        assert!(appell_sequence(&[0.0], 2).is_err());
    }

    #[test]
    fn appell_uniform_is_centered_by_quadrature() {
        let a = appell_sequence(&[0.0, 1.0 / 3.0, 0.0, 1.0 / 5.0], 4).unwrap();
        assert!(a[4].max_abs_diff(&Poly::new(vec![7.0 / 15.0, 0.0, -2.0, 0.0, 1.0])) < 1e-14);
        // composite Simpson on [-1, 1] against the uniform density 1/2
        let m = 2000;
        let h = 2.0 / m as f64;
        for q in 1..=4 {
            let f = |x: f64| a[q].eval(x) * 0.5;
            let mut s = f(-1.0) + f(1.0);
            for i in 1..m {
                let x = -1.0 + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            assert!((s * h / 3.0).abs() < 1e-12, "A_{q} not centered");
        }
    }

    #[test]
    fn gaussian_step_maps_wick_to_wick() {
        let spec = FreeMeasureSpec::new(2, 0.8, 4).unwrap();
        for n in 0..4 {
            let s2 = spec.sigma2(n + 1).unwrap();
            let d = PolynomialDensity::wick(n + 1, s2, 3.0 * s2 * s2);
            let out = renorm_step_gaussian(&d, &spec).unwrap();
            let s2n = spec.sigma2(n).unwrap();
            let want = PolynomialDensity::wick(n, s2n, 3.0 * s2n * s2n);
            assert!(out.total_poly().max_abs_diff(&want.total_poly()) < 1e-10);
            assert!((out.alpha[2].poly().coeff(0) + 6.0 * s2n).abs() < 1e-12);
            assert_eq!(out.alpha[3], Slot::Constant(0.0));
            assert_eq!(out.alpha[1], Slot::Constant(0.0));
        }
    }

    #[test]
    fn triangular_dependence() {
        // perturbing α_q(n+1) for q < p leaves α_p(n) untouched
        let spec = FreeMeasureSpec::new(1, 1.0, 3).unwrap();
        let ens = sample_free(&spec, 3000, 5).unwrap();
        let base = PolynomialDensity::new(
            2,
            [
                Slot::Constant(0.3),
                Slot::from_poly(Poly::new(vec![0.1, 0.2]), None),
                Slot::Constant(-2.0),
                Slot::from_poly(Poly::new(vec![0.0, 0.05, 0.01]), None),
            ],
        );
        let out = renorm_step(&base, &ens, 4).unwrap();
        for q in 0..4 {
            let mut pert = base.clone();
            pert.alpha[q] = Slot::from_poly(&pert.alpha[q].poly() + &Poly::new(vec![1.5, -0.5, 0.25]), None);
            let moved = renorm_step(&pert, &ens, 4).unwrap();
            for p in q + 1..4 {
                assert_eq!(moved.alpha[p], out.alpha[p], "α_{p} depends on α_{q}");
            }
            assert_ne!(moved.alpha[q], out.alpha[q]);
        }
        let g_out = renorm_step_gaussian(&base, &spec).unwrap();
        for q in 0..4 {
            let mut pert = base.clone();
            pert.alpha[q] = Slot::Constant(9.0);
            let moved = renorm_step_gaussian(&pert, &spec).unwrap();
            for p in q + 1..4 {
                assert_eq!(moved.alpha[p], g_out.alpha[p]);
            }
        }
    }

    #[test]
    fn constants_are_compatible() {
        let levels: Vec<_> = (0..4).map(|n| PolynomialDensity::constant(n, 2.5)).collect();
        assert_eq!(martingale_check_constant(&levels).max_abs, 0.0);
    }

    #[test]
    fn non_contiguous_levels_are_rejected() {
        let spec = FreeMeasureSpec::new(1, 1.0, 3).unwrap();
        let d = vec![PolynomialDensity::wick(0, 1.0, 3.0), PolynomialDensity::wick(2, 1.0, 3.0)];
        assert!(Perturbation::new(d, MeasureHandle::Free(spec)).is_err());
    }
}
