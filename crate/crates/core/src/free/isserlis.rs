//! Exact Gaussian moments by summing over pair contractions.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::modes::{ModeIndex, ModeLayout, PointBasis};
use crate::poly::Poly;

use super::FreeMeasureSpec;

/// A real linear functional of the field, as coefficients over the canonical
/// real coordinates of `B_{n_max}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFunctional(pub Vec<f64>);

impl LinearFunctional {
    pub fn scaled(&self, a: f64) -> Self {
        LinearFunctional(self.0.iter().map(|c| c * a).collect())
    }

    pub fn plus(&self, other: &Self) -> Self {
        LinearFunctional(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Moments of the free measure via Isserlis' theorem.
#[derive(Clone, Debug)]
pub struct GaussianOracle {
    spec: FreeMeasureSpec,
    layout: Arc<ModeLayout>,
    variances: Vec<f64>,
}

impl GaussianOracle {
    pub fn new(spec: &FreeMeasureSpec) -> Self {
        GaussianOracle { spec: *spec, layout: spec.layout(), variances: spec.coordinate_variances() }
    }

    pub fn spec(&self) -> &FreeMeasureSpec {
        &self.spec
    }

    fn unit(&self, idx: usize) -> LinearFunctional {
        let mut v = vec![0.0; self.layout.n_coords()];
        v[idx] = 1.0;
        LinearFunctional(v)
    }

    fn rep_offset(&self, k: &ModeIndex) -> Result<(usize, bool)> {
        let (j, conj) = self.layout.rep_position(k).ok_or(Error::NotSubset)?;
        Ok((usize::from(self.layout.has_zero()) + 2 * j, conj))
    }

    pub fn zero_mode(&self) -> LinearFunctional {
        self.unit(0)
    }

    /// `Re x̂_k`.
    pub fn re(&self, k: &ModeIndex) -> Result<LinearFunctional> {
        if k.is_zero() {
            return Ok(self.zero_mode());
        }
        Ok(self.unit(self.rep_offset(k)?.0))
    }

    /// `Im x̂_k`.
    pub fn im(&self, k: &ModeIndex) -> Result<LinearFunctional> {
        if k.is_zero() {
            return Ok(LinearFunctional(vec![0.0; self.layout.n_coords()]));
        }
        let (off, conj) = self.rep_offset(k)?;
        Ok(self.unit(off + 1).scaled(if conj { -1.0 } else { 1.0 }))
    }

    /// `a_[k] = √2 Re x̂_k` for the representative of `[k]`.
    pub fn a(&self, k: &ModeIndex) -> Result<LinearFunctional> {
        Ok(self.re(k)?.scaled(std::f64::consts::SQRT_2))
    }

    /// `b_[k] = √2 Im x̂_k` for the representative of `[k]`.
    pub fn b(&self, k: &ModeIndex) -> Result<LinearFunctional> {
        let (off, _) = self.rep_offset(k)?;
        Ok(self.unit(off + 1).scaled(std::f64::consts::SQRT_2))
    }

    /// Shell values `x'_i(s)` for every shell `i`.
    pub fn shells_at(&self, s: &[f64]) -> Vec<LinearFunctional> {
        let basis = PointBasis::new(&self.layout, s);
        let n = self.layout.n_coords();
        let mut out = vec![vec![0.0; n]; basis.n_levels()];
        let mut vals = vec![0.0; basis.n_levels()];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            basis.shell_values(&e, &mut vals);
            for (i, v) in vals.iter().enumerate() {
                out[i][c] = *v;
            }
            e[c] = 0.0;
        }
        out.into_iter().map(LinearFunctional).collect()
    }

    /// `x'_i(s)`.
    pub fn shell_at(&self, i: usize, s: &[f64]) -> LinearFunctional {
        self.shells_at(s).swap_remove(i)
    }

    /// `x_n(s)`.
    pub fn level_at(&self, n: usize, s: &[f64]) -> LinearFunctional {
        let shells = self.shells_at(s);
        let zero = LinearFunctional(vec![0.0; self.layout.n_coords()]);
        shells.iter().take(n + 1).fold(zero, |acc, f| acc.plus(f))
    }

    pub fn covariance(&self, f: &LinearFunctional, g: &LinearFunctional) -> f64 {
        f.0.iter().zip(&g.0).zip(&self.variances).map(|((a, b), v)| a * b * v).sum()
    }

    /// `⟨f_1 ⋯ f_p⟩` as a sum over all pairings; odd products vanish.
    pub fn expectation(&self, factors: &[LinearFunctional]) -> f64 {
        let p = factors.len();
        if p % 2 == 1 {
            return 0.0;
        }
        assert!(p <= 24, "too many factors for the contraction oracle");
        let cov: Vec<Vec<f64>> =
            factors.iter().map(|f| factors.iter().map(|g| self.covariance(f, g)).collect()).collect();
        let mut memo = HashMap::new();
        pairings(((1u64 << p) - 1) as u32, &cov, &mut memo)
    }

    /// `⟨f_1 ⋯ f_p · P(h)⟩` for a polynomial `P` of one further functional.
    pub fn expectation_with_poly(&self, factors: &[LinearFunctional], h: &LinearFunctional, poly: &Poly) -> f64 {
        let mut all = factors.to_vec();
        let mut acc = 0.0;
        for (q, &c) in poly.coeffs().iter().enumerate() {
            if q > 0 {
                all.push(h.clone());
            }
            if c != 0.0 {
                acc += c * self.expectation(&all);
            }
        }
        acc
    }
}

fn pairings(mask: u32, cov: &[Vec<f64>], memo: &mut HashMap<u32, f64>) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let first = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << first);
    let mut acc = 0.0;
    let mut m = rest;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        m &= m - 1;
        let c = cov[first][j];
        if c != 0.0 {
            acc += c * pairings(rest & !(1 << j), cov, memo);
        }
    }
    memo.insert(mask, acc);
    acc
}

/// `⟨f_1 ⋯ f_p⟩` under the free measure of `spec`.
pub fn isserlis(factors: &[LinearFunctional], spec: &FreeMeasureSpec) -> f64 {
    GaussianOracle::new(spec).expectation(factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> FreeMeasureSpec {
        FreeMeasureSpec::new(1, 1.0, 3).unwrap()
    }

    #[test]
    fn fourth_moment_is_three_sigma_squared() {
        let o = GaussianOracle::new(&spec());
        for n in 0..=3 {
            let x = o.level_at(n, &[0.4]);
            let s2 = spec().sigma2(n).unwrap();
            assert!((o.covariance(&x, &x) - s2).abs() < 1e-13);
            let m4 = o.expectation(&vec![x.clone(); 4]);
            assert!((m4 - 3.0 * s2 * s2).abs() < 1e-12);
            assert_eq!(o.expectation(&vec![x.clone(); 3]), 0.0);
        }
    }

    #[test]
    fn mode_power_against_wick_density_vanishes() {
        let o = GaussianOracle::new(&spec());
        let k = ModeIndex::new(vec![1]);
        let re = o.re(&k).unwrap();
        let im = o.im(&k).unwrap();
        let n = 2;
        let s2 = spec().sigma2(n).unwrap();
        let wick = Poly::new(vec![3.0 * s2 * s2, 0.0, -6.0 * s2, 0.0, 1.0]);
        let x = o.level_at(n, &[1.1]);
        let v = o.expectation_with_poly(&[re.clone(), re], &x, &wick)
            + o.expectation_with_poly(&[im.clone(), im], &x, &wick);
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn real_coordinates_have_half_covariance() {
        let o = GaussianOracle::new(&spec());
        let k = ModeIndex::new(vec![2]);
        let a = o.a(&k).unwrap();
        assert!((o.covariance(&a, &a) - 0.2).abs() < 1e-15);
        let re = o.re(&k).unwrap();
        let im_neg = o.im(&k.neg()).unwrap();
        let im = o.im(&k).unwrap();
        assert_eq!(im_neg, im.scaled(-1.0));
        assert_eq!(o.covariance(&re, &im), 0.0);
    }
}
