//! Dependent-increment test measures and their mixing coefficients.
//!
//! A toy measure reweights free samples at the top cutoff `N` by
//! `exp(−g ∫ :x_N(s)^4: ds)`, Wick-ordered against the free `σ_2(N)`. Marginals
//! at lower levels are pushforwards of the same weighted samples.
//!
//! Mixing uses a fixed, reproducible choice of norm: empirical `L²` over the
//! ensemble, restricted to a finite dictionary of translation-invariant
//! polynomials of each shell. For shell `n ≥ 1` the dictionary is
//! `E_n^j` with `E_n = Σ_{k ∈ B'_n} |x̂_k|^2` and `2j ≤ D`; for shell `0` it is
//! `x̂_0^j`, `j ≤ D`. `C(n, m)` is the largest absolute correlation over all
//! dictionary pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appell::wick4;
use crate::ensemble::{check_ess, Ensemble};
use crate::error::{Error, Result};
use crate::free::{sample_free, FreeMeasureSpec};
use crate::jackknife::{jackknife, weighted_mean};
use crate::JACKKNIFE_BLOCKS;

/// Free samples reweighted by the integrated top-level Wick quartic.
pub fn gibbs_ensemble(spec: &FreeMeasureSpec, g: f64, count: usize, seed: u64) -> Result<Ensemble> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be finite and non-negative, got {g}")));
    }
    let free = sample_free(spec, count, seed)?;
    if g == 0.0 {
        return Ok(free);
    }
    let weights = gibbs_weights(&free, g)?;
    let ens = free.with_weights(weights, g)?;
    ens.check_ess()?;
    Ok(ens)
}

fn gibbs_weights(free: &Ensemble, g: f64) -> Result<Vec<f64>> {
    let spec = free.spec();
    let top = spec.n_max;
    let s2 = spec.sigma2(top)?;
    let wick = wick4(s2, 3.0 * s2 * s2);
    let ints = free.level_power_integrals(top, 4)?;
    let action: Vec<f64> = (0..free.count())
        .map(|i| g * (0..=4).map(|j| wick.coeff(j) * ints[j][i]).sum::<f64>())
        .collect();
    // shift by the minimum so the largest weight is one
    let floor = action.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(action.iter().map(|a| (floor - a).exp()).collect())
}

/// Dictionary features of one shell, per sample; `[feature][sample]`.
fn shell_dictionary(ens: &Ensemble, n: usize, degree: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let layout = ens.layout().clone();
    let count = ens.count();
    if n == 0 {
        let x0: Vec<f64> = (0..count).map(|i| ens.coords(i)[0]).collect();
        let names = (1..=degree).map(|j| format!("x0^{j}")).collect();
        let feats = (1..=degree).map(|j| x0.iter().map(|x| x.powi(j as i32)).collect()).collect();
        return (names, feats);
    }
    let offset = usize::from(layout.has_zero());
    let positions: Vec<usize> = layout
        .representatives()
        .iter()
        .enumerate()
        .filter(|(_, k)| k.max_norm() == n)
        .map(|(r, _)| offset + 2 * r)
        .collect();
    let power: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let c = ens.coords(i);
            // |x̂_k|^2 counted for both k and −k
            positions.iter().map(|&p| 2.0 * (c[p] * c[p] + c[p + 1] * c[p + 1])).sum()
        })
        .collect();
    let top = (degree / 2).max(1);
    let names = (1..=top).map(|j| format!("E{n}^{j}")).collect();
    let feats = (1..=top).map(|j| power.iter().map(|x| x.powi(j as i32)).collect()).collect();
    (names, feats)
}

fn abs_correlation(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let mf = weighted_mean(w, f);
    let mg = weighted_mean(w, g);
    let (mut cov, mut vf, mut vg) = (0.0, 0.0, 0.0);
    for j in 0..w.len() {
        let (a, b) = (f[j] - mf, g[j] - mg);
        cov += w[j] * a * b;
        vf += w[j] * a * a;
        vg += w[j] * b * b;
    }
    if vf <= 0.0 || vg <= 0.0 {
        return 0.0;
    }
    (cov / (vf * vg).sqrt()).abs()
}

/// One entry `C(n, m)` of the mixing table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub n: usize,
    pub m: usize,
    pub value: f64,
    pub stderr: f64,
    /// Dictionary pair attaining the maximum.
    pub argmax: (String, String),
    pub degree: usize,
}

/// `C(n, m)` for shells `n ≠ m`. Symmetric in `(n, m)` by construction.
pub fn mixing_estimate(ens: &Ensemble, n: usize, m: usize, degree: usize) -> Result<MixingEstimate> {
    if n == m {
        return Err(Error::InvalidParameter(format!("mixing needs distinct shells, got {n} twice")));
    }
    if degree == 0 {
        return Err(Error::InvalidParameter("dictionary degree must be positive".into()));
    }
    ens.spec().check_level(n.max(m))?;
    check_ess(ens.weights())?;
    let (lo, hi) = (n.min(m), n.max(m));
    let (names_a, fa) = shell_dictionary(ens, lo, degree);
    let (names_b, fb) = shell_dictionary(ens, hi, degree);
    let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| {
        Ok(fa.iter().flat_map(|a| fb.iter().map(move |b| abs_correlation(w, a, b))).collect())
    })?;
    let best = (0..jk.estimate.len())
        .max_by(|&i, &j| jk.estimate[i].total_cmp(&jk.estimate[j]))
        .expect("non-empty dictionary");
    let nb = fb.len();
    Ok(MixingEstimate {
        n: lo,
        m: hi,
        value: jk.estimate[best],
        stderr: jk.stderr[best],
        argmax: (names_a[best / nb].clone(), names_b[best % nb].clone()),
        degree,
    })
}

/// Every off-diagonal pair `n < m ≤ N`.
pub fn mixing_table(ens: &Ensemble, degree: usize) -> Result<Vec<MixingEstimate>> {
    let top = ens.spec().n_max;
    let mut out = Vec::new();
    for n in 0..=top {
        for m in n + 1..=top {
            out.push(mixing_estimate(ens, n, m, degree)?);
        }
    }
    Ok(out)
}

/// `Σ_{m ≠ n} C(n, m) σ'_4(m)` truncated at `N`, with `σ'_4` estimated on the
/// ensemble.
pub fn decay_sum(ens: &Ensemble, table: &[MixingEstimate], n: usize) -> Result<(f64, f64)> {
    ens.spec().check_level(n)?;
    let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
    let mut value = 0.0;
    let mut var = 0.0;
    for e in table.iter().filter(|e| e.n == n || e.m == n) {
        let other = if e.n == n { e.m } else { e.n };
        let u4: Vec<f64> = feats.shell(other).iter().map(|u| u.powi(4)).collect();
        let s4 = weighted_mean(ens.weights(), &u4);
        value += e.value * s4;
        var += (e.stderr * s4).powi(2);
    }
    Ok((value, var.sqrt()))
}
