//! The free Gaussian cylinder measure on `T^d`.
//!
//! Per class `[k] ≠ [0]` the real coordinates `a_[k], b_[k]` are independent
//! centered Gaussians of variance `c_k = 1/(|k|^2 + m^2)`; the zero mode is a
//! centered Gaussian of variance `1/m^2`. In canonical coordinates
//! `x̂_k = (a_[k] + i b_[k]) / √2`.

mod isserlis;

pub use isserlis::{isserlis, GaussianOracle, LinearFunctional};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::modes::{ball, shell, ModeIndex, ModeLayout};
use crate::poly::gaussian_moment;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeMeasureSpec {
    pub dim: usize,
    pub mass: f64,
    pub n_max: usize,
}

impl FreeMeasureSpec {
    pub fn new(dim: usize, mass: f64, n_max: usize) -> Result<Self> {
        let spec = FreeMeasureSpec { dim, mass, n_max };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            Err(Error::LevelOutOfRange { level: n, max: self.n_max })
        } else {
            Ok(())
        }
    }

    pub fn layout(&self) -> Arc<ModeLayout> {
        ModeLayout::new(ball(self.dim, self.n_max))
    }

    /// Variance of each real coordinate `Re x̂_k`, `Im x̂_k` is `c_k / 2`; of
    /// `x̂_0` it is `1/m^2`. Returned in layout order.
    pub fn coordinate_variances(&self) -> Vec<f64> {
        let layout = self.layout();
        let mut v = Vec::with_capacity(layout.n_coords());
        if layout.has_zero() {
            v.push(1.0 / (self.mass * self.mass));
        }
        for k in layout.representatives() {
            let c = covariance_unchecked(k, self.mass);
            v.push(0.5 * c);
            v.push(0.5 * c);
        }
        v
    }

    /// `σ'_2(i) = Σ_{k ∈ B'_i} c_k`.
    pub fn sigma2_shell(&self, i: usize) -> f64 {
        shell(self.dim, i).iter().map(|k| covariance_unchecked(k, self.mass)).sum()
    }

    /// `σ_2(n) = Σ_{k ∈ B_n} c_k`.
    pub fn sigma2(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok((0..=n).map(|i| self.sigma2_shell(i)).sum())
    }

    /// `σ_2(n, m)`, the variance of the increment `x_m(s) - x_n(s)`.
    pub fn sigma2_band(&self, n: usize, m: usize) -> Result<f64> {
        self.check_level(m)?;
        if n > m {
            return Err(Error::InvalidParameter(format!("band ({n}, {m}) is reversed")));
        }
        Ok((n + 1..=m).map(|i| self.sigma2_shell(i)).sum())
    }
}

/// `c_k = 1/(|k|^2 + m^2)`.
pub fn covariance(k: &ModeIndex, mass: f64) -> Result<f64> {
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    Ok(covariance_unchecked(k, mass))
}

fn covariance_unchecked(k: &ModeIndex, mass: f64) -> f64 {
    1.0 / (k.norm_sq() as f64 + mass * mass)
}

/// `σ_2(n)` for the free measure, an exact mode sum.
pub fn sigma2_exact(spec: &FreeMeasureSpec, n: usize) -> Result<f64> {
    spec.sigma2(n)
}

/// Draws `count` independent fields on `B_{n_max}`, all with weight one.
///
/// Stream rule: sample `i` uses `ChaCha8Rng::seed_from_u64(seed)` switched to
/// stream `i`, and consumes standard normals in layout order (`x̂_0`, then
/// `a_[k], b_[k]` per sorted representative).
pub fn sample_free(spec: &FreeMeasureSpec, count: usize, seed: u64) -> Result<Ensemble> {
    spec.validate()?;
    let layout = spec.layout();
    let scales: Vec<f64> = spec.coordinate_variances().iter().map(|v| v.sqrt()).collect();
    let stride = layout.n_coords();
    let chunks: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            scales
                .iter()
                .map(|s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * s
                })
                .collect()
        })
        .collect();
    let mut coords = Vec::with_capacity(count * stride);
    chunks.into_iter().for_each(|c| coords.extend(c));
    Ensemble::new(*spec, layout, coords, vec![1.0; count], 0.0, seed)
}

/// `σ_p(n)`, `σ'_p(i)` and `σ_p(n, m)` for even and odd `p ≤ max_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    max_p: usize,
    n_max: usize,
    sigma: Vec<Vec<f64>>,
    sigma_prime: Vec<Vec<f64>>,
    sigma_band: Vec<Vec<Vec<f64>>>,
}

impl MomentTable {
    /// Exact Gaussian moments of the free measure.
    pub fn free(spec: &FreeMeasureSpec, max_p: usize) -> Self {
        let n_max = spec.n_max;
        let gm = |p: usize, v: f64| gaussian_moment(p, v);
        let s2: Vec<f64> = (0..=n_max).map(|n| spec.sigma2(n).unwrap()).collect();
        let s2p: Vec<f64> = (0..=n_max).map(|i| spec.sigma2_shell(i)).collect();
        let sigma = (0..=max_p).map(|p| s2.iter().map(|&v| gm(p, v)).collect()).collect();
        let sigma_prime = (0..=max_p).map(|p| s2p.iter().map(|&v| gm(p, v)).collect()).collect();
        let sigma_band = (0..=max_p)
            .map(|p| {
                (0..=n_max)
                    .map(|n| {
                        (0..=n_max)
                            .map(|m| if m > n { gm(p, spec.sigma2_band(n, m).unwrap()) } else { gm(p, 0.0) })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        MomentTable { max_p, n_max, sigma, sigma_prime, sigma_band }
    }

    /// Weighted Monte Carlo moments at `s = 0`.
    pub fn from_ensemble(ens: &Ensemble, max_p: usize) -> Self {
        let n_max = ens.spec().n_max;
        let feats = ens.point_features(&vec![0.0; ens.spec().dim]);
        let w = ens.weights();
        let total: f64 = w.iter().sum();
        let mean = |f: &dyn Fn(usize) -> f64| (0..w.len()).map(|j| w[j] * f(j)).sum::<f64>() / total;
        let mut sigma = vec![vec![0.0; n_max + 1]; max_p + 1];
        let mut sigma_prime = vec![vec![0.0; n_max + 1]; max_p + 1];
        let mut sigma_band = vec![vec![vec![0.0; n_max + 1]; n_max + 1]; max_p + 1];
        for p in 0..=max_p {
            for n in 0..=n_max {
                sigma[p][n] = mean(&|j| feats.level(n)[j].powi(p as i32));
                sigma_prime[p][n] = mean(&|j| feats.shell(n)[j].powi(p as i32));
                for m in 0..=n_max {
                    sigma_band[p][n][m] = if m > n {
                        mean(&|j| (feats.level(m)[j] - feats.level(n)[j]).powi(p as i32))
                    } else if p == 0 {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
        }
        MomentTable { max_p, n_max, sigma, sigma_prime, sigma_band }
    }

    pub fn max_p(&self) -> usize {
        self.max_p
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn sigma(&self, p: usize, n: usize) -> f64 {
        self.sigma[p][n]
    }

    pub fn sigma_prime(&self, p: usize, i: usize) -> f64 {
        self.sigma_prime[p][i]
    }

    pub fn sigma_band(&self, p: usize, n: usize, m: usize) -> f64 {
        self.sigma_band[p][n][m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_examples() {
        assert_eq!(covariance(&ModeIndex::zero(1), 1.0).unwrap(), 1.0);
        assert_eq!(covariance(&ModeIndex::new(vec![1, 0]), 1.0).unwrap(), 0.5);
        let c = covariance(&ModeIndex::new(vec![2, 1]), 0.5).unwrap();
        assert!((c - 1.0 / 5.25).abs() < 1e-15);
        let k = ModeIndex::new(vec![2, -1]);
        assert_eq!(covariance(&k, 0.3).unwrap(), covariance(&k.neg(), 0.3).unwrap());
        assert!(covariance(&k, 0.0).is_err());
        assert!(covariance(&k, -1.0).is_err());
    }

    #[test]
    fn sigma2_examples() {
        let s1 = FreeMeasureSpec::new(1, 1.0, 4).unwrap();
        assert_eq!(sigma2_exact(&s1, 0).unwrap(), 1.0);
        assert!((sigma2_exact(&s1, 1).unwrap() - 2.0).abs() < 1e-15);
        let s2 = FreeMeasureSpec::new(2, 1.0, 4).unwrap();
        assert!((sigma2_exact(&s2, 1).unwrap() - 13.0 / 3.0).abs() < 1e-14);
        assert_eq!(sigma2_exact(&s1, 5), Err(Error::LevelOutOfRange { level: 5, max: 4 }));
    }

    #[test]
    fn moment_table_telescopes() {
        let spec = FreeMeasureSpec::new(2, 0.7, 4).unwrap();
        let t = MomentTable::free(&spec, 4);
        for n in 0..4 {
            for m in n + 1..=4 {
                let direct: f64 = (n + 1..=m).map(|i| t.sigma_prime(2, i)).sum();
                assert_eq!(t.sigma_band(2, n, m), direct);
            }
            assert!(t.sigma(2, n) > 0.0);
            assert_eq!(t.sigma(3, n), 0.0);
            assert!((t.sigma(4, n) - 3.0 * t.sigma(2, n).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_spec_is_rejected() {
        assert!(FreeMeasureSpec::new(0, 1.0, 2).is_err());
        assert!(FreeMeasureSpec::new(1, 0.0, 2).is_err());
        assert!(FreeMeasureSpec::new(1, f64::NAN, 2).is_err());
    }
}
