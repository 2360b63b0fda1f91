//! Weighted sample sets at a top cutoff `N`.
//!
//! An ensemble represents a (possibly non-Gaussian) cylinder measure through
//! its pushforward marginals: the marginal at level `n ≤ N` is obtained by
//! projecting every sample, so marginal compatibility holds by construction.
//!
//! # Binary layout
//!
//! Little-endian throughout:
//!
//! ```text
//! magic   8 bytes  b"CYLFENS1"
//! dim     u32
//! n_max   u32
//! mass    f64
//! g       f64
//! seed    u64
//! count   u64
//! stride  u64      real coordinates per sample
//! count × { weight f64, stride × f64 }
//! ```

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free::FreeMeasureSpec;
use crate::jackknife::effective_sample_size;
use crate::modes::{FieldConfig, ModeLayout, PointBasis, TorusGrid};
use crate::MIN_ESS;

const MAGIC: &[u8; 8] = b"CYLFENS1";

#[derive(Clone, Debug)]
pub struct Ensemble {
    spec: FreeMeasureSpec,
    layout: Arc<ModeLayout>,
    coords: Vec<f64>,
    weights: Vec<f64>,
    g: f64,
    seed: u64,
}

impl PartialEq for Ensemble {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.g.to_bits() == other.g.to_bits()
            && self.seed == other.seed
            && self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Shell and level values of every sample at one point `s`.
#[derive(Clone, Debug)]
pub struct PointFeatures {
    shells: Vec<Vec<f64>>,
    levels: Vec<Vec<f64>>,
}

impl PointFeatures {
    /// `x'_i(s)` per sample (`x'_0 = x̂_0`).
    pub fn shell(&self, i: usize) -> &[f64] {
        &self.shells[i]
    }

    /// `x_n(s)` per sample.
    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

impl Ensemble {
    pub fn new(
        spec: FreeMeasureSpec,
        layout: Arc<ModeLayout>,
        coords: Vec<f64>,
        weights: Vec<f64>,
        g: f64,
        seed: u64,
    ) -> Result<Self> {
        let stride = layout.n_coords();
        if coords.len() != stride * weights.len() {
            return Err(Error::DimensionMismatch { expected: stride * weights.len(), got: coords.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !weights.is_empty() && !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter("weights must have a positive finite sum".into()));
        }
        Ok(Ensemble { spec, layout, coords, weights, g, seed })
    }

    pub fn spec(&self) -> &FreeMeasureSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Arc<ModeLayout> {
        &self.layout
    }

    pub fn count(&self) -> usize {
        self.weights.len()
    }

    pub fn stride(&self) -> usize {
        self.layout.n_coords()
    }

    /// Coupling of the generating density (`0` for the free measure).
    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn ess(&self) -> f64 {
        effective_sample_size(&self.weights)
    }

    pub fn check_ess(&self) -> Result<()> {
        check_ess(&self.weights)
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.coords[i * s..(i + 1) * s]
    }

    pub fn sample(&self, i: usize) -> FieldConfig {
        FieldConfig::from_real_coords(self.layout.clone(), self.coords(i).to_vec()).expect("stride matches layout")
    }

    /// Same samples, new weights.
    pub fn with_weights(&self, weights: Vec<f64>, g: f64) -> Result<Ensemble> {
        Ensemble::new(self.spec, self.layout.clone(), self.coords.clone(), weights, g, self.seed)
    }

    pub fn point_features(&self, s: &[f64]) -> PointFeatures {
        let basis = PointBasis::new(&self.layout, s);
        let nl = basis.n_levels();
        let n = self.count();
        let mut shells = vec![vec![0.0; n]; nl];
        let mut buf = vec![0.0; nl];
        for i in 0..n {
            basis.shell_values(self.coords(i), &mut buf);
            for (l, v) in buf.iter().enumerate() {
                shells[l][i] = *v;
            }
        }
        let mut levels = shells.clone();
        for l in 1..nl {
            let (lo, hi) = levels.split_at_mut(l);
            hi[0].iter_mut().zip(&lo[l - 1]).for_each(|(a, b)| *a += b);
        }
        PointFeatures { shells, levels }
    }

    /// `∫_{T^d} x_n(s)^j ds` for `j = 0..=max_power`, per sample, on the exact
    /// grid of the top cutoff. Indexed `[j][sample]`.
    pub fn level_power_integrals(&self, n: usize, max_power: usize) -> Result<Vec<Vec<f64>>> {
        self.spec.check_level(n)?;
        let grid = TorusGrid::new(self.spec.dim, (max_power.max(1)) * self.spec.n_max.max(1) + 1);
        let bases: Vec<PointBasis> = grid.points().iter().map(|s| PointBasis::new(&self.layout, s)).collect();
        let w = grid.weight();
        let nl = self.spec.n_max + 1;
        let per_sample: Vec<Vec<f64>> = (0..self.count())
            .into_par_iter()
            .map(|i| {
                let c = self.coords(i);
                let mut buf = vec![0.0; nl];
                let mut acc = vec![0.0; max_power + 1];
                for b in &bases {
                    b.shell_values(c, &mut buf);
                    let x: f64 = buf[..=n].iter().sum();
                    let mut xp = 1.0;
                    for a in acc.iter_mut() {
                        *a += xp;
                        xp *= x;
                    }
                }
                acc.iter().map(|a| a * w).collect()
            })
            .collect();
        Ok((0..=max_power).map(|j| per_sample.iter().map(|r| r[j]).collect()).collect())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.spec.dim as u32).to_le_bytes())?;
        out.write_all(&(self.spec.n_max as u32).to_le_bytes())?;
        out.write_all(&self.spec.mass.to_le_bytes())?;
        out.write_all(&self.g.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&(self.count() as u64).to_le_bytes())?;
        out.write_all(&(self.stride() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (1 + self.stride()));
        for i in 0..self.count() {
            buf.clear();
            buf.extend_from_slice(&self.weights[i].to_le_bytes());
            for c in self.coords(i) {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Ensemble> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let dim = read_u32(&mut input)? as usize;
        let n_max = read_u32(&mut input)? as usize;
        let mass = read_f64(&mut input)?;
        let g = read_f64(&mut input)?;
        let seed = read_u64(&mut input)?;
        let count = read_u64(&mut input)? as usize;
        let stride = read_u64(&mut input)? as usize;
        let spec = FreeMeasureSpec::new(dim, mass, n_max)?;
        let layout = spec.layout();
        if layout.n_coords() != stride {
            return Err(Error::Format(format!("stride {stride} does not match layout {}", layout.n_coords())));
        }
        let mut weights = Vec::with_capacity(count);
        let mut coords = Vec::with_capacity(count * stride);
        for _ in 0..count {
            weights.push(read_f64(&mut input)?);
            for _ in 0..stride {
                coords.push(read_f64(&mut input)?);
            }
        }
        Ensemble::new(spec, layout, coords, weights, g, seed)
    }
}

pub(crate) fn check_ess(weights: &[f64]) -> Result<()> {
    let ess = effective_sample_size(weights);
    if ess.is_finite() && ess >= MIN_ESS {
        Ok(())
    } else {
        Err(Error::LowEss { ess, threshold: MIN_ESS })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
