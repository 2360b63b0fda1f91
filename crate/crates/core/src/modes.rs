//! Mode geometry on `Z^d`, momentum-shell coordinate systems and the
//! block-partition coordinates of a torus.
//!
//! A field truncated to a symmetric mode set `A = -A` is stored in canonical
//! real form: the real zero mode plus one complex coefficient per class
//! `[k] = {k, -k}`. The conjugate half is reconstructed on demand, so the
//! reality constraint `x̂_{-k} = conj(x̂_k)` holds by construction.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Add;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A wave vector `k ∈ Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex(Vec<i64>);

impl ModeIndex {
    pub fn new(components: Vec<i64>) -> Self {
        ModeIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        ModeIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn neg(&self) -> Self {
        ModeIndex(self.0.iter().map(|k| -k).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// `|k|^2 = Σ k_i^2`.
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|k| k * k).sum()
    }

    /// `max |k_i|`, the shell index of `k`.
    pub fn max_norm(&self) -> usize {
        self.0.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// True for the canonical member of `{k, -k}`: the first non-zero
    /// component is positive. The zero vector is not a representative.
    pub fn is_representative(&self) -> bool {
        match self.0.iter().find(|&&k| k != 0) {
            Some(&k) => k > 0,
            None => false,
        }
    }

    /// `k · s`.
    pub fn phase(&self, s: &[f64]) -> f64 {
        self.0.iter().zip(s).map(|(&k, &x)| k as f64 * x).sum()
    }
}

/// A finite, symmetric set of wave vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSet {
    dim: usize,
    modes: Vec<ModeIndex>,
}

impl ModeSet {
    pub fn new(dim: usize, modes: impl IntoIterator<Item = ModeIndex>) -> Result<Self> {
        let mut modes: Vec<ModeIndex> = modes.into_iter().collect();
        for k in &modes {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k.dim() });
            }
        }
        modes.sort();
        modes.dedup();
        let set = ModeSet { dim, modes };
        if set.modes.iter().any(|k| !set.contains(&k.neg())) {
            return Err(Error::NotSymmetric);
        }
        Ok(set)
    }

    pub fn empty(dim: usize) -> Self {
        ModeSet { dim, modes: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeIndex> {
        self.modes.iter()
    }

    pub fn contains(&self, k: &ModeIndex) -> bool {
        self.modes.binary_search(k).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&ModeIndex::zero(self.dim))
    }

    pub fn is_subset_of(&self, other: &ModeSet) -> bool {
        self.dim == other.dim && self.modes.iter().all(|k| other.contains(k))
    }

    /// One wave vector per non-zero class `[k]`, in sorted order.
    pub fn representatives(&self) -> Vec<ModeIndex> {
        self.modes.iter().filter(|k| k.is_representative()).cloned().collect()
    }

    pub fn union(&self, other: &ModeSet) -> ModeSet {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        modes.sort();
        modes.dedup();
        ModeSet { dim: self.dim, modes }
    }

    /// Largest shell index present, or `None` for the empty set.
    pub fn max_level(&self) -> Option<usize> {
        self.modes.iter().map(ModeIndex::max_norm).max()
    }
}

fn cube(dim: usize, n: usize) -> Vec<ModeIndex> {
    let n = n as i64;
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-n..=n).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(ModeIndex).collect()
}

/// The shell `B'_n = { k : max |k_i| = n }`.
pub fn shell(dim: usize, n: usize) -> ModeSet {
    assert!(dim >= 1, "dimension must be positive");
    let modes = cube(dim, n).into_iter().filter(|k| k.max_norm() == n);
    ModeSet::new(dim, modes).expect("shells are symmetric")
}

/// The ball `B_n = ∪_{m ≤ n} B'_m`, i.e. the cube `max |k_i| ≤ n`.
pub fn ball(dim: usize, n: usize) -> ModeSet {
    assert!(dim >= 1, "dimension must be positive");
    ModeSet::new(dim, cube(dim, n)).expect("balls are symmetric")
}

/// Canonical coordinate layout of a symmetric mode set.
///
/// Real coordinates are ordered as `[x̂_0 (if present), Re x̂_{k1}, Im x̂_{k1}, ...]`
/// over the sorted representatives.
#[derive(Debug, PartialEq)]
pub struct ModeLayout {
    cutoff: ModeSet,
    reps: Vec<ModeIndex>,
    rep_levels: Vec<usize>,
    has_zero: bool,
}

impl ModeLayout {
    pub fn new(cutoff: ModeSet) -> Arc<Self> {
        let reps = cutoff.representatives();
        let rep_levels = reps.iter().map(ModeIndex::max_norm).collect();
        let has_zero = cutoff.contains_zero();
        Arc::new(ModeLayout { cutoff, reps, rep_levels, has_zero })
    }

    pub fn cutoff(&self) -> &ModeSet {
        &self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.dim()
    }

    pub fn representatives(&self) -> &[ModeIndex] {
        &self.reps
    }

    pub fn has_zero(&self) -> bool {
        self.has_zero
    }

    /// Number of real coordinates.
    pub fn n_coords(&self) -> usize {
        usize::from(self.has_zero) + 2 * self.reps.len()
    }

    /// Position of the representative of `k` (which must be non-zero).
    pub fn rep_position(&self, k: &ModeIndex) -> Option<(usize, bool)> {
        let (rep, conj) = if k.is_representative() { (k.clone(), false) } else { (k.neg(), true) };
        self.reps.binary_search(&rep).ok().map(|i| (i, conj))
    }

    pub fn max_level(&self) -> usize {
        self.cutoff.max_level().unwrap_or(0)
    }
}

/// Precomputed trigonometric factors of a layout at a fixed point `s`, so that
/// shell values `x'_i(s)` can be read off real coordinates with one dot
/// product per shell.
#[derive(Clone, Debug)]
pub struct PointBasis {
    levels: Vec<usize>,
    // x(s) contribution of (Re, Im) is 2 Re(x̂ e^{iks}) = 2cos·Re − 2sin·Im
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    has_zero: bool,
    n_levels: usize,
}

impl PointBasis {
    pub fn new(layout: &ModeLayout, s: &[f64]) -> Self {
        let (cos2, sin2) = layout
            .reps
            .iter()
            .map(|k| {
                let ph = k.phase(s);
                (2.0 * ph.cos(), 2.0 * ph.sin())
            })
            .unzip();
        PointBasis {
            levels: layout.rep_levels.clone(),
            cos2,
            sin2,
            has_zero: layout.has_zero,
            n_levels: layout.max_level() + 1,
        }
    }

    /// Shell values `x'_0(s), ..., x'_N(s)` from real coordinates, where
    /// `x'_0 = x̂_0`.
    pub fn shell_values(&self, coords: &[f64], out: &mut [f64]) {
        out[..self.n_levels].iter_mut().for_each(|v| *v = 0.0);
        let off = usize::from(self.has_zero);
        if self.has_zero {
            out[0] = coords[0];
        }
        for (j, &lvl) in self.levels.iter().enumerate() {
            let re = coords[off + 2 * j];
            let im = coords[off + 2 * j + 1];
            out[lvl] += self.cos2[j] * re - self.sin2[j] * im;
        }
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// Full field value at the point.
    pub fn value(&self, coords: &[f64]) -> f64 {
        let off = usize::from(self.has_zero);
        let mut acc = if self.has_zero { coords[0] } else { 0.0 };
        for j in 0..self.levels.len() {
            acc += self.cos2[j] * coords[off + 2 * j] - self.sin2[j] * coords[off + 2 * j + 1];
        }
        acc
    }
}

/// A real field truncated to a symmetric mode set.
#[derive(Clone, Debug)]
pub struct FieldConfig {
    layout: Arc<ModeLayout>,
    coords: Vec<f64>,
}

impl PartialEq for FieldConfig {
    fn eq(&self, other: &Self) -> bool {
        self.layout.cutoff == other.layout.cutoff && self.coords == other.coords
    }
}

impl FieldConfig {
    pub fn zeros(cutoff: ModeSet) -> Self {
        let layout = ModeLayout::new(cutoff);
        let coords = vec![0.0; layout.n_coords()];
        FieldConfig { layout, coords }
    }

    pub fn from_real_coords(layout: Arc<ModeLayout>, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != layout.n_coords() {
            return Err(Error::DimensionMismatch { expected: layout.n_coords(), got: coords.len() });
        }
        Ok(FieldConfig { layout, coords })
    }

    /// Builds a field from Fourier coefficients. Missing conjugate partners are
    /// filled in; supplied pairs must already be conjugate and `x̂_0` real.
    pub fn from_coeffs(
        cutoff: ModeSet,
        coeffs: impl IntoIterator<Item = (ModeIndex, Complex64)>,
    ) -> Result<Self> {
        let given: BTreeMap<ModeIndex, Complex64> = coeffs.into_iter().collect();
        let mut x = FieldConfig::zeros(cutoff);
        for (k, z) in &given {
            if !x.layout.cutoff.contains(k) {
                return Err(Error::NotSubset);
            }
            if let Some(partner) = given.get(&k.neg()) {
                if (partner.conj() - z).norm() > 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "coefficients at {:?} and its negative are not conjugate",
                        k.components()
                    )));
                }
            }
            x.set_coeff(k, *z)?;
        }
        Ok(x)
    }

    pub fn layout(&self) -> &Arc<ModeLayout> {
        &self.layout
    }

    pub fn cutoff(&self) -> &ModeSet {
        &self.layout.cutoff
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn real_coords(&self) -> &[f64] {
        &self.coords
    }

    /// `x̂_k`, or `None` when `k` is outside the cutoff.
    pub fn coeff(&self, k: &ModeIndex) -> Option<Complex64> {
        if k.is_zero() {
            return self.layout.has_zero.then(|| Complex64::new(self.coords[0], 0.0));
        }
        let (j, conj) = self.layout.rep_position(k)?;
        let off = usize::from(self.layout.has_zero);
        let z = Complex64::new(self.coords[off + 2 * j], self.coords[off + 2 * j + 1]);
        Some(if conj { z.conj() } else { z })
    }

    /// Sets `x̂_k` and, implicitly, `x̂_{-k} = conj(x̂_k)`.
    pub fn set_coeff(&mut self, k: &ModeIndex, z: Complex64) -> Result<()> {
        if k.is_zero() {
            if !self.layout.has_zero {
                return Err(Error::NotSubset);
            }
            if z.im != 0.0 {
                return Err(Error::InvalidParameter("zero mode must be real".into()));
            }
            self.coords[0] = z.re;
            return Ok(());
        }
        let (j, conj) = self.layout.rep_position(k).ok_or(Error::NotSubset)?;
        let z = if conj { z.conj() } else { z };
        let off = usize::from(self.layout.has_zero);
        self.coords[off + 2 * j] = z.re;
        self.coords[off + 2 * j + 1] = z.im;
        Ok(())
    }

    /// Iterates over all `(k, x̂_k)` in the cutoff, conjugate half included.
    pub fn coeffs(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        self.layout.cutoff.iter().map(move |k| (k.clone(), self.coeff(k).unwrap()))
    }

    /// Restriction `P_A x` to a symmetric subset `A` of the cutoff.
    pub fn project(&self, subset: &ModeSet) -> Result<FieldConfig> {
        if !subset.is_subset_of(&self.layout.cutoff) {
            return Err(Error::NotSubset);
        }
        let mut y = FieldConfig::zeros(subset.clone());
        if y.layout.has_zero {
            y.coords[0] = self.coords[0];
        }
        let off_in = usize::from(self.layout.has_zero);
        let off_out = usize::from(y.layout.has_zero);
        for (j, k) in y.layout.reps.iter().enumerate() {
            let (i, _) = self.layout.rep_position(k).expect("subset checked");
            y.coords[off_out + 2 * j] = self.coords[off_in + 2 * i];
            y.coords[off_out + 2 * j + 1] = self.coords[off_in + 2 * i + 1];
        }
        Ok(y)
    }

    /// `P_n x`, the projection to the ball `B_n`.
    pub fn project_level(&self, n: usize) -> Result<FieldConfig> {
        self.project(&ball(self.dim(), n))
    }

    /// `x(s) = Σ_k x̂_k e^{ik·s}`.
    pub fn evaluate(&self, s: &[f64]) -> f64 {
        let off = usize::from(self.layout.has_zero);
        let mut acc = if self.layout.has_zero { self.coords[0] } else { 0.0 };
        for (j, k) in self.layout.reps.iter().enumerate() {
            let z = Complex64::new(self.coords[off + 2 * j], self.coords[off + 2 * j + 1]);
            acc += 2.0 * (z * Complex64::from_polar(1.0, k.phase(s))).re;
        }
        acc
    }

    /// Shell values `x'_0(s), ..., x'_N(s)` with `N` the top shell of the cutoff.
    pub fn shell_values(&self, s: &[f64]) -> Vec<f64> {
        let basis = PointBasis::new(&self.layout, s);
        let mut out = vec![0.0; basis.n_levels()];
        basis.shell_values(&self.coords, &mut out);
        out
    }

    /// `x_n(s)`: the value of the projection onto `B_n` at `s`.
    pub fn level_value(&self, n: usize, s: &[f64]) -> f64 {
        self.shell_values(s).iter().take(n + 1).sum()
    }

    /// The translated field `y(s) = x(s + s0)`, i.e. `ŷ_k = x̂_k e^{ik·s0}`.
    pub fn translate(&self, s0: &[f64]) -> FieldConfig {
        let mut y = self.clone();
        let off = usize::from(self.layout.has_zero);
        for (j, k) in self.layout.reps.iter().enumerate() {
            let z = Complex64::new(self.coords[off + 2 * j], self.coords[off + 2 * j + 1])
                * Complex64::from_polar(1.0, k.phase(s0));
            y.coords[off + 2 * j] = z.re;
            y.coords[off + 2 * j + 1] = z.im;
        }
        y
    }

    /// `Σ_k |x̂_k|^2` over a shell, the shell's power.
    pub fn shell_power(&self, n: usize) -> f64 {
        let off = usize::from(self.layout.has_zero);
        let mut acc = if n == 0 && self.layout.has_zero { self.coords[0].powi(2) } else { 0.0 };
        for (j, &lvl) in self.layout.rep_levels.iter().enumerate() {
            if lvl == n {
                // both k and -k
                acc += 2.0 * (self.coords[off + 2 * j].powi(2) + self.coords[off + 2 * j + 1].powi(2));
            }
        }
        acc
    }
}

impl Add for &FieldConfig {
    type Output = FieldConfig;

    fn add(self, rhs: &FieldConfig) -> FieldConfig {
        assert_eq!(self.layout.cutoff, rhs.layout.cutoff, "fields must share a cutoff");
        let coords = self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect();
        FieldConfig { layout: self.layout.clone(), coords }
    }
}

/// Uniform tensor grid on `T^d = [0, 2π)^d`.
///
/// With `G` points per axis the rule integrates every trigonometric polynomial
/// of degree `< G` per axis exactly.
#[derive(Clone, Debug)]
pub struct TorusGrid {
    dim: usize,
    per_axis: usize,
    points: Vec<Vec<f64>>,
}

impl TorusGrid {
    pub fn new(dim: usize, per_axis: usize) -> Self {
        assert!(dim >= 1 && per_axis >= 1);
        let h = 2.0 * PI / per_axis as f64;
        let mut points = vec![Vec::with_capacity(dim)];
        for _ in 0..dim {
            points = points
                .into_iter()
                .flat_map(|p| {
                    (0..per_axis).map(move |i| {
                        let mut q = p.clone();
                        q.push(i as f64 * h);
                        q
                    })
                })
                .collect();
        }
        TorusGrid { dim, per_axis, points }
    }

    /// `G = 8 n_max + 1` points per axis: exact for degree-8 polynomials of a
    /// field truncated at `n_max`.
    pub fn for_cutoff(dim: usize, n_max: usize) -> Self {
        TorusGrid::new(dim, 8 * n_max + 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `(2π)^d`, the Lebesgue volume of the torus.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Quadrature weight of each point.
    pub fn weight(&self) -> f64 {
        self.volume() / self.points.len() as f64
    }

    /// `∫_{T^d} g(s) ds`.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().map(|s| g(s)).sum::<f64>() * self.weight()
    }
}

/// Partition of `T^d` into `r^d` equal axis-aligned cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    dim: usize,
    per_axis: usize,
}

impl BlockPartition {
    pub fn new(dim: usize, per_axis: usize) -> Result<Self> {
        if dim == 0 || per_axis == 0 {
            return Err(Error::InvalidParameter("partition needs positive dimension and resolution".into()));
        }
        Ok(BlockPartition { dim, per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn n_cells(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    /// Every cell of `self` lies inside one cell of `coarse`.
    pub fn refines(&self, coarse: &BlockPartition) -> bool {
        self.dim == coarse.dim && self.per_axis % coarse.per_axis == 0
    }

    /// Lebesgue volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.per_axis as f64).powi(self.dim as i32)
    }
}

/// A real function sampled on the uniform grid `s_i = 2π i / r` per axis,
/// stored row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    per_axis: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dim: usize, per_axis: usize, values: Vec<f64>) -> Result<Self> {
        let expected = per_axis.pow(dim as u32);
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(GridFunction { dim, per_axis, values })
    }

    pub fn from_fn(dim: usize, per_axis: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let grid = TorusGrid::new(dim, per_axis);
        let values = grid.points().iter().map(|s| f(s)).collect();
        GridFunction { dim, per_axis, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    fn cell_index(&self, flat: usize, ratio: usize, cells_per_axis: usize) -> usize {
        let mut rem = flat;
        let mut cell = 0;
        let mut stride = 1;
        for _ in 0..self.dim {
            let i = rem % self.per_axis;
            rem /= self.per_axis;
            cell += (i / ratio) * stride;
            stride *= cells_per_axis;
        }
        cell
    }

    /// Conditional expectation onto the partition: each cell is replaced by
    /// the mean of the function over the cell.
    pub fn block_average(&self, partition: &BlockPartition) -> Result<GridFunction> {
        if partition.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: partition.dim });
        }
        if self.per_axis % partition.per_axis != 0 {
            return Err(Error::ResolutionMismatch { grid: self.per_axis, partition: partition.per_axis });
        }
        let ratio = self.per_axis / partition.per_axis;
        let n_cells = partition.n_cells();
        let mut sums = vec![0.0; n_cells];
        let cells: Vec<usize> =
            (0..self.values.len()).map(|i| self.cell_index(i, ratio, partition.per_axis)).collect();
        for (v, &c) in self.values.iter().zip(&cells) {
            sums[c] += v;
        }
        let per_cell = ratio.pow(self.dim as u32) as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / per_cell).collect();
        let values = cells.iter().map(|&c| means[c]).collect();
        Ok(GridFunction { dim: self.dim, per_axis: self.per_axis, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_count(dim: usize, n: usize, exact_shell: bool) -> usize {
        let r = n as i64;
        let total = (2 * n + 1).pow(dim as u32);
        (0..total)
            .filter(|&mut_idx| {
                let mut idx = mut_idx;
                let mut mx = 0;
                for _ in 0..dim {
                    let k = (idx % (2 * n + 1)) as i64 - r;
                    idx /= 2 * n + 1;
                    mx = mx.max(k.abs());
                }
                !exact_shell || mx == r
            })
            .count()
    }

    #[test]
    fn shell_examples() {
        let s = shell(1, 1);
        let got: Vec<_> = s.iter().cloned().collect();
        assert_eq!(got, vec![ModeIndex::new(vec![-1]), ModeIndex::new(vec![1])]);
        let s0 = shell(2, 0);
        assert_eq!(s0.iter().cloned().collect::<Vec<_>>(), vec![ModeIndex::zero(2)]);
        assert_eq!(shell(2, 1).len(), brute_force_count(2, 1, true));
        assert_eq!(shell(2, 1).len(), 8);
    }

    #[test]
    fn shell_sizes_match_formula() {
        for d in 1..=3 {
            for n in 1..=4usize {
                let expected = (2 * n + 1).pow(d as u32) - (2 * n - 1).pow(d as u32);
                assert_eq!(shell(d, n).len(), expected);
                assert_eq!(shell(d, n).len(), brute_force_count(d, n, true));
            }
        }
    }

    #[test]
    fn ball_examples() {
        let b = ball(1, 1);
        assert_eq!(b.iter().map(|k| k.components()[0]).collect::<Vec<_>>(), vec![-1, 0, 1]);
        assert_eq!(ball(1, 0).len(), 1);
        assert_eq!(ball(3, 2).len(), 125);
        let union = (0..=3).fold(ModeSet::empty(2), |acc, m| acc.union(&shell(2, m)));
        assert_eq!(union, ball(2, 3));
    }

    #[test]
    fn asymmetric_set_is_rejected() {
        let r = ModeSet::new(1, vec![ModeIndex::new(vec![1])]);
        assert_eq!(r, Err(Error::NotSymmetric));
    }

    #[test]
    fn reality_from_coeffs() {
        let k = ModeIndex::new(vec![1, -2]);
        let z = Complex64::new(0.3, -0.7);
        let x = FieldConfig::from_coeffs(ball(2, 2), vec![(k.clone(), z)]).unwrap();
        assert_eq!(x.coeff(&k).unwrap(), z);
        assert_eq!(x.coeff(&k.neg()).unwrap(), z.conj());
        let bad = FieldConfig::from_coeffs(
            ball(1, 1),
            vec![(ModeIndex::new(vec![1]), Complex64::new(1.0, 1.0)), (ModeIndex::new(vec![-1]), Complex64::new(1.0, 1.0))],
        );
        assert!(bad.is_err());
        let imaginary_zero = FieldConfig::from_coeffs(ball(1, 1), vec![(ModeIndex::zero(1), Complex64::new(0.0, 1.0))]);
        assert!(imaginary_zero.is_err());
    }

    #[test]
    fn projection_examples() {
        let x = FieldConfig::from_coeffs(
            ball(1, 1),
            vec![(ModeIndex::zero(1), Complex64::new(2.5, 0.0)), (ModeIndex::new(vec![1]), Complex64::new(0.1, 0.2))],
        )
        .unwrap();
        assert_eq!(x.project(x.cutoff()).unwrap(), x);
        let p = x.project(&ball(1, 0)).unwrap();
        assert_eq!(p.cutoff().len(), 1);
        assert_eq!(p.coeff(&ModeIndex::zero(1)).unwrap().re, 2.5);
        assert_eq!(x.project(&ball(1, 2)), Err(Error::NotSubset));
    }

    #[test]
    fn evaluate_examples() {
        let c = FieldConfig::from_coeffs(ball(2, 1), vec![(ModeIndex::zero(2), Complex64::new(1.75, 0.0))]).unwrap();
        for s in [[0.0, 0.0], [1.0, 2.0], [5.5, 0.3]] {
            assert_eq!(c.evaluate(&s), 1.75);
        }
        let cos = FieldConfig::from_coeffs(ball(1, 1), vec![(ModeIndex::new(vec![1]), Complex64::new(0.5, 0.0))]).unwrap();
        for i in 0..50 {
            let s = i as f64 * 0.13;
            assert!((cos.evaluate(&[s]) - s.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn translate_examples() {
        let cos = FieldConfig::from_coeffs(ball(1, 1), vec![(ModeIndex::new(vec![1]), Complex64::new(0.5, 0.0))]).unwrap();
        assert_eq!(cos.translate(&[0.0]), cos);
        let shifted = cos.translate(&[PI / 2.0]);
        for i in 0..64 {
            let s = 2.0 * PI * i as f64 / 64.0;
            assert!((shifted.evaluate(&[s]) + s.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn block_average_examples() {
        let constant = GridFunction::from_fn(2, 8, |_| 3.0);
        let p = BlockPartition::new(2, 4).unwrap();
        assert_eq!(constant.block_average(&p).unwrap(), constant);

        let f = GridFunction::new(1, 4, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let p4 = BlockPartition::new(1, 4).unwrap();
        assert_eq!(f.block_average(&p4).unwrap(), f);

        let g = GridFunction::from_fn(1, 16, |s| (3.0 * s[0]).sin() + s[0] * s[0]);
        let p2 = BlockPartition::new(1, 2).unwrap();
        let two_stage = g.block_average(&p4).unwrap().block_average(&p2).unwrap();
        let direct = g.block_average(&p2).unwrap();
        assert!(two_stage.values().iter().zip(direct.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        // cell means by hand: first half of the circle is grid points 0..8
        let half: f64 = g.values()[..8].iter().sum::<f64>() / 8.0;
        assert!((direct.values()[0] - half).abs() < 1e-12);
    }

    #[test]
    fn block_average_rejects_mismatch() {
        let f = GridFunction::from_fn(1, 6, |s| s[0]);
        let p = BlockPartition::new(1, 4).unwrap();
        assert_eq!(f.block_average(&p), Err(Error::ResolutionMismatch { grid: 6, partition: 4 }));
    }

    #[test]
    fn torus_grid_integrates_trig_polynomials_exactly() {
        let grid = TorusGrid::for_cutoff(1, 2);
        let v = grid.integrate(|s| (4.0 * s[0]).cos().powi(2));
        assert!((v - PI).abs() < 1e-12);
        let grid2 = TorusGrid::for_cutoff(2, 1);
        let w = grid2.integrate(|s| (s[0] + s[1]).cos().powi(4));
        assert!((w - 3.0 / 8.0 * 4.0 * PI * PI).abs() < 1e-11);
    }
}
