//! Delete-one-block jackknife over weighted samples.
//!
//! A statistic is any function of the per-sample weight vector; replicate `b`
//! zeroes the weights of contiguous block `b`. Replicates run in parallel and
//! are collected in block order, so results do not depend on thread count.

use rayon::prelude::*;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct JackknifeResult {
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Block boundaries `[start, end)` for `n` samples split into `blocks` parts.
pub fn block_ranges(n: usize, blocks: usize) -> Vec<(usize, usize)> {
    (0..blocks).map(|b| (b * n / blocks, (b + 1) * n / blocks)).collect()
}

/// Runs `stat` on the full weights and on each delete-one-block replicate.
pub fn jackknife<F>(weights: &[f64], blocks: usize, stat: F) -> Result<JackknifeResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let estimate = stat(weights)?;
    let replicates: Vec<Vec<f64>> = block_ranges(weights.len(), blocks)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut w = weights.to_vec();
            w[lo..hi].iter_mut().for_each(|x| *x = 0.0);
            stat(&w)
        })
        .collect::<Result<_>>()?;
    let stderr = jackknife_stderr(&replicates, estimate.len());
    Ok(JackknifeResult { estimate, stderr })
}

/// `sqrt((B-1)/B Σ_b (θ_b - θ̄)^2)` per component.
pub fn jackknife_stderr(replicates: &[Vec<f64>], len: usize) -> Vec<f64> {
    let b = replicates.len() as f64;
    (0..len)
        .map(|j| {
            let mean = replicates.iter().map(|r| r[j]).sum::<f64>() / b;
            let ss: f64 = replicates.iter().map(|r| (r[j] - mean).powi(2)).sum();
            ((b - 1.0) / b * ss).sqrt()
        })
        .collect()
}

/// Weighted mean `Σ w f / Σ w`.
pub fn weighted_mean(weights: &[f64], values: &[f64]) -> f64 {
    let (num, den) = weights
        .iter()
        .zip(values)
        .fold((0.0, 0.0), |(n, d), (&w, &v)| (n + w * v, d + w));
    num / den
}

/// Kish effective sample size `(Σw)^2 / Σw^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let (s, s2) = weights.iter().fold((0.0, 0.0), |(s, s2), &w| (s + w, s2 + w * w));
    s * s / s2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_stderr_matches_textbook_value() {
        // for the plain mean the block jackknife with one sample per block
        // reproduces s / sqrt(n)
        let values: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let w = vec![1.0; 20];
        let r = jackknife(&w, 20, |w| Ok(vec![weighted_mean(w, &values)])).unwrap();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((r.estimate[0] - mean).abs() < 1e-12);
        assert!((r.stderr[0] - (var / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ess_bounds() {
        assert_eq!(effective_sample_size(&[1.0; 50]), 50.0);
        assert!((effective_sample_size(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
