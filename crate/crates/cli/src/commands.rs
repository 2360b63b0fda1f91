use cylfield_core::alpha::{
    compatibility_free, compatibility_mc, failed_limit_free, failed_limit_probe, proof_identity_sigma4,
    proof_identity_sigma4_free, AlphaSeries, SeriesTruncation,
};
use cylfield_core::appell::{martingale_check, renorm_step, renorm_step_gaussian, wick4, MeasureHandle, Perturbation};
use cylfield_core::ce::Deviation;
use cylfield_core::free::{sample_free, sigma2_exact};
use cylfield_core::jackknife::{jackknife, weighted_mean};
use cylfield_core::modes::{ball, shell};
use cylfield_core::toy::{decay_sum, gibbs_ensemble, mixing_table};
use cylfield_core::{Ensemble, FlowState, FreeMeasureSpec, PolynomialDensity, JACKKNIFE_BLOCKS};

use crate::config::RunConfig;
use crate::output::{RunWriter, Table};
use crate::row;

/// The configured ensemble: the free measure for zero coupling, otherwise the
/// reweighted toy measure over the same free samples.
fn ensemble(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<Ensemble> {
    let spec = cfg.free_spec()?;
    let ens = if cfg.coupling > 0.0 {
        gibbs_ensemble(&spec, cfg.coupling, cfg.sampling.count, cfg.sampling.seed)?
    } else {
        sample_free(&spec, cfg.sampling.count, cfg.sampling.seed)?
    };
    if cfg.output.save_ensemble {
        let mut buf = Vec::new();
        ens.write_to(&mut buf)?;
        out.write_bytes("ensemble.bin", &buf)?;
    }
    Ok(ens)
}

fn measure_label(cfg: &RunConfig) -> &'static str {
    if cfg.coupling > 0.0 {
        "toy"
    } else {
        "free_mc"
    }
}

fn deviation_rows(t: &mut Table, label: &str, n: usize, m: usize, d: &Deviation) {
    t.push(row![label, n, m, d.max_abs, d.max_z, d.within(4.0)]);
}

pub fn shells(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let mut t = Table::new(&["n", "shell_size", "ball_size", "sigma2_shell", "sigma2"]);
    let mut series = Table::new(&["n", "sigma2"]);
    for n in 0..=spec.n_max {
        let s2 = sigma2_exact(&spec, n)?;
        t.push(row![n, shell(spec.dim, n).len(), ball(spec.dim, n).len(), spec.sigma2_shell(n), s2]);
        series.push(row![n, s2]);
    }
    out.table("shells", &t)?;
    out.series("sigma2_vs_n", &series)
}

pub fn moments(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let ens = ensemble(cfg, out)?;
    let feats = ens.point_features(&vec![0.0; spec.dim]);
    let mut t = Table::new(&["n", "measure", "sigma2", "sigma2_se", "sigma4", "sigma4_se"]);
    for n in 0..=spec.n_max {
        let s2 = sigma2_exact(&spec, n)?;
        t.push(row![n, "free_exact", s2, 0.0, 3.0 * s2 * s2, 0.0]);
    }
    for n in 0..=spec.n_max {
        let x = feats.level(n);
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let x4: Vec<f64> = x.iter().map(|v| v.powi(4)).collect();
        let jk = jackknife(ens.weights(), JACKKNIFE_BLOCKS, |w| Ok(vec![weighted_mean(w, &x2), weighted_mean(w, &x4)]))?;
        t.push(row![n, measure_label(cfg), jk.estimate[0], jk.stderr[0], jk.estimate[1], jk.stderr[1]]);
    }
    let mut ess = Table::new(&["count", "ess", "coupling"]);
    ess.push(row![ens.count(), ens.ess(), cfg.coupling]);
    out.table("moments", &t)?;
    out.table("ensemble", &ess)
}

pub fn wick(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let mut t = Table::new(&["n", "sigma2", "sigma4", "c0", "c1", "c2", "c3", "c4"]);
    for n in 0..=spec.n_max {
        let s2 = spec.sigma2(n)?;
        let p = wick4(s2, 3.0 * s2 * s2);
        t.push(row![n, s2, 3.0 * s2 * s2, p.coeff(0), p.coeff(1), p.coeff(2), p.coeff(3), p.coeff(4)]);
    }
    out.table("wick", &t)
}

pub fn martingale(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let degree = cfg.series.degree;
    let mut t = Table::new(&["measure", "n", "m", "max_abs", "max_z", "within_4se"]);
    let free = Perturbation::free_wick(&spec);
    for m in 1..=spec.n_max {
        for n in 0..m {
            deviation_rows(&mut t, "free_exact", n, m, &martingale_check(&free, n, m, degree)?);
        }
    }
    let ens = sample_free(&spec, cfg.sampling.count, cfg.sampling.seed)?;
    let densities = (0..=spec.n_max)
        .map(|n| {
            let s2 = spec.sigma2(n)?;
            Ok(PolynomialDensity::wick(n, s2, 3.0 * s2 * s2))
        })
        .collect::<cylfield_core::Result<Vec<_>>>()?;
    let mc = Perturbation::new(densities, MeasureHandle::Ensemble(&ens))?;
    for m in 1..=spec.n_max {
        for n in 0..m {
            deviation_rows(&mut t, "free_mc", n, m, &martingale_check(&mc, n, m, degree)?);
        }
    }
    out.table("martingale", &t)
}

pub fn renorm(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let ens = ensemble(cfg, out)?;
    let label = measure_label(cfg);
    let mut t = Table::new(&["n", "slot", "power", "exact", "estimate", "stderr"]);
    let mut check = Table::new(&["n", "alpha2_exact", "minus_6_sigma2"]);
    for top in 1..=spec.n_max {
        let s2 = spec.sigma2(top)?;
        let start = PolynomialDensity::wick(top, s2, 3.0 * s2 * s2);
        let exact = renorm_step_gaussian(&start, &spec)?;
        let mc = renorm_step(&start, &ens, cfg.series.degree)?;
        for p in 0..4 {
            let e = exact.slot(p).poly();
            let m = mc.slot(p);
            let (coef, se) = (m.poly(), m.stderr());
            for j in 0..coef.coeffs().len() {
                t.push(row![top - 1, p, j, e.coeff(j), coef.coeff(j), se.get(j).copied().unwrap_or(0.0)]);
            }
        }
        check.push(row![top - 1, exact.slot(2).poly().coeff(0), -6.0 * spec.sigma2(top - 1)?]);
    }
    out.table(&format!("renorm_step_{label}"), &t)?;
    out.table("renorm_step_alpha2", &check)
}

fn series_tables(series: &AlphaSeries, label: &str, alpha: &mut Table, diag: &mut Table, gap: &mut Table) {
    let top = series.top();
    for n in 0..=top {
        for p in 0..4 {
            let e = series.alpha(p, n);
            for (j, (c, s)) in e.coefficients.iter().zip(&e.stderr).enumerate() {
                alpha.push(row![label, n, p, j, *c, *s]);
            }
        }
    }
    for n in 0..top {
        for p in 0..4 {
            let parts = series.partial_values(p, n);
            let deltas = series.diagnostics(p, n);
            for (i, part) in parts.iter().enumerate() {
                let delta = if i == 0 { f64::NAN } else { deltas[i - 1] };
                diag.push(row![label, p, n, n + 1 + i, part.coefficients[0], part.stderr[0], delta]);
            }
        }
    }
    for n in 0..=top {
        let a2 = series.alpha2(n);
        let (s2, s2e) = series.sigma2(n);
        let g0 = series.gap(0, n).coeff(0);
        gap.push(row![label, n, a2.coefficients[0] + 6.0 * s2, (a2.stderr[0].powi(2) + 36.0 * s2e * s2e).sqrt(), g0]);
    }
}

pub fn alpha_series(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let trunc = SeriesTruncation::new(cfg.series_top(), cfg.series.degree);
    let label = measure_label(cfg);
    let mut alpha = Table::new(&["measure", "n", "p", "power", "coefficient", "stderr"]);
    let mut diag = Table::new(&["measure", "p", "n", "m", "partial_c0", "partial_c0_se", "max_change"]);
    let mut gap = Table::new(&["measure", "n", "alpha2_plus_6sigma2", "stderr", "alpha0_gap"]);
    let mut compat = Table::new(&["measure", "n", "m", "max_abs", "max_z", "within_4se"]);
    let mut ident = Table::new(&["measure", "n", "m", "lhs", "rhs", "residual", "stderr"]);

    let free = AlphaSeries::free(&spec, trunc)?;
    series_tables(&free, "free_exact", &mut alpha, &mut diag, &mut gap);
    for (n, d) in compatibility_free(&spec, &free)? {
        deviation_rows(&mut compat, "free_exact", n, n + 1, &d);
    }
    let ens = ensemble(cfg, out)?;
    let est = AlphaSeries::estimate(&ens, trunc)?;
    series_tables(&est, label, &mut alpha, &mut diag, &mut gap);
    for (n, d) in compatibility_mc(&ens, trunc)? {
        deviation_rows(&mut compat, label, n, n + 1, &d);
    }
    for m in 0..=trunc.top {
        for n in 0..=m {
            let r = proof_identity_sigma4_free(&spec, n, m)?;
            ident.push(row!["free_exact", n, m, r.lhs, r.rhs, r.residual, r.stderr]);
            let r = proof_identity_sigma4(&ens, n, m)?;
            ident.push(row![label, n, m, r.lhs, r.rhs, r.residual, r.stderr]);
        }
    }
    out.table("alpha", &alpha)?;
    out.table("alpha_diagnostics", &diag)?;
    out.table("compatibility", &compat)?;
    out.table("sigma4_identity", &ident)?;
    out.series("alpha_gaps_vs_n", &gap)
}

pub fn failed_limit(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let n = cfg.probe.level;
    let cutoffs = cfg.probe_cutoffs();
    let degree = cfg.series.degree;
    let mut values = Table::new(&["measure", "m", "power", "coefficient", "stderr"]);
    let mut summary = Table::new(&["measure", "level", "drift_max_abs", "drift_z", "non_convergent"]);
    for (m, p) in cutoffs.iter().zip(failed_limit_free(&spec, n, &cutoffs)?) {
        for j in 0..=degree {
            values.push(row!["free_exact", *m, j, p.coeff(j), 0.0]);
        }
    }
    summary.push(row!["free_exact", n, 0.0, 0.0, false]);
    let free = sample_free(&spec, cfg.sampling.count, cfg.sampling.seed)?;
    let mut runs = vec![("free_mc", free)];
    if cfg.coupling > 0.0 {
        runs.push(("toy", ensemble(cfg, out)?));
    }
    for (label, ens) in &runs {
        let probe = failed_limit_probe(ens, n, &cutoffs, degree)?;
        for (m, v) in probe.m_values.iter().zip(&probe.values) {
            for (j, (c, s)) in v.coefficients.iter().zip(&v.stderr).enumerate() {
                values.push(row![*label, *m, j, *c, *s]);
            }
        }
        let max_abs = probe.drift.iter().map(|d| d.abs()).fold(0.0, f64::max);
        summary.push(row![*label, n, max_abs, probe.drift_z, probe.non_convergent]);
    }
    out.table("failed_limit_summary", &summary)?;
    out.series("failed_limit_vs_m", &values)
}

pub fn mixing(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec = cfg.free_spec()?;
    let free = sample_free(&spec, cfg.sampling.count, cfg.sampling.seed)?;
    let mut runs = vec![("free_mc", free)];
    if cfg.coupling > 0.0 {
        runs.push(("toy", ensemble(cfg, out)?));
    }
    let mut heat = Table::new(&["measure", "n", "m", "c_nm", "stderr", "f", "g"]);
    let mut decay = Table::new(&["measure", "n", "sum_c_sigma4_prime", "stderr"]);
    for (label, ens) in &runs {
        let table = mixing_table(ens, cfg.mixing.degree)?;
        for e in &table {
            heat.push(row![*label, e.n, e.m, e.value, e.stderr, e.argmax.0.as_str(), e.argmax.1.as_str()]);
        }
        for n in 0..=spec.n_max {
            let (v, s) = decay_sum(ens, &table, n)?;
            decay.push(row![*label, n, v, s]);
        }
    }
    out.series("mixing_heat", &heat)?;
    out.table("mixing_decay", &decay)
}

pub fn flow(cfg: &RunConfig, out: &mut RunWriter) -> anyhow::Result<()> {
    let spec: FreeMeasureSpec = cfg.free_spec()?;
    let level = cfg.flow_level();
    let f = &cfg.flow;
    let mut state = FlowState::init(&spec, level, cfg.sampling.count, cfg.sampling.seed, f.integrator, f.refresh)?;
    let feats = state.base().point_features(&vec![0.0; spec.dim]);
    let x = feats.level(level);
    let x1: Vec<f64> = x.to_vec();
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let x4: Vec<f64> = x.iter().map(|v| v.powi(4)).collect();
    let mut traj = Table::new(&[
        "step", "lambda", "ess", "mass_drift", "mass_drift_se", "sigma2", "sigma4", "alpha0", "alpha2", "x1", "x1_se",
        "x2", "x2_se", "x4", "x4_se",
    ]);
    for step in 0..=f.steps {
        if step > 0 {
            state = state.flow_step(f.dlambda)?;
        }
        let (drift, drift_se) = state.mass_drift()?;
        let (s2, s4) = state.moments();
        let density = state.density();
        let (m1, e1) = state.observable_values(&x1)?;
        let (m2, e2) = state.observable_values(&x2)?;
        let (m4, e4) = state.observable_values(&x4)?;
        traj.push(row![
            step,
            state.lambda,
            state.ess(),
            drift,
            drift_se,
            s2,
            s4,
            density.slot(0).poly().coeff(0),
            density.slot(2).poly().coeff(0),
            m1,
            e1,
            m2,
            e2,
            m4,
            e4,
        ]);
    }
    let fit = state.aggregate_lagrangian()?;
    let mut agg = Table::new(&["lambda", "term", "coefficient", "stderr"]);
    for ((name, c), s) in fit.names.iter().zip(&fit.coefficients).zip(&fit.stderr) {
        agg.push(row![fit.lambda, name.as_str(), *c, *s]);
    }
    agg.push(row![fit.lambda, "mean_sq_residual", fit.residual, 0.0]);
    out.series("flow_trajectory", &traj)?;
    out.table("aggregate_lagrangian", &agg)
}
