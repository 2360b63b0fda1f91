use cylfield_core::alpha::{failed_limit_free, proof_identity_sigma4_free, AlphaSeries, SeriesTruncation};
use cylfield_core::appell::{martingale_check, renorm_step, renorm_step_gaussian, Perturbation};
use cylfield_core::free::sample_free;
use cylfield_core::jackknife::weighted_mean;
use cylfield_core::toy::gibbs_ensemble;
use cylfield_core::{FreeMeasureSpec, PolynomialDensity};

#[test]
fn free_wick_family_is_a_martingale() {
    for dim in 1..=2 {
        let spec = FreeMeasureSpec::new(dim, 1.0, 4).unwrap();
        let pert = Perturbation::free_wick(&spec);
        for n in 0..4 {
            for m in n + 1..=4 {
                let d = martingale_check(&pert, n, m, 4).unwrap();
                assert!(d.max_abs < 1e-10, "d={dim} {n}->{m}: {}", d.max_abs);
            }
        }
    }
}

#[test]
fn renorm_step_mc_agrees_with_closed_form() {
    let spec = FreeMeasureSpec::new(1, 1.0, 3).unwrap();
    let ens = sample_free(&spec, 40_000, 4).unwrap();
    let s2 = spec.sigma2(3).unwrap();
    let top = PolynomialDensity::wick(3, s2, 3.0 * s2 * s2);
    let exact = renorm_step_gaussian(&top, &spec).unwrap();
    let mc = renorm_step(&top, &ens, 4).unwrap();
    for p in 0..4 {
        let e = exact.slot(p).poly();
        let m = mc.slot(p);
        for (j, (c, se)) in m.poly().padded(5).iter().zip(m.stderr().iter().chain(std::iter::repeat(&0.0))).enumerate() {
            let d = (c - e.coeff(j)).abs();
            assert!(d <= 4.0 * se + 1e-9, "slot {p} coeff {j}: {c} vs {} ± {se}", e.coeff(j));
        }
    }
}

#[test]
fn alpha_series_free_closed_forms_are_truncation_free() {
    let spec = FreeMeasureSpec::new(2, 1.0, 4).unwrap();
    for top in 1..=4 {
        let s = AlphaSeries::free(&spec, SeriesTruncation::new(top, 4)).unwrap();
        for n in 0..top {
            let s2 = spec.sigma2(n).unwrap();
            assert!((s.alpha2(n).coefficients[0] + 6.0 * s2).abs() < 1e-10);
            assert!((s.alpha0(n).coefficients[0] - 3.0 * s2 * s2).abs() < 1e-9);
            for p in 0..4 {
                assert!(s.gap(p, n).coeffs().iter().all(|c| c.abs() < 1e-9));
            }
        }
    }
}

#[test]
fn free_proof_identities() {
    let spec = FreeMeasureSpec::new(1, 1.0, 4).unwrap();
    for n in 0..=4 {
        let r = proof_identity_sigma4_free(&spec, n, n).unwrap();
        assert_eq!(r.residual, 0.0);
        for m in n..=4 {
            let band: f64 = (n + 1..=m).map(|i| spec.sigma2_shell(i)).sum();
            assert!((spec.sigma2_band(n, m).unwrap() - band).abs() < 1e-12);
        }
    }
    let v = failed_limit_free(&spec, 1, &[1, 2, 4]).unwrap();
    assert_eq!(v[0], v[2]);
}

#[test]
fn toy_measure_is_even_and_tilted() {
    let spec = FreeMeasureSpec::new(1, 2.0, 3).unwrap();
    let ens = gibbs_ensemble(&spec, 0.05, 20_000, 8).unwrap();
    assert!(ens.ess() > 100.0);
    let feats = ens.point_features(&[0.0]);
    let x = feats.level(3);
    let odd: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
    let free_w = vec![1.0; x.len()];
    let s2 = spec.sigma2(3).unwrap();
    let ints = ens.level_power_integrals(3, 4).unwrap();
    let wick: Vec<f64> = (0..x.len()).map(|i| ints[4][i] - 6.0 * s2 * ints[2][i] + 3.0 * s2 * s2 * ints[0][i]).collect();
    // quartic tilt pulls the mean Wick density below its free value of zero
    assert!(weighted_mean(ens.weights(), &wick) < weighted_mean(&free_w, &wick));
    assert!(weighted_mean(ens.weights(), &odd).abs() < 0.1);
}

#[test]
fn pushforward_is_bit_exact() {
    let spec = FreeMeasureSpec::new(2, 1.0, 3).unwrap();
    let ens = gibbs_ensemble(&spec, 0.0, 200, 2).unwrap();
    for i in 0..ens.count() {
        let x = ens.sample(i);
        let via_2 = x.project_level(2).unwrap().project_level(1).unwrap();
        let direct = x.project_level(1).unwrap();
        assert_eq!(via_2.real_coords(), direct.real_coords());
    }
}
