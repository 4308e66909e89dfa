//! Distributional checks of the covariate and error samplers.

use optsub_core::dist::{sample_covariates, sample_normal_errors, EllipticalModel, Family, RngStream};
use optsub_core::linalg::{mahalanobis_all, streaming_moments, CovSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the one-sample KS statistic.
fn ks_critical(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[test]
fn normal_compound_symmetry_moments() {
    let (d, rho, n) = (5, 0.5, 200_000);
    let cov = CovSpec::compound_symmetry(d, rho).unwrap();
    let model = EllipticalModel::new(Family::Normal, cov).unwrap();
    let x = sample_covariates(&model, n, &mut RngStream::new(21, 0)).unwrap();
    let (mean, s) = streaming_moments(&x).unwrap();
    let se = (1.0 / n as f64).sqrt();
    for m in &mean {
        assert!(m.abs() < 5.0 * se, "mean {m}");
    }
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { rho };
            assert!((s[(i, j)] - want).abs() < 0.015, "cov ({i},{j}) = {}", s[(i, j)]);
        }
    }
}

#[test]
fn normal_distance_is_chi_square() {
    let (d, n) = (4, 20_000);
    let cov = CovSpec::compound_symmetry(d, 0.3).unwrap();
    let model = EllipticalModel::new(Family::Normal, cov.clone()).unwrap();
    let x = sample_covariates(&model, n, &mut RngStream::new(5, 1)).unwrap();
    let oracle = ChiSquared::new(d as f64).unwrap();
    let ks = ks_statistic(mahalanobis_all(&x, &cov).unwrap(), |v| oracle.cdf(v));
    assert!(ks < ks_critical(n), "KS = {ks}");
}

#[test]
fn t_distance_is_scaled_f() {
    let (d, nu, n) = (4, 3.0, 20_000);
    let cov = CovSpec::identity(d);
    let model = EllipticalModel::new(Family::StudentT { nu }, cov.clone()).unwrap();
    let x = sample_covariates(&model, n, &mut RngStream::new(6, 2)).unwrap();
    let oracle = FisherSnedecor::new(d as f64, nu).unwrap();
    let scaled: Vec<f64> = mahalanobis_all(&x, &cov).unwrap().into_iter().map(|r| r / d as f64).collect();
    let ks = ks_statistic(scaled, |v| oracle.cdf(v));
    assert!(ks < ks_critical(n), "KS = {ks}");
}

#[test]
fn t_marginal_variance() {
    let nu = 6.0;
    let model = EllipticalModel::new(Family::StudentT { nu }, CovSpec::identity(3)).unwrap();
    let x = sample_covariates(&model, 400_000, &mut RngStream::new(8, 0)).unwrap();
    let (_, s) = streaming_moments(&x).unwrap();
    let want = nu / (nu - 2.0);
    for j in 0..3 {
        assert!((s[(j, j)] / want - 1.0).abs() < 0.03, "var {} vs {want}", s[(j, j)]);
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let model = EllipticalModel::new(Family::Normal, CovSpec::compound_symmetry(3, 0.5).unwrap()).unwrap();
    let a = sample_covariates(&model, 10_000, &mut RngStream::new(1, 7)).unwrap();
    let b = sample_covariates(&model, 10_000, &mut RngStream::new(1, 7)).unwrap();
    let c = sample_covariates(&model, 10_000, &mut RngStream::new(1, 8)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.values(), c.values());
}

#[test]
fn normal_errors_have_requested_scale() {
    let e = sample_normal_errors(200_000, 2.5, &mut RngStream::new(3, 0)).unwrap();
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 5.0 * 2.5 / n.sqrt());
    assert!((var / 6.25 - 1.0).abs() < 0.02);
    assert!(sample_normal_errors(10, 0.0, &mut RngStream::new(3, 0)).is_err());
}
