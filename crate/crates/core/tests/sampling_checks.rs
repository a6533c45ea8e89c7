//! Distributional checks of the samplers: moments against analytic values,
//! Kolmogorov distances against independent CDFs, and stream behaviour.

mod common;

use common::*;
use mgfnorm::montecarlo::null_table;
use mgfnorm::sampling::{sample, sample_pearson_vii, sample_skew_normal, sample_spherical_lognormal, Sampler};
use mgfnorm::{AlternativeSpec, Error, Gamma, SeededStream, Statistic};
use statrs::distribution::{ContinuousCDF, LogNormal, Normal};
use statrs::function::gamma::gamma;

fn mean_var(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (mean, m2, m3, m4)
}

fn column(spec: &str, n: usize, seed: u64) -> Vec<f64> {
    let spec: AlternativeSpec = spec.parse().unwrap();
    let x = sample(&spec, n, SeededStream::new(seed, 0)).unwrap();
    x.values().column(0).iter().copied().collect()
}

#[test]
fn standard_normal_moments() {
    let spec = AlternativeSpec::std_normal(2);
    let x = sample(&spec, 100_000, SeededStream::new(1, 0)).unwrap();
    let m = x.values();
    let n = m.nrows() as f64;
    let mean = m.row_sum() / n;
    assert!(mean.amax() < 0.02, "{mean}");
    let centered = m - nalgebra::DMatrix::from_fn(m.nrows(), 2, |_, j| mean[j]);
    let cov = centered.transpose() * &centered / n;
    assert!((cov - nalgebra::DMatrix::<f64>::identity(2, 2)).amax() < 0.03);
}

#[test]
fn marginal_moments_match_analytic_values() {
    let g = |x: f64| gamma(x);
    let weibull_mean = g(1.1);
    let cases: Vec<(&str, f64, f64)> = vec![
        ("chisq:k=5,d=1,iid", 5.0, 10.0),
        ("chisq:k=15,d=1,iid", 15.0, 30.0),
        ("gamma:shape=4,rate=2,d=1,iid", 2.0, 1.0),
        ("logistic:d=1,iid", 0.0, std::f64::consts::PI.powi(2) / 3.0),
        ("weibull:k=10,d=1,iid", weibull_mean, g(1.2) - weibull_mean * weibull_mean),
        (
            "lognormal:mu=0,sigma=0.5,d=1,iid",
            0.125f64.exp(),
            (0.25f64.exp() - 1.0) * 0.25f64.exp(),
        ),
        ("t:nu=5,d=1,iid", 0.0, 5.0 / 3.0),
        ("pearson7:m=10,d=1,iid", 0.0, 1.0 / 17.0),
        ("skewnormal:lambda=3,d=1,iid", 0.3 * 10f64.sqrt() * (2.0 / std::f64::consts::PI).sqrt(), 1.0 - 0.9 * 2.0 / std::f64::consts::PI),
        ("nmix:p=0.5,mu1=0,cov1=I,mu2=0,cov2=var4,d=1", 0.0, 2.5),
    ];
    let n = 1_000_000;
    for (i, (spec, mu, var)) in cases.into_iter().enumerate() {
        let x = column(spec, n, 100 + i as u64);
        let (mean, m2, _, m4) = mean_var(&x);
        let se_mean = (m2 / n as f64).sqrt();
        let se_var = ((m4 - m2 * m2) / n as f64).sqrt();
        assert!((mean - mu).abs() < 4.0 * se_mean, "{spec}: mean {mean} vs {mu} (se {se_mean})");
        assert!((m2 - var).abs() < 4.0 * se_var, "{spec}: variance {m2} vs {var} (se {se_var})");
    }
}

#[test]
fn multivariate_t_and_mixture_moments() {
    let x = sample(&"mvt:nu=5,d=2".parse().unwrap(), 400_000, SeededStream::new(9, 0)).unwrap();
    for j in 0..2 {
        let c: Vec<f64> = x.values().column(j).iter().copied().collect();
        let (mean, m2, _, _) = mean_var(&c);
        assert!(mean.abs() < 0.01);
        assert!((m2 - 5.0 / 3.0).abs() < 0.05, "{m2}");
    }
    let x = sample(&AlternativeSpec::nmix1(3), 100_000, SeededStream::new(10, 0)).unwrap();
    for j in 0..3 {
        let mean = x.values().column(j).sum() / 1e5;
        assert!((mean - 0.3).abs() < 0.02, "{mean}");
    }
}

#[test]
fn normal_marginals_mixture_has_normal_margins_only() {
    let spec: AlternativeSpec = "nmrho:rho=0.2,d=5".parse().unwrap();
    let x = sample(&spec, 100_000, SeededStream::new(11, 0)).unwrap();
    let std = Normal::standard();
    for j in 0..5 {
        let mut c: Vec<f64> = x.values().column(j).iter().take(10_000).copied().collect();
        let ks = ks_distance(&mut c, |v| std.cdf(v));
        assert!(ks < 1.63 / 100.0, "coordinate {j}: KS {ks}");
    }
    // E[X1^2 X2^2] = 1 + 2 rho^2 in both components, against 1 for the
    // normal law with the same (identity) covariance
    let m = x.values();
    let cross: Vec<f64> = (0..m.nrows()).map(|i| (m[(i, 0)] * m[(i, 1)]).powi(2)).collect();
    let (mean, var, _, _) = mean_var(&cross);
    let se = (var / cross.len() as f64).sqrt();
    assert!((mean - 1.08).abs() < 4.0 * se, "{mean}");
    assert!(mean - 1.0 > 5.0 * se, "{mean} +- {se}");
}

#[test]
fn skew_normal_representation() {
    let z = sample_skew_normal(0.0, 100_000, SeededStream::new(12, 0));
    assert!(mean_var(&z).0.abs() < 4.0 / 100_000f64.sqrt());
    let z = sample_skew_normal(3.0, 1_000_000, SeededStream::new(12, 1));
    assert!((mean_var(&z).0 - 0.75694).abs() < 0.01);
    let z = sample_skew_normal(1e6, 100_000, SeededStream::new(12, 2));
    let nonneg = z.iter().filter(|v| **v >= 0.0).count() as f64 / z.len() as f64;
    assert!(nonneg >= 0.99, "{nonneg}");
}

#[test]
fn spherical_lognormal_radius_and_direction() {
    let x = sample_spherical_lognormal(3, 0.0, 0.5, 100_000, SeededStream::new(13, 0)).unwrap();
    let m = x.values();
    let mut radius: Vec<f64> = (0..m.nrows()).map(|i| m.row(i).norm()).collect();
    let dirs: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v / radius[i]).collect())
        .collect();
    let law = LogNormal::new(0.0, 0.5).unwrap();
    let ks = ks_distance(&mut radius, |r| law.cdf(r));
    assert!(ks < 0.01, "KS {ks}");
    for j in 0..3 {
        let mean = dirs.iter().map(|u| u[j]).sum::<f64>() / dirs.len() as f64;
        // a coordinate of a uniform direction on S^2 has variance 1/3
        assert!(mean.abs() < 4.0 * (1.0 / 3.0 / 1e5f64).sqrt(), "{mean}");
    }
    let x = sample_spherical_lognormal(1, 0.0, 0.5, 20_000, SeededStream::new(13, 1)).unwrap();
    let pos = x.values().iter().filter(|v| **v > 0.0).count() as f64 / 20_000.0;
    assert!((pos - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
}

#[test]
fn pearson_vii_matches_density_integration() {
    let m = 10.0;
    let mut x = sample_pearson_vii(m, 100_000, SeededStream::new(14, 0)).unwrap();
    // x = tan(theta) turns the density (1 + x^2)^{-m} into cos(theta)^{2m-2}
    let f = |th: f64| th.cos().powf(2.0 * m - 2.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let total = integrate(f, -half_pi, half_pi, 1e-13);
    x.sort_by(f64::total_cmp);
    let mut cdf = Vec::with_capacity(x.len());
    let (mut theta, mut acc) = (-half_pi, 0.0);
    for v in &x {
        let next = v.atan();
        acc += integrate(f, theta, next, 1e-10);
        theta = next;
        cdf.push(acc / total);
    }
    let n = x.len() as f64;
    let ks = cdf
        .iter()
        .enumerate()
        .map(|(i, f)| (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn pearson_vii_symmetry_and_normal_limit() {
    let x = sample_pearson_vii(10.0, 1_000_000, SeededStream::new(15, 0)).unwrap();
    let (_, m2, m3, _) = mean_var(&x);
    let skew = m3 / m2.powf(1.5);
    // t_19 has finite sixth moment; sd of the sample skewness is about
    // sqrt(15 / n) * (1 + small correction)
    assert!(skew.abs() < 4.0 * (30.0 / 1e6f64).sqrt(), "{skew}");
    let x = sample_pearson_vii(1e4, 1_000_000, SeededStream::new(15, 1)).unwrap();
    let (_, m2, _, m4) = mean_var(&x);
    assert!((m4 / (m2 * m2) - 3.0).abs() < 0.05);
    assert!(matches!(sample_pearson_vii(0.5, 10, SeededStream::new(1, 0)), Err(Error::InvalidSpec(_))));
}

#[test]
fn invalid_specs_and_sizes_are_rejected() {
    for s in ["mvt:nu=0,d=2", "nmrho:rho=1.2,d=3", "weibull:k=-1,d=1,iid", "nmix:p=1.5,mu1=0,cov1=I,mu2=3,cov2=I,d=2"] {
        assert!(matches!(s.parse::<AlternativeSpec>(), Err(Error::InvalidSpec(_))), "{s}");
    }
    let sampler = Sampler::new(&AlternativeSpec::std_normal(3)).unwrap();
    assert!(matches!(sampler.sample(3, SeededStream::new(1, 0)), Err(Error::InvalidSpec(_))));
}

#[test]
fn streams_are_reproducible_and_independent() {
    let spec: AlternativeSpec = "chisq:k=5,d=2,iid".parse().unwrap();
    let a = sample(&spec, 50, SeededStream::new(77, 3)).unwrap();
    let b = sample(&spec, 50, SeededStream::new(77, 3)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample(&spec, 50, SeededStream::new(77, 4)).unwrap());

    let stat = Statistic::t(Gamma::Finite(3.0));
    let reps = 2000;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for s in 0..reps {
        for (out, idx) in [(&mut u, 0), (&mut v, 1)] {
            let x = sample(&spec, 20, SeededStream::new(s, idx)).unwrap();
            out.push(stat.evaluate(&mgfnorm::scaled_residuals(&x).unwrap()).unwrap());
        }
    }
    let (mu, vu, _, _) = mean_var(&u);
    let (mv, vv, _, _) = mean_var(&v);
    let cov = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum::<f64>() / reps as f64;
    let r = cov / (vu * vv).sqrt();
    assert!(r.abs() < 4.0 / (reps as f64).sqrt(), "correlation {r}");
}

#[test]
fn null_tables_do_not_depend_on_thread_count() {
    let stat = Statistic::HenzeJimenezGamero { beta: 3.0 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| null_table(&stat, 12, 2, 400, 5, None).unwrap())
    };
    let (one, four) = (run(1), run(4));
    assert_eq!(one.values, four.values);
}
