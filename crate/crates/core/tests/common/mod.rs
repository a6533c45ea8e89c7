//! Independent oracles shared by the integration tests: adaptive
//! Gauss-Kronrod quadrature, the integral definitions of the weighted L2
//! statistics evaluated pointwise from residual rows, and data helpers.
#![allow(dead_code)]

use mgfnorm::{scaled_residuals, DataMatrix, ResidualSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference to the embedded 7-point
/// Gauss rule.
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`, refined
/// until the summed error estimate is below `rel_tol * |integral|`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut segs = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..5000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let (i, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    segs.iter().map(|s| s.2).sum()
}

/// Integral of `f` over the box `[-l, l]^d` for `d` in {1, 2} (nested 1-d
/// rules for `d = 2`).
pub fn integrate_box(f: &dyn Fn(&[f64]) -> f64, d: usize, l: f64, rel_tol: f64) -> f64 {
    match d {
        1 => integrate(|x| f(&[x]), -l, l, rel_tol),
        2 => integrate(
            |x| integrate(|y| f(&[x, y]), -l, l, rel_tol * 1e-2),
            -l,
            l,
            rel_tol,
        ),
        _ => panic!("quadrature oracle supports d <= 2"),
    }
}

/// Half-width beyond which `exp(2 rho |t| - w |t|^2)` drops below `e^{-60}`.
pub fn truncation(rho: f64, w: f64) -> f64 {
    (rho + (rho * rho + 60.0 * w).sqrt()) / w
}

pub fn rows(res: &ResidualSet) -> Vec<Vec<f64>> {
    let y = res.residuals();
    (0..y.nrows()).map(|i| y.row(i).iter().copied().collect()).collect()
}

pub fn max_norm(res: &ResidualSet) -> f64 {
    res.sq_norms().iter().copied().fold(0.0, f64::max).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Empirical MGF and its gradient at `t`.
pub fn emp_mgf(y: &[Vec<f64>], t: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let mut m = 0.0;
    let mut grad = vec![0.0; t.len()];
    for row in y {
        let e = dot(t, row).exp();
        m += e;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += e * v;
        }
    }
    (m / n, grad.into_iter().map(|g| g / n).collect())
}

/// Empirical characteristic function, real and imaginary parts.
pub fn emp_cf(y: &[Vec<f64>], t: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let (c, s) = y.iter().fold((0.0, 0.0), |(c, s), row| {
        let a = dot(t, row);
        (c + a.cos(), s + a.sin())
    });
    (c / n, s / n)
}

/// `n * int ||M_n'(t) - t M_n(t)||^2 exp(-gamma |t|^2) dt`.
pub fn t_by_quadrature(res: &ResidualSet, gamma: f64) -> f64 {
    let y = rows(res);
    let n = y.len() as f64;
    let l = truncation(max_norm(res), gamma);
    let f = |t: &[f64]| {
        let (m, g) = emp_mgf(&y, t);
        let sq: f64 = g.iter().zip(t).map(|(gi, ti)| (gi - ti * m).powi(2)).sum();
        sq * (-gamma * dot(t, t)).exp()
    };
    n * integrate_box(&f, res.d(), l, 1e-11)
}

/// `n * int (M_n(t) - exp(|t|^2 / 2))^2 exp(-beta |t|^2) dt`, the common
/// definition of the Zghoul and HJ statistics.
pub fn mgf_distance_by_quadrature(res: &ResidualSet, beta: f64) -> f64 {
    let y = rows(res);
    let n = y.len() as f64;
    // (M_n - m)^2 grows like exp(2 rho |t|) or exp(|t|^2); beta > 1 controls both
    let l = truncation(max_norm(res), beta - 1.0);
    let f = |t: &[f64]| {
        let tt = dot(t, t);
        let (m, _) = emp_mgf(&y, t);
        (m - (0.5 * tt).exp()).powi(2) * (-beta * tt).exp()
    };
    n * integrate_box(&f, res.d(), l, 1e-11)
}

/// `(2 pi g^2)^{-d/2} int |Psi_n(t) - exp(-|t|^2/2)|^2 exp(-|t|^2 / (2 g^2)) dt`.
pub fn hz_by_quadrature(res: &ResidualSet, g: f64) -> f64 {
    let y = rows(res);
    let d = res.d() as f64;
    let l = g * 120f64.sqrt();
    let f = |t: &[f64]| {
        let tt = dot(t, t);
        let (c, s) = emp_cf(&y, t);
        ((c - (-0.5 * tt).exp()).powi(2) + s * s) * (-tt / (2.0 * g * g)).exp()
    };
    (2.0 * std::f64::consts::PI * g * g).powf(-d / 2.0) * integrate_box(&f, res.d(), l, 1e-10)
}

/// `n * int (C_n(t) M_n(t) - 1)^2 exp(-gamma |t|^2) dt` with `C_n` the real
/// part of the empirical characteristic function.
pub fn hjm_by_quadrature(res: &ResidualSet, gamma: f64) -> f64 {
    let y = rows(res);
    let n = y.len() as f64;
    let l = truncation(max_norm(res), gamma);
    let f = |t: &[f64]| {
        let (c, _) = emp_cf(&y, t);
        let (m, _) = emp_mgf(&y, t);
        (c * m - 1.0).powi(2) * (-gamma * dot(t, t)).exp()
    };
    n * integrate_box(&f, res.d(), l, 1e-10)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x d` matrix with i.i.d. entries from a skewed law (exponential plus a
/// normal), so instances are far from symmetric.
pub fn random_data(rng: &mut impl Rng, n: usize, d: usize) -> DataMatrix {
    let m = DMatrix::from_fn(n, d, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random::<f64>();
        -(1.0 - u).ln() + 0.5 * z
    });
    DataMatrix::new(m).unwrap()
}

pub fn normal_data(rng: &mut impl Rng, n: usize, d: usize) -> DataMatrix {
    DataMatrix::new(DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))).unwrap()
}

pub fn random_residuals(rng: &mut impl Rng, n: usize, d: usize) -> ResidualSet {
    scaled_residuals(&random_data(rng, n, d)).unwrap()
}

/// A random matrix with condition number at most `max_cond`.
pub fn random_transform(rng: &mut impl Rng, d: usize, max_cond: f64) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sv = a.clone().singular_values();
        let cond = sv.max() / sv.min();
        if cond.is_finite() && cond <= max_cond {
            return a;
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Kolmogorov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
