//! Benchmark tests of normality, all computed from the scaled residuals:
//! Zghoul's univariate MGF test, Henze-Zirkler, Henze-Jimenez-Gamero,
//! the energy test, Henze-Jimenez-Gamero-Meintanis, and Mardia's
//! skewness and kurtosis tests.
//!
//! The weighted L2 statistics are evaluated through the closed forms one
//! obtains by integrating the Gaussian weight analytically. Where printed
//! versions of those forms repeat an index (`Y_i + Y_i`) or misplace a
//! bracket, the implementation follows the integral definition; the
//! integration tests check every closed form against quadrature.

use std::f64::consts::PI;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::ResidualSet;
use crate::numeric::{KahanSum, MAX_EXP_ARG};
use crate::statistic::{mardia_kurtosis, mardia_skewness};

/// Default sample-size cap for the `O(n^4)` HJM statistic.
pub const HJM_DEFAULT_CAP: usize = 100;

#[inline]
fn checked_exp(arg: f64) -> Result<f64> {
    if arg > MAX_EXP_ARG {
        Err(Error::Overflow { exponent: arg })
    } else {
        Ok(arg.exp())
    }
}

/// Zghoul's statistic `n int (M_n(t) - e^{t^2/2})^2 e^{-gamma t^2} dt` for
/// univariate data.
pub fn zghoul_statistic(res: &ResidualSet, gamma: f64) -> Result<f64> {
    if res.d() != 1 {
        return Err(Error::DimensionError {
            required: 1,
            found: res.d(),
        });
    }
    if !(gamma > 2.0) {
        return Err(Error::GammaTooSmall(gamma));
    }
    let n = res.n();
    let y: Vec<f64> = res.residuals().column(0).iter().copied().collect();

    let mut pairs = KahanSum::new();
    for j in 0..n {
        pairs.add(checked_exp((2.0 * y[j]).powi(2) / (4.0 * gamma))?);
        for k in (j + 1)..n {
            pairs.add(2.0 * checked_exp((y[j] + y[k]).powi(2) / (4.0 * gamma))?);
        }
    }
    let mut singles = KahanSum::new();
    for v in &y {
        singles.add(checked_exp(v * v / (4.0 * gamma - 2.0))?);
    }
    let nf = n as f64;
    let value = nf / (gamma - 1.0).sqrt() - 2.0 / (gamma - 0.5).sqrt() * singles.value()
        + pairs.value() / (nf * gamma.sqrt());
    Ok(PI.sqrt() * value)
}

/// Henze-Zirkler bandwidth `2^{-1/2} ((2d + 1) n / 4)^{1/(d+4)}`.
pub fn hz_default_gamma(n: usize, d: usize) -> f64 {
    let d = d as f64;
    ((2.0 * d + 1.0) * n as f64 / 4.0).powf(1.0 / (d + 4.0)) / 2f64.sqrt()
}

/// Henze-Zirkler statistic: the weighted L2 distance between the empirical
/// characteristic function of the residuals and `e^{-|t|^2/2}`, under the
/// `N(0, gamma^2 I)` density.
pub fn hz_statistic(res: &ResidualSet, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("HZ bandwidth must be positive, got {gamma}")));
    }
    let n = res.n();
    let d = res.d() as f64;
    let g = res.gram();
    let s = res.sq_norms();
    let g2 = gamma * gamma;

    let mut pairs = KahanSum::new();
    for j in 0..n {
        pairs.add(1.0);
        for k in (j + 1)..n {
            let dist_sq = (s[j] + s[k] - 2.0 * g[(j, k)]).max(0.0);
            pairs.add(2.0 * (-0.5 * g2 * dist_sq).exp());
        }
    }
    let singles: KahanSum = s.iter().map(|v| (-g2 * v / (2.0 * (1.0 + g2))).exp()).collect();
    let nf = n as f64;
    Ok(pairs.value() / (nf * nf) - 2.0 * (1.0 + g2).powf(-d / 2.0) * singles.value() / nf
        + (1.0 + 2.0 * g2).powf(-d / 2.0))
}

/// Henze-Jimenez-Gamero statistic `n int (M_n(t) - e^{|t|^2/2})^2 e^{-beta |t|^2} dt`.
pub fn hj_statistic(res: &ResidualSet, beta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(Error::BetaTooSmall(beta));
    }
    let n = res.n();
    let d = res.d() as f64;
    let g = res.gram();
    let s = res.sq_norms();

    let mut pairs = KahanSum::new();
    for j in 0..n {
        for k in j..n {
            let e = checked_exp((s[j] + s[k] + 2.0 * g[(j, k)]) / (4.0 * beta))?;
            pairs.add(if j == k { e } else { 2.0 * e });
        }
    }
    let mut singles = KahanSum::new();
    for v in s {
        singles.add(checked_exp(v / (4.0 * beta - 2.0))?);
    }
    let nf = n as f64;
    let value = pairs.value() / (nf * beta.powf(d / 2.0)) + nf / (beta - 1.0).powf(d / 2.0)
        - 2.0 * singles.value() / (beta - 0.5).powf(d / 2.0);
    Ok(PI.powf(d / 2.0) * value)
}

/// `E||Z - Z'||` for independent `Z, Z' ~ N_d(0, I)`.
pub fn expected_gaussian_distance(d: usize) -> f64 {
    let d = d as f64;
    2.0 * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}

const ENERGY_SERIES_MAX_TERMS: usize = 200;
const ENERGY_SERIES_SWITCH: f64 = 10.0;

/// `E||a - Z||` for `Z ~ N_d(0, I)` as a function of `||a||^2`.
///
/// Small arguments use the alternating power series of Szekely and Rizzo.
/// For `||a||^2 > 10` the alternating series loses digits, so the same
/// quantity is evaluated as
/// `sqrt(2) Gamma((d+1)/2) / Gamma(d/2) * e^{-x} 1F1((d+1)/2; d/2; x)`
/// with `x = ||a||^2 / 2`, whose series has positive terms only.
#[derive(Debug, Clone)]
pub struct GaussianDistance {
    d: usize,
    constant: f64,
    coefficients: Vec<f64>,
}

impl GaussianDistance {
    pub fn new(d: usize) -> Self {
        let df = d as f64;
        let lg_half = ln_gamma((df + 1.0) / 2.0);
        let constant = 2f64.sqrt() * (lg_half - ln_gamma(df / 2.0)).exp();
        let root_2_over_pi = (2.0 / PI).sqrt();
        let coefficients = (0..ENERGY_SERIES_MAX_TERMS)
            .map(|k| {
                let kf = k as f64;
                let log_mag = lg_half + ln_gamma(kf + 1.5)
                    - ln_gamma(df / 2.0 + kf + 1.0)
                    - ln_gamma(kf + 1.0)
                    - kf * 2f64.ln();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * root_2_over_pi * log_mag.exp() / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0))
            })
            .collect();
        Self {
            d,
            constant,
            coefficients,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Value at `a = 0`, i.e. `E||Z||`.
    pub fn at_origin(&self) -> f64 {
        self.constant
    }

    pub fn eval(&self, norm_sq: f64) -> Result<f64> {
        if !(norm_sq >= 0.0) || !norm_sq.is_finite() {
            return Err(Error::SeriesNonConvergence { norm_sq });
        }
        if norm_sq <= ENERGY_SERIES_SWITCH {
            self.alternating(norm_sq)
        } else {
            self.kummer(norm_sq)
        }
    }

    fn alternating(&self, x: f64) -> Result<f64> {
        let mut total = self.constant;
        let mut power = x;
        for c in &self.coefficients {
            let term = c * power;
            total += term;
            if term.abs() < 1e-12 * total.abs() {
                return Ok(total);
            }
            power *= x;
        }
        Err(Error::SeriesNonConvergence { norm_sq: x })
    }

    fn kummer(&self, norm_sq: f64) -> Result<f64> {
        const RESCALE: f64 = 1e200;
        let z = norm_sq / 2.0;
        let a = (self.d as f64 + 1.0) / 2.0;
        let b = self.d as f64 / 2.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut log_offset = 0.0;
        let max_terms = 1000 + 20 * z.ceil() as usize;
        for k in 0..max_terms {
            let kf = k as f64;
            term *= (a + kf) / (b + kf) * z / (kf + 1.0);
            sum += term;
            if sum > RESCALE {
                sum /= RESCALE;
                term /= RESCALE;
                log_offset += RESCALE.ln();
            }
            if kf > z && term < 1e-17 * sum {
                return Ok(self.constant * (sum.ln() + log_offset - z).exp());
            }
        }
        Err(Error::SeriesNonConvergence { norm_sq })
    }
}

/// `E||a - Z||` for `Z ~ N_d(0, I)` and `||a||^2 = norm_sq`.
pub fn expected_norm_to_gaussian(norm_sq: f64, d: usize) -> Result<f64> {
    GaussianDistance::new(d).eval(norm_sq)
}

/// Energy statistic of Szekely and Rizzo,
/// `n ( 2/n sum_j E||Y_j - Z|| - E||Z - Z'|| - n^{-2} sum_{j,k} ||Y_j - Y_k|| )`.
pub fn energy_statistic(res: &ResidualSet) -> Result<f64> {
    energy_statistic_with(res, &GaussianDistance::new(res.d()))
}

/// As [`energy_statistic`] with a precomputed series for the data dimension.
pub fn energy_statistic_with(res: &ResidualSet, series: &GaussianDistance) -> Result<f64> {
    if series.d() != res.d() {
        return Err(Error::DimensionMismatch {
            expected: res.d(),
            found: series.d(),
        });
    }
    let n = res.n();
    let g = res.gram();
    let s = res.sq_norms();
    let mut to_gaussian = KahanSum::new();
    for v in s {
        to_gaussian.add(series.eval(*v)?);
    }
    let mut pairs = KahanSum::new();
    for j in 0..n {
        for k in (j + 1)..n {
            pairs.add(2.0 * (s[j] + s[k] - 2.0 * g[(j, k)]).max(0.0).sqrt());
        }
    }
    let nf = n as f64;
    Ok(nf
        * (2.0 * to_gaussian.value() / nf
            - expected_gaussian_distance(res.d())
            - pairs.value() / (nf * nf)))
}

/// Henze-Jimenez-Gamero-Meintanis statistic
/// `n int ( n^{-2} sum_j cos(t'Y_j) sum_k exp(t'Y_k) - 1 )^2 e^{-gamma |t|^2} dt`
/// with the default sample-size cap.
pub fn hjm_statistic(res: &ResidualSet, gamma: f64) -> Result<f64> {
    hjm_statistic_with_cap(res, gamma, Some(HJM_DEFAULT_CAP))
}

/// HJM statistic; `cap = None` lifts the sample-size limit.
///
/// Expanding the square gives a four-fold sum over pairs `(k, m)` carrying
/// the exponential factors and pairs `(j, l)` carrying the cosines. With
/// `r_j = (Y_j'Y_k + Y_j'Y_m) / (2 gamma)` the inner sum over `(j, l)` is
/// `C'PC + S'QS` with `C_j = cos r_j`, `S_j = sin r_j` and fixed matrices
/// `P, Q` built from `exp(-|Y_j -+ Y_l|^2 / (4 gamma))`.
pub fn hjm_statistic_with_cap(res: &ResidualSet, gamma: f64, cap: Option<usize>) -> Result<f64> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("HJM requires gamma > 1, got {gamma}")));
    }
    let n = res.n();
    if let Some(cap) = cap {
        if n > cap {
            return Err(Error::SampleTooLarge { n, cap });
        }
    }
    let d = res.d() as f64;
    let g = res.gram();
    let s = res.sq_norms();
    let inv_4g = 1.0 / (4.0 * gamma);
    let inv_2g = 1.0 / (2.0 * gamma);

    // P = B- + B+, Q = B- - B+ with B-+_{jl} = exp(-|Y_j -+ Y_l|^2 / (4 gamma))
    let mut p = vec![0.0; n * n];
    let mut q = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            let minus = (-(s[j] + s[l] - 2.0 * g[(j, l)]) * inv_4g).exp();
            let plus = (-(s[j] + s[l] + 2.0 * g[(j, l)]) * inv_4g).exp();
            p[j * n + l] = minus + plus;
            q[j * n + l] = minus - plus;
        }
    }

    let mut four = KahanSum::new();
    let mut c = vec![0.0; n];
    let mut sn = vec![0.0; n];
    for k in 0..n {
        for m in k..n {
            let a = checked_exp((s[k] + s[m] + 2.0 * g[(k, m)]) * inv_4g)?;
            for j in 0..n {
                let (sin, cos) = ((g[(j, k)] + g[(j, m)]) * inv_2g).sin_cos();
                c[j] = cos;
                sn[j] = sin;
            }
            let mut inner = 0.0;
            for j in 0..n {
                let row_p = &p[j * n..(j + 1) * n];
                let row_q = &q[j * n..(j + 1) * n];
                let mut pc = 0.0;
                let mut qs = 0.0;
                for l in 0..n {
                    pc += row_p[l] * c[l];
                    qs += row_q[l] * sn[l];
                }
                inner += c[j] * pc + sn[j] * qs;
            }
            let weight = if k == m { 1.0 } else { 2.0 };
            four.add(weight * a * inner);
        }
    }

    let mut two = KahanSum::new();
    for j in 0..n {
        two.add((s[j] * inv_2g).cos());
        for k in (j + 1)..n {
            let cos = (g[(j, k)] * inv_2g).cos();
            let ch = ((s[k] - s[j]) * inv_4g).cosh();
            two.add(2.0 * cos * ch);
        }
    }

    let nf = n as f64;
    let value = four.value() / (2.0 * nf.powi(3)) - 2.0 * two.value() / nf + nf;
    Ok((PI / gamma).powf(d / 2.0) * value)
}

/// Statistic and asymptotic p-value of a classical test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Degrees of freedom `d(d+1)(d+2)/6` of the limiting chi-square law of
/// `n b_{1,d} / 6`.
pub fn mardia_skew_df(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

/// Mardia's skewness test: `n b_{1,d} / 6` against chi-square with
/// `d(d+1)(d+2)/6` degrees of freedom.
pub fn mardia_skew_test(res: &ResidualSet) -> AsymptoticTest {
    let statistic = (res.n() as f64 * mardia_skewness(res) / 6.0).max(0.0);
    let chi = ChiSquared::new(mardia_skew_df(res.d()) as f64).expect("positive degrees of freedom");
    AsymptoticTest {
        statistic,
        p_value: chi.sf(statistic),
    }
}

/// `8 d (d + 2)`, the limiting variance of `sqrt(n) (b_{2,d} - d(d+2))`.
pub fn mardia_kurt_variance(d: usize) -> f64 {
    (8 * d * (d + 2)) as f64
}

/// Mardia's kurtosis test: standardized `sqrt(n)(b_{2,d} - d(d+2))`,
/// two-sided normal p-value.
pub fn mardia_kurt_test(res: &ResidualSet) -> AsymptoticTest {
    let d = res.d();
    let z = (res.n() as f64).sqrt() * (mardia_kurtosis(res) - (d * (d + 2)) as f64)
        / mardia_kurt_variance(d).sqrt();
    let normal = Normal::standard();
    AsymptoticTest {
        statistic: z,
        p_value: (2.0 * normal.sf(z.abs())).min(1.0),
    }
}
