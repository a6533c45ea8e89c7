//! The moment-generating-function statistic `T_{n,gamma}`, the skewness and
//! kurtosis measures of the scaled residuals, and the `gamma -> infinity`
//! limit statistic `2 b_{1,d} + b~_{1,d}`.
//!
//! `T_{n,gamma} = n * int ||M_n'(t) - t M_n(t)||^2 exp(-gamma ||t||^2) dt`
//! where `M_n` is the empirical MGF of the scaled residuals. Integrating the
//! Gaussian weight in closed form turns the integral into a double sum over
//! pairs of residuals, which is what [`t_statistic`] evaluates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::ResidualSet;
use crate::numeric::{KahanSum, MAX_EXP_ARG};

/// Smoothing parameter of the weight `exp(-gamma ||t||^2)`, or the
/// `gamma -> infinity` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinity,
}

impl Gamma {
    pub fn finite(self) -> Option<f64> {
        match self {
            Gamma::Finite(g) => Some(g),
            Gamma::Infinity => None,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Gamma::Infinity),
            other => {
                let g: f64 = other
                    .parse()
                    .map_err(|_| Error::BadRequest(format!("invalid gamma '{s}'")))?;
                if g.is_finite() && g > 0.0 {
                    Ok(Gamma::Finite(g))
                } else if g == f64::INFINITY {
                    Ok(Gamma::Infinity)
                } else {
                    Err(Error::BadRequest(format!("gamma must be positive, got '{s}'")))
                }
            }
        }
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => serializer.serialize_f64(*g),
            Gamma::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(g) => Ok(Gamma::Finite(g)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Whether `gamma` values in `(0, 2]` are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaPolicy {
    /// Require `gamma > 2`, where the limit null distribution exists.
    #[default]
    Strict,
    /// Accept any `gamma > 0`; the closed form is finite there.
    AllowSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticName {
    T,
    Zghoul,
    HenzeZirkler,
    HenzeJimenezGamero,
    Energy,
    HenzeJimenezGameroMeintanis,
    MardiaSkewness,
    MardiaKurtosis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticResult {
    pub name: StatisticName,
    pub raw: f64,
    /// `c(gamma, d) * raw` for finite gamma, `raw` itself for the limit.
    pub scaled: f64,
    pub gamma: Option<Gamma>,
    pub n: usize,
    pub d: usize,
}

/// `c(gamma, d) = 16 gamma^{2 + d/2} / pi^{d/2}`, the factor under which
/// `T_{n,gamma} / n` converges to `2 b_{1,d} + b~_{1,d}`.
pub fn scale_constant(gamma: f64, d: usize) -> f64 {
    let half_d = d as f64 / 2.0;
    16.0 * gamma.powf(2.0 + half_d) / PI.powf(half_d)
}

pub(crate) fn check_gamma(gamma: f64, policy: GammaPolicy) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive and finite, got {gamma}")));
    }
    if policy == GammaPolicy::Strict && gamma <= 2.0 {
        return Err(Error::GammaTooSmall(gamma));
    }
    Ok(())
}

/// `T_{n,gamma}` with the default `gamma > 2` requirement.
pub fn t_statistic(res: &ResidualSet, gamma: f64) -> Result<StatisticResult> {
    t_statistic_with_policy(res, gamma, GammaPolicy::Strict)
}

pub fn t_statistic_with_policy(
    res: &ResidualSet,
    gamma: f64,
    policy: GammaPolicy,
) -> Result<StatisticResult> {
    check_gamma(gamma, policy)?;
    let raw = t_raw(res, gamma)?;
    Ok(StatisticResult {
        name: StatisticName::T,
        raw,
        scaled: scale_constant(gamma, res.d()) * raw,
        gamma: Some(Gamma::Finite(gamma)),
        n: res.n(),
        d: res.d(),
    })
}

/// Dispatches on finite gamma versus the limit statistic.
pub fn t_family(res: &ResidualSet, gamma: Gamma, policy: GammaPolicy) -> Result<StatisticResult> {
    match gamma {
        Gamma::Finite(g) => t_statistic_with_policy(res, g, policy),
        Gamma::Infinity => {
            let v = limit_statistic(res);
            Ok(StatisticResult {
                name: StatisticName::T,
                raw: v,
                scaled: v,
                gamma: Some(Gamma::Infinity),
                n: res.n(),
                d: res.d(),
            })
        }
    }
}

fn t_raw(res: &ResidualSet, gamma: f64) -> Result<f64> {
    let n = res.n();
    let d = res.d() as f64;
    let g = res.gram();
    let s = res.sq_norms();
    let inv_2g = 1.0 / (2.0 * gamma);
    let inv_4g = 1.0 / (4.0 * gamma);
    let inv_4g2 = 1.0 / (4.0 * gamma * gamma);
    let d_term = d * inv_2g;

    let mut sum = KahanSum::new();
    for j in 0..n {
        for k in j..n {
            let dot = g[(j, k)];
            let plus_sq = s[j] + s[k] + 2.0 * dot;
            let arg = plus_sq * inv_4g;
            if arg > MAX_EXP_ARG {
                return Err(Error::Overflow { exponent: arg });
            }
            let bracket = dot - plus_sq * inv_2g + d_term + plus_sq * inv_4g2;
            let term = arg.exp() * bracket;
            sum.add(if j == k { term } else { 2.0 * term });
        }
    }
    Ok((PI / gamma).powf(d / 2.0) * sum.value() / n as f64)
}

/// `||M_n'(t) - t M_n(t)||^2`, the integrand of `T_{n,gamma} / n` before
/// weighting. Evaluated directly from the residual rows.
pub fn t_integrand(res: &ResidualSet, t: &[f64]) -> Result<f64> {
    let d = res.d();
    if t.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: t.len(),
        });
    }
    let n = res.n() as f64;
    let y = res.residuals();
    let mut m = 0.0;
    let mut grad = vec![0.0; d];
    for row in y.row_iter() {
        let e = row.iter().zip(t).map(|(a, b)| a * b).sum::<f64>().exp();
        m += e;
        for (gi, yi) in grad.iter_mut().zip(row.iter()) {
            *gi += yi * e;
        }
    }
    Ok(grad
        .iter()
        .zip(t)
        .map(|(gi, ti)| {
            let v = gi / n - ti * m / n;
            v * v
        })
        .sum())
}

/// Mardia's skewness `b_{1,d} = n^{-2} sum_{j,k} (Y_j^T Y_k)^3`.
pub fn mardia_skewness(res: &ResidualSet) -> f64 {
    let n = res.n();
    let g = res.gram();
    let mut sum = KahanSum::new();
    for j in 0..n {
        sum.add(g[(j, j)].powi(3));
        for k in (j + 1)..n {
            sum.add(2.0 * g[(j, k)].powi(3));
        }
    }
    sum.value() / (n * n) as f64
}

/// Skewness of Mori, Rohatgi and Szekely,
/// `b~_{1,d} = n^{-2} sum_{j,k} Y_j^T Y_k ||Y_j||^2 ||Y_k||^2`.
pub fn mrs_skewness(res: &ResidualSet) -> f64 {
    let n = res.n();
    let g = res.gram();
    let s = res.sq_norms();
    let mut sum = KahanSum::new();
    for j in 0..n {
        sum.add(g[(j, j)] * s[j] * s[j]);
        for k in (j + 1)..n {
            sum.add(2.0 * g[(j, k)] * s[j] * s[k]);
        }
    }
    sum.value() / (n * n) as f64
}

/// Mardia's kurtosis `b_{2,d} = n^{-1} sum_j ||Y_j||^4`.
pub fn mardia_kurtosis(res: &ResidualSet) -> f64 {
    let s: KahanSum = res.sq_norms().iter().map(|v| v * v).collect();
    s.value() / res.n() as f64
}

/// `2 b_{1,d} + b~_{1,d}`, the limit of `c(gamma, d) T_{n,gamma} / n` as
/// `gamma -> infinity`. For `d = 1` this is three times the squared sample
/// skewness.
pub fn limit_statistic(res: &ResidualSet) -> f64 {
    2.0 * mardia_skewness(res) + mrs_skewness(res)
}
