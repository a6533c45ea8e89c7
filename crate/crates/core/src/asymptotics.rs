//! Closed-form quantities of the limit null distribution of `T_{n,gamma}`:
//! the covariance kernel of the limiting Gaussian process, the mean of the
//! limit variable for every dimension, and its variance for `d = 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Covariance kernel `K(s, t) = E[W(s) W(t)^T]` of the limiting process,
///
/// `K(s,t) = e^{(|s|^2+|t|^2)/2} ( e^{s't} (t s' + I) - t s' - (1 + s't) I )`.
pub fn kernel(s: &[f64], t: &[f64], d: usize) -> Result<DMatrix<f64>> {
    for v in [s, t] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let st: f64 = s.iter().zip(t).map(|(a, b)| a * b).sum();
    let ss: f64 = s.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let outer = (0.5 * (ss + tt)).exp();
    // e^{st} - 1 and e^{st} - 1 - st, written to avoid cancellation near st = 0
    let em1 = st.exp_m1();
    let diag = em1 - st;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let mut v = em1 * t[i] * s[j];
        if i == j {
            v += diag;
        }
        outer * v
    }))
}

/// `E[T_{infinity,gamma}]` for dimension `d`; requires `gamma > 2`.
pub fn limit_mean(gamma: f64, d: usize) -> Result<f64> {
    if !(gamma > 2.0) {
        return Err(Error::GammaTooSmall(gamma));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let d = d as f64;
    let first = (PI / (gamma - 2.0)).powf(d / 2.0) * (d + d / (2.0 * (gamma - 2.0)));
    let second = (d * (d + 1.0) / (2.0 * (gamma - 1.0)) + d) * (PI / (gamma - 1.0)).powf(d / 2.0);
    Ok(first - second)
}

/// `Var[T_{infinity,gamma}]` for `d = 1`; requires `gamma > 2`.
pub fn limit_variance_d1(gamma: f64) -> Result<f64> {
    if !(gamma > 2.0) {
        return Err(Error::GammaTooSmall(gamma));
    }
    let beta = gamma - 1.0;
    let b2 = beta * beta;
    let delta = (b2 - 1.0).powf(-0.5);
    let eta = (4.0 * b2 - 1.0).powf(-0.5);
    let inner = 1.0 / beta + beta.powi(-3) + delta + delta.powi(3) + 0.25 * (b2 + 2.0) * delta.powi(5)
        - 4.0 * eta
        - 12.0 * eta.powi(3)
        - 16.0 * (2.0 * b2 + 1.0) * eta.powi(5);
    Ok(2.0 * PI * inner)
}
