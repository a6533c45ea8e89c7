//! Seeded generators for the null distribution and the alternatives used in
//! the power study.
//!
//! All randomness comes from ChaCha20 ([`RNG_ALGORITHM`]). A
//! [`SeededStream`] is a `(seed, stream_index)` pair: the seed keys the
//! generator and the index selects one of its 2^64 independent streams, so a
//! replication's draws depend only on its own pair and never on scheduling.
//!
//! Alternatives have a canonical text form used by the CLI and in result
//! files, e.g. `nmix:p=0.9,mu1=0,cov1=I,mu2=3,cov2=I,d=3` or
//! `pearson7:m=10,d=1,iid`. The aliases `nmix1`, `nmix2` expand to the
//! mixtures of the power study (univariate versions when `d = 1`).

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, LogNormal, Open01, StandardNormal, StudentT, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

pub const RNG_ALGORITHM: &str = "chacha20";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a named task, derived from a base seed. Uses FNV-1a on the
/// label so the mapping is stable across platforms and compiler versions.
pub fn derive_seed(base: u64, task: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in task.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(base ^ splitmix64(h))
}

/// Univariate law used for i.i.d. coordinates or as the single non-normal
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    ChiSquared { k: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Logistic,
    /// Shape and rate. Only the shape matters to affine invariant tests.
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64 },
    /// Pearson type VII with density proportional to `(1 + x^2)^{-m}`.
    /// The `df = nu` form of a Student t law is `m = (nu + 1) / 2`.
    PearsonVii { m: f64 },
    SkewNormal { lambda: f64 },
    StudentT { nu: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            Marginal::ChiSquared { k } if !(k > 0.0) => bad(format!("chi-square k must be > 0, got {k}")),
            Marginal::LogNormal { sigma, mu } if !(sigma > 0.0) || !mu.is_finite() => {
                bad(format!("lognormal needs finite mu and sigma > 0, got ({mu}, {sigma})"))
            }
            Marginal::Gamma { shape, rate } if !(shape > 0.0 && rate > 0.0) => {
                bad(format!("gamma needs shape, rate > 0, got ({shape}, {rate})"))
            }
            Marginal::Weibull { shape } if !(shape > 0.0) => bad(format!("Weibull shape must be > 0, got {shape}")),
            Marginal::PearsonVii { m } if !(m > 0.5) => bad(format!("Pearson VII needs m > 1/2, got {m}")),
            Marginal::SkewNormal { lambda } if !lambda.is_finite() => bad("skew-normal lambda must be finite".into()),
            Marginal::StudentT { nu } if !(nu > 0.0) => bad(format!("t degrees of freedom must be > 0, got {nu}")),
            _ => Ok(()),
        }
    }

    /// True when `E exp(t X)` is finite on a neighbourhood of zero.
    pub fn has_local_mgf(&self) -> bool {
        !matches!(
            self,
            Marginal::LogNormal { .. } | Marginal::PearsonVii { .. } | Marginal::StudentT { .. }
        )
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::ChiSquared { k } => write!(f, "chisq:k={k}"),
            Marginal::LogNormal { mu, sigma } => write!(f, "lognormal:mu={mu},sigma={sigma}"),
            Marginal::Logistic => f.write_str("logistic"),
            Marginal::Gamma { shape, rate } => write!(f, "gamma:shape={shape},rate={rate}"),
            Marginal::Weibull { shape } => write!(f, "weibull:k={shape}"),
            Marginal::PearsonVii { m } => write!(f, "pearson7:m={m}"),
            Marginal::SkewNormal { lambda } => write!(f, "skewnormal:lambda={lambda}"),
            Marginal::StudentT { nu } => write!(f, "t:nu={nu}"),
        }
    }
}

/// Covariance of a normal mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovarianceKind {
    Identity,
    /// `v I`.
    Scaled(f64),
    /// Unit diagonal, constant `rho` off the diagonal.
    Equicorrelated(f64),
}

impl CovarianceKind {
    fn matrix(&self, d: usize) -> DMatrix<f64> {
        match *self {
            CovarianceKind::Identity => DMatrix::identity(d, d),
            CovarianceKind::Scaled(v) => DMatrix::identity(d, d) * v,
            CovarianceKind::Equicorrelated(rho) => {
                DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
            }
        }
    }
}

impl fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceKind::Identity => f.write_str("I"),
            CovarianceKind::Scaled(v) => write!(f, "var{v}"),
            CovarianceKind::Equicorrelated(r) => write!(f, "eq{r}"),
        }
    }
}

impl FromStr for CovarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("invalid covariance '{s}'")))
        };
        if s == "I" {
            Ok(CovarianceKind::Identity)
        } else if let Some(v) = s.strip_prefix("var") {
            Ok(CovarianceKind::Scaled(num(v)?))
        } else if let Some(r) = s.strip_prefix("eq") {
            Ok(CovarianceKind::Equicorrelated(num(r)?))
        } else {
            Err(Error::InvalidSpec(format!("invalid covariance '{s}' (use I, var<v>, eq<rho>)")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    StdNormal,
    /// `p N(mean1 * 1, cov1) + (1 - p) N(mean2 * 1, cov2)`.
    NormalMixture {
        p: f64,
        mean1: f64,
        cov1: CovarianceKind,
        mean2: f64,
        cov2: CovarianceKind,
    },
    /// `t_nu(0, I_d)`.
    MultivariateT { nu: f64 },
    IidMarginals(Marginal),
    /// `d - 1` standard normal coordinates and one coordinate from the marginal.
    OneNonNormalMarginal(Marginal),
    /// `R U` with `R ~ LogNormal(mu, sigma)` and `U` uniform on the sphere.
    SphericalLogNormalRadius { mu: f64, sigma: f64 },
    /// `0.5 N(0, rho_d) + 0.5 N(0, rho_d')` with off-diagonals `rho` and `-rho`.
    NormalMarginalsMixture { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternativeSpec {
    pub family: Family,
    pub d: usize,
}

impl AlternativeSpec {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        let spec = Self { family, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn std_normal(d: usize) -> Self {
        Self {
            family: Family::StdNormal,
            d,
        }
    }

    /// NMIX1: `0.5 N(0,1) + 0.5 N(0,4)` for `d = 1`,
    /// `0.9 N_d(0, I) + 0.1 N_d(3, I)` otherwise.
    pub fn nmix1(d: usize) -> Self {
        let family = if d == 1 {
            Family::NormalMixture {
                p: 0.5,
                mean1: 0.0,
                cov1: CovarianceKind::Identity,
                mean2: 0.0,
                cov2: CovarianceKind::Scaled(4.0),
            }
        } else {
            Family::NormalMixture {
                p: 0.9,
                mean1: 0.0,
                cov1: CovarianceKind::Identity,
                mean2: 3.0,
                cov2: CovarianceKind::Identity,
            }
        };
        Self { family, d }
    }

    /// NMIX2: `0.75 N(0,1) + 0.25 N(0,4)` for `d = 1`,
    /// `0.9 N_d(0, B_d) + 0.1 N_d(0, I)` otherwise, `B_d` equicorrelated at 0.9.
    pub fn nmix2(d: usize) -> Self {
        let family = if d == 1 {
            Family::NormalMixture {
                p: 0.75,
                mean1: 0.0,
                cov1: CovarianceKind::Identity,
                mean2: 0.0,
                cov2: CovarianceKind::Scaled(4.0),
            }
        } else {
            Family::NormalMixture {
                p: 0.9,
                mean1: 0.0,
                cov1: CovarianceKind::Equicorrelated(0.9),
                mean2: 0.0,
                cov2: CovarianceKind::Identity,
            }
        };
        Self { family, d }
    }

    pub fn iid(marginal: Marginal, d: usize) -> Self {
        Self {
            family: Family::IidMarginals(marginal),
            d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        match self.family {
            Family::StdNormal => Ok(()),
            Family::NormalMixture {
                p,
                mean1,
                cov1,
                mean2,
                cov2,
            } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidSpec(format!("mixture weight must be in (0,1), got {p}")));
                }
                if !mean1.is_finite() || !mean2.is_finite() {
                    return Err(Error::InvalidSpec("mixture means must be finite".into()));
                }
                for cov in [cov1, cov2] {
                    cholesky(&cov.matrix(self.d))?;
                }
                Ok(())
            }
            Family::MultivariateT { nu } => {
                if nu > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("t degrees of freedom must be > 0, got {nu}")))
                }
            }
            Family::IidMarginals(m) | Family::OneNonNormalMarginal(m) => m.validate(),
            Family::SphericalLogNormalRadius { mu, sigma } => {
                if sigma > 0.0 && mu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("lognormal radius needs sigma > 0, got {sigma}")))
                }
            }
            Family::NormalMarginalsMixture { rho } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::InvalidSpec(format!("rho must be in (0,1), got {rho}")));
                }
                cholesky(&CovarianceKind::Equicorrelated(-rho).matrix(self.d)).map(|_| ())
            }
        }
    }

    /// True when the law has a moment generating function finite near the
    /// origin (exponentially decaying tails).
    pub fn has_local_mgf(&self) -> bool {
        match self.family {
            Family::MultivariateT { .. } | Family::SphericalLogNormalRadius { .. } => false,
            Family::IidMarginals(m) | Family::OneNonNormalMarginal(m) => m.has_local_mgf(),
            _ => true,
        }
    }
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.d;
        match &self.family {
            Family::StdNormal => write!(f, "normal:d={d}"),
            Family::NormalMixture {
                p,
                mean1,
                cov1,
                mean2,
                cov2,
            } => write!(f, "nmix:p={p},mu1={mean1},cov1={cov1},mu2={mean2},cov2={cov2},d={d}"),
            Family::MultivariateT { nu } => write!(f, "mvt:nu={nu},d={d}"),
            Family::IidMarginals(m) | Family::OneNonNormalMarginal(m) => {
                let mode = if matches!(self.family, Family::IidMarginals(_)) { "iid" } else { "one" };
                let m = m.to_string();
                if m.contains(':') {
                    write!(f, "{m},d={d},{mode}")
                } else {
                    write!(f, "{m}:d={d},{mode}")
                }
            }
            Family::SphericalLogNormalRadius { mu, sigma } => {
                write!(f, "sphlognormal:mu={mu},sigma={sigma},d={d}")
            }
            Family::NormalMarginalsMixture { rho } => write!(f, "nmrho:rho={rho},d={d}"),
        }
    }
}

struct Params<'a> {
    source: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
    flags: Vec<&'a str>,
}

impl<'a> Params<'a> {
    fn parse(source: &'a str, body: &'a str) -> Self {
        let mut pairs = Vec::new();
        let mut flags = Vec::new();
        for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.split_once('=') {
                Some((k, v)) => pairs.push((k.trim(), v.trim())),
                None => flags.push(tok),
            }
        }
        Self { source, pairs, flags }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn num(&self, key: &str) -> Result<f64> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::InvalidSpec(format!("'{}' is missing '{key}='", self.source)))?;
        v.parse()
            .map_err(|_| Error::InvalidSpec(format!("'{}': '{key}={v}' is not a number", self.source)))
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.raw(key).is_some() {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn dim(&self) -> Result<usize> {
        match self.raw("d") {
            None => Ok(1),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("'{}': invalid dimension '{v}'", self.source))),
        }
    }
}

impl FromStr for AlternativeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let p = Params::parse(s, body);
        let d = p.dim()?;
        let marginal = |m: Marginal| -> Result<Family> {
            if p.flags.contains(&"one") {
                Ok(Family::OneNonNormalMarginal(m))
            } else {
                Ok(Family::IidMarginals(m))
            }
        };
        let family = match name.to_ascii_lowercase().as_str() {
            "normal" | "n" => Family::StdNormal,
            "nmix1" => AlternativeSpec::nmix1(d).family,
            "nmix2" => AlternativeSpec::nmix2(d).family,
            "nmix" => Family::NormalMixture {
                p: p.num("p")?,
                mean1: p.num_or("mu1", 0.0)?,
                cov1: p.raw("cov1").unwrap_or("I").parse()?,
                mean2: p.num_or("mu2", 0.0)?,
                cov2: p.raw("cov2").unwrap_or("I").parse()?,
            },
            "mvt" => Family::MultivariateT { nu: p.num("nu")? },
            "sphlognormal" => Family::SphericalLogNormalRadius {
                mu: p.num_or("mu", 0.0)?,
                sigma: p.num("sigma")?,
            },
            "nmrho" => Family::NormalMarginalsMixture { rho: p.num("rho")? },
            "chisq" => marginal(Marginal::ChiSquared { k: p.num("k")? })?,
            "lognormal" => marginal(Marginal::LogNormal {
                mu: p.num_or("mu", 0.0)?,
                sigma: p.num("sigma")?,
            })?,
            "logistic" => marginal(Marginal::Logistic)?,
            "gamma" => marginal(Marginal::Gamma {
                shape: p.num("shape")?,
                rate: p.num_or("rate", 1.0)?,
            })?,
            "weibull" => marginal(Marginal::Weibull { shape: p.num("k")? })?,
            "pearson7" => {
                let m = match (p.raw("m"), p.raw("df")) {
                    (Some(_), None) => p.num("m")?,
                    (None, Some(_)) => (p.num("df")? + 1.0) / 2.0,
                    _ => {
                        return Err(Error::InvalidSpec(format!("'{s}': give exactly one of m= or df=")))
                    }
                };
                marginal(Marginal::PearsonVii { m })?
            }
            "skewnormal" | "sn" => marginal(Marginal::SkewNormal { lambda: p.num("lambda")? })?,
            "t" => marginal(Marginal::StudentT { nu: p.num("nu")? })?,
            other => return Err(Error::InvalidSpec(format!("unknown distribution family '{other}'"))),
        };
        AlternativeSpec::new(family, d)
    }
}

impl Serialize for AlternativeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AlternativeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidSpec("mixture covariance is not positive definite".into()))
}

#[derive(Debug, Clone)]
enum MarginalSampler {
    ChiSquared(ChiSquared<f64>),
    LogNormal(LogNormal<f64>),
    Logistic,
    Gamma(Gamma<f64>),
    Weibull(Weibull<f64>),
    PearsonVii { t: StudentT<f64>, scale: f64 },
    SkewNormal { delta: f64 },
    StudentT(StudentT<f64>),
}

impl MarginalSampler {
    fn new(m: &Marginal) -> Result<Self> {
        m.validate()?;
        let err = |e: &dyn fmt::Display| Error::InvalidSpec(format!("{m}: {e}"));
        Ok(match *m {
            Marginal::ChiSquared { k } => Self::ChiSquared(ChiSquared::new(k).map_err(|e| err(&e))?),
            Marginal::LogNormal { mu, sigma } => Self::LogNormal(LogNormal::new(mu, sigma).map_err(|e| err(&e))?),
            Marginal::Logistic => Self::Logistic,
            Marginal::Gamma { shape, rate } => Self::Gamma(Gamma::new(shape, 1.0 / rate).map_err(|e| err(&e))?),
            Marginal::Weibull { shape } => Self::Weibull(Weibull::new(1.0, shape).map_err(|e| err(&e))?),
            Marginal::PearsonVii { m } => {
                let nu = 2.0 * m - 1.0;
                Self::PearsonVii {
                    t: StudentT::new(nu).map_err(|e| err(&e))?,
                    scale: 1.0 / nu.sqrt(),
                }
            }
            Marginal::SkewNormal { lambda } => Self::SkewNormal {
                delta: lambda / (1.0 + lambda * lambda).sqrt(),
            },
            Marginal::StudentT { nu } => Self::StudentT(StudentT::new(nu).map_err(|e| err(&e))?),
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::ChiSquared(d) => d.sample(rng),
            Self::LogNormal(d) => d.sample(rng),
            Self::Logistic => {
                let u: f64 = rng.sample(Open01);
                (u / (1.0 - u)).ln()
            }
            Self::Gamma(d) => d.sample(rng),
            Self::Weibull(d) => d.sample(rng),
            Self::PearsonVii { t, scale } => t.sample(rng) * scale,
            Self::SkewNormal { delta } => skew_normal_draw(*delta, rng),
            Self::StudentT(d) => d.sample(rng),
        }
    }
}

fn skew_normal_draw<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> f64 {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    delta * z0.abs() + (1.0 - delta * delta).max(0.0).sqrt() * z1
}

#[derive(Debug, Clone)]
enum Plan {
    StdNormal,
    Mixture {
        p: f64,
        mean1: f64,
        chol1: DMatrix<f64>,
        mean2: f64,
        chol2: DMatrix<f64>,
    },
    MultivariateT(ChiSquared<f64>, f64),
    Iid(MarginalSampler),
    OneNonNormal(MarginalSampler),
    Spherical(LogNormal<f64>),
}

/// Prepared sampler for one [`AlternativeSpec`]: distribution objects and
/// Cholesky factors are built once and reused across replications.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: AlternativeSpec,
    plan: Plan,
}

impl Sampler {
    pub fn new(spec: &AlternativeSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let plan = match spec.family {
            Family::StdNormal => Plan::StdNormal,
            Family::NormalMixture {
                p,
                mean1,
                cov1,
                mean2,
                cov2,
            } => Plan::Mixture {
                p,
                mean1,
                chol1: cholesky(&cov1.matrix(d))?,
                mean2,
                chol2: cholesky(&cov2.matrix(d))?,
            },
            Family::NormalMarginalsMixture { rho } => Plan::Mixture {
                p: 0.5,
                mean1: 0.0,
                chol1: cholesky(&CovarianceKind::Equicorrelated(rho).matrix(d))?,
                mean2: 0.0,
                chol2: cholesky(&CovarianceKind::Equicorrelated(-rho).matrix(d))?,
            },
            Family::MultivariateT { nu } => Plan::MultivariateT(
                ChiSquared::new(nu).map_err(|e| Error::InvalidSpec(e.to_string()))?,
                nu,
            ),
            Family::IidMarginals(m) => Plan::Iid(MarginalSampler::new(&m)?),
            Family::OneNonNormalMarginal(m) => Plan::OneNonNormal(MarginalSampler::new(&m)?),
            Family::SphericalLogNormalRadius { mu, sigma } => Plan::Spherical(
                LogNormal::new(mu, sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?,
            ),
        };
        Ok(Self { spec: *spec, plan })
    }

    pub fn spec(&self) -> &AlternativeSpec {
        &self.spec
    }

    fn fill_row<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], row: &mut [f64]) {
        let d = row.len();
        match &self.plan {
            Plan::StdNormal => row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            Plan::Mixture {
                p,
                mean1,
                chol1,
                mean2,
                chol2,
            } => {
                let first = rng.random::<f64>() < *p;
                let (mean, chol) = if first { (*mean1, chol1) } else { (*mean2, chol2) };
                z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                for i in 0..d {
                    let mut acc = mean;
                    for j in 0..=i {
                        acc += chol[(i, j)] * z[j];
                    }
                    row[i] = acc;
                }
            }
            Plan::MultivariateT(chi, nu) => {
                row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                let w = (chi.sample(rng) / nu).sqrt();
                row.iter_mut().for_each(|v| *v /= w);
            }
            Plan::Iid(m) => row.iter_mut().for_each(|v| *v = m.draw(rng)),
            Plan::OneNonNormal(m) => {
                for v in row[..d - 1].iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                row[d - 1] = m.draw(rng);
            }
            Plan::Spherical(radius) => {
                uniform_on_sphere(rng, row);
                let r = radius.sample(rng);
                row.iter_mut().for_each(|v| *v *= r);
            }
        }
    }

    /// Draws `n` i.i.d. observations using `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DataMatrix> {
        let d = self.spec.d;
        if n < d + 1 {
            return Err(Error::InvalidSpec(format!("need n >= d + 1 = {}, got {n}", d + 1)));
        }
        let mut data = vec![0.0; n * d];
        let mut z = vec![0.0; d];
        for row in data.chunks_exact_mut(d) {
            self.fill_row(rng, &mut z, row);
        }
        DataMatrix::new(DMatrix::from_row_slice(n, d, &data))
    }

    pub fn sample(&self, n: usize, stream: SeededStream) -> Result<DataMatrix> {
        self.sample_with(n, &mut stream.rng())
    }
}

/// Overwrites `row` with a uniform point on the unit sphere.
fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, row: &mut [f64]) {
    loop {
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// `n` i.i.d. draws from `spec`, deterministic given `stream`.
pub fn sample(spec: &AlternativeSpec, n: usize, stream: SeededStream) -> Result<DataMatrix> {
    Sampler::new(spec)?.sample(n, stream)
}

/// Skew-normal `SN(lambda)` draws via `delta |Z0| + sqrt(1 - delta^2) Z1`.
pub fn sample_skew_normal(lambda: f64, n: usize, stream: SeededStream) -> Vec<f64> {
    let delta = lambda / (1.0 + lambda * lambda).sqrt();
    let mut rng = stream.rng();
    (0..n).map(|_| skew_normal_draw(delta, &mut rng)).collect()
}

/// Rows `R U` with lognormal radius and uniform direction.
pub fn sample_spherical_lognormal(
    d: usize,
    mu: f64,
    sigma: f64,
    n: usize,
    stream: SeededStream,
) -> Result<DataMatrix> {
    let spec = AlternativeSpec::new(Family::SphericalLogNormalRadius { mu, sigma }, d)?;
    sample(&spec, n, stream)
}

/// Pearson VII draws with location 0, scale 1 and shape `m > 1/2`.
pub fn sample_pearson_vii(m: f64, n: usize, stream: SeededStream) -> Result<Vec<f64>> {
    let sampler = MarginalSampler::new(&Marginal::PearsonVii { m })?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}
