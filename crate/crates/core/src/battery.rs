//! A uniform handle on every test statistic, used by the Monte Carlo engine
//! and the CLI. Each variant carries its tuning parameter; evaluation returns
//! the value whose large values reject normality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::competitors::{
    energy_statistic_with, hj_statistic, hz_default_gamma, hjm_statistic_with_cap, hz_statistic, mardia_kurt_test,
    zghoul_statistic, GaussianDistance, HJM_DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::ResidualSet;
use crate::statistic::{mardia_skewness, t_family, Gamma, GammaPolicy, StatisticName};

pub const DEFAULT_HJ_BETA: f64 = 3.0;
pub const DEFAULT_HJM_GAMMA: f64 = 1.5;
pub const DEFAULT_ZGHOUL_GAMMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// Scaled `T_{n,gamma}`; `Infinity` gives the moment limit.
    T { gamma: Gamma, policy: GammaPolicy },
    Zghoul { gamma: f64 },
    /// `None` uses the sample-size dependent default bandwidth.
    HenzeZirkler { gamma: Option<f64> },
    HenzeJimenezGamero { beta: f64 },
    Energy,
    HenzeJimenezGameroMeintanis { gamma: f64 },
    /// `n b_{1,d} / 6`.
    MardiaSkewness,
    /// `|z|` for the standardized kurtosis.
    MardiaKurtosis,
}

impl Statistic {
    pub fn t(gamma: Gamma) -> Self {
        Statistic::T {
            gamma,
            policy: GammaPolicy::Strict,
        }
    }

    pub fn name(&self) -> StatisticName {
        match self {
            Statistic::T { .. } => StatisticName::T,
            Statistic::Zghoul { .. } => StatisticName::Zghoul,
            Statistic::HenzeZirkler { .. } => StatisticName::HenzeZirkler,
            Statistic::HenzeJimenezGamero { .. } => StatisticName::HenzeJimenezGamero,
            Statistic::Energy => StatisticName::Energy,
            Statistic::HenzeJimenezGameroMeintanis { .. } => StatisticName::HenzeJimenezGameroMeintanis,
            Statistic::MardiaSkewness => StatisticName::MardiaSkewness,
            Statistic::MardiaKurtosis => StatisticName::MardiaKurtosis,
        }
    }

    /// Tuning parameter as reported in result files.
    pub fn tuning(&self) -> Option<String> {
        match self {
            Statistic::T { gamma, .. } => Some(gamma.to_string()),
            Statistic::Zghoul { gamma } | Statistic::HenzeJimenezGameroMeintanis { gamma } => {
                Some(gamma.to_string())
            }
            Statistic::HenzeZirkler { gamma } => Some(gamma.map_or("default".into(), |g| g.to_string())),
            Statistic::HenzeJimenezGamero { beta } => Some(beta.to_string()),
            _ => None,
        }
    }

    /// Checks parameters against the dimension without touching data.
    pub fn check(&self, d: usize) -> Result<()> {
        match *self {
            Statistic::T { gamma, policy } => {
                if let Gamma::Finite(g) = gamma {
                    crate::statistic::check_gamma(g, policy)?;
                }
                Ok(())
            }
            Statistic::Zghoul { gamma } => {
                if d != 1 {
                    Err(Error::DimensionError { required: 1, found: d })
                } else if gamma > 2.0 {
                    Ok(())
                } else {
                    Err(Error::GammaTooSmall(gamma))
                }
            }
            Statistic::HenzeZirkler { gamma: Some(g) } | Statistic::HenzeJimenezGameroMeintanis { gamma: g } => {
                if g > 0.0 && g.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("bandwidth must be positive, got {g}")))
                }
            }
            Statistic::HenzeJimenezGamero { beta } => {
                if beta > 1.0 {
                    Ok(())
                } else {
                    Err(Error::BetaTooSmall(beta))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn evaluator(&self, d: usize) -> Result<Evaluator> {
        self.check(d)?;
        let distance = match self {
            Statistic::Energy => Some(GaussianDistance::new(d)),
            _ => None,
        };
        Ok(Evaluator {
            statistic: *self,
            distance,
        })
    }

    pub fn evaluate(&self, res: &ResidualSet) -> Result<f64> {
        self.evaluator(res.d())?.evaluate(res)
    }
}

/// A [`Statistic`] with any dimension-dependent tables built once.
#[derive(Debug, Clone)]
pub struct Evaluator {
    statistic: Statistic,
    distance: Option<GaussianDistance>,
}

impl Evaluator {
    pub fn statistic(&self) -> &Statistic {
        &self.statistic
    }

    pub fn evaluate(&self, res: &ResidualSet) -> Result<f64> {
        match self.statistic {
            Statistic::T { gamma, policy } => t_family(res, gamma, policy).map(|r| r.scaled),
            Statistic::Zghoul { gamma } => zghoul_statistic(res, gamma),
            Statistic::HenzeZirkler { gamma } => {
                hz_statistic(res, gamma.unwrap_or_else(|| hz_default_gamma(res.n(), res.d())))
            }
            Statistic::HenzeJimenezGamero { beta } => hj_statistic(res, beta),
            Statistic::Energy => {
                let table = self.distance.as_ref().expect("energy evaluator carries its table");
                energy_statistic_with(res, table)
            }
            Statistic::HenzeJimenezGameroMeintanis { gamma } => {
                hjm_statistic_with_cap(res, gamma, Some(HJM_DEFAULT_CAP))
            }
            Statistic::MardiaSkewness => Ok(res.n() as f64 * mardia_skewness(res) / 6.0),
            Statistic::MardiaKurtosis => Ok(mardia_kurt_test(res).statistic.abs()),
        }
    }
}

/// Labels: `T<gamma>` (`Tinf` for the limit), `Z<gamma>`, `HZ` or
/// `HZ<gamma>`, `HJ<beta>`, `EN`, `HM<gamma>`, `MS`, `MK`. Without a number
/// `Z`, `HJ` and `HM` take their default tuning.
impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::T { gamma, .. } => write!(f, "T{gamma}"),
            Statistic::Zghoul { gamma } => write!(f, "Z{gamma}"),
            Statistic::HenzeZirkler { gamma: None } => f.write_str("HZ"),
            Statistic::HenzeZirkler { gamma: Some(g) } => write!(f, "HZ{g}"),
            Statistic::HenzeJimenezGamero { beta } => write!(f, "HJ{beta}"),
            Statistic::Energy => f.write_str("EN"),
            Statistic::HenzeJimenezGameroMeintanis { gamma } => write!(f, "HM{gamma}"),
            Statistic::MardiaSkewness => f.write_str("MS"),
            Statistic::MardiaKurtosis => f.write_str("MK"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown statistic '{s}'"));
        let number = |rest: &str, default: f64| -> Result<f64> {
            if rest.is_empty() {
                Ok(default)
            } else {
                rest.parse().map_err(|_| bad())
            }
        };
        let upper = s.to_ascii_uppercase();
        // longest prefixes first
        if let Some(rest) = upper.strip_prefix("HZ") {
            return Ok(Statistic::HenzeZirkler {
                gamma: if rest.is_empty() { None } else { Some(number(rest, 0.0)?) },
            });
        }
        if let Some(rest) = upper.strip_prefix("HJ") {
            return Ok(Statistic::HenzeJimenezGamero {
                beta: number(rest, DEFAULT_HJ_BETA)?,
            });
        }
        if let Some(rest) = upper.strip_prefix("HM") {
            return Ok(Statistic::HenzeJimenezGameroMeintanis {
                gamma: number(rest, DEFAULT_HJM_GAMMA)?,
            });
        }
        match upper.as_str() {
            "EN" | "ENERGY" => return Ok(Statistic::Energy),
            "MS" => return Ok(Statistic::MardiaSkewness),
            "MK" => return Ok(Statistic::MardiaKurtosis),
            _ => {}
        }
        if let Some(rest) = upper.strip_prefix('Z') {
            return Ok(Statistic::Zghoul {
                gamma: number(rest, DEFAULT_ZGHOUL_GAMMA)?,
            });
        }
        if let Some(rest) = s.strip_prefix(['T', 't']) {
            let gamma: Gamma = rest.parse().map_err(|_| bad())?;
            return Ok(Statistic::t(gamma));
        }
        Err(bad())
    }
}

impl Serialize for Statistic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Statistic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
