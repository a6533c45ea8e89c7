//! Affine invariant tests of multivariate normality based on the moment
//! generating function characterisation `m'(t) = t m(t)`, together with the
//! classical competitors, seeded samplers for the alternatives of the power
//! study and a Monte Carlo engine for critical values, p-values and power.

pub mod asymptotics;
pub mod battery;
pub mod competitors;
mod error;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod numeric;
pub mod sampling;
pub mod statistic;
pub mod tables;

pub use battery::{Evaluator, Statistic};
pub use error::{Error, Result};
pub use linalg::{scaled_residuals, DataMatrix, ResidualSet};
pub use montecarlo::{MCKind, MCResult, NullCache, NullTable};
pub use sampling::{AlternativeSpec, SeededStream};
pub use statistic::{t_statistic, Gamma, GammaPolicy, StatisticName, StatisticResult};
pub use tables::{Subset, TableId, TableReport};
