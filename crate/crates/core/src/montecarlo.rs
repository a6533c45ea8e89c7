//! Monte Carlo critical values, p-values and power estimates.
//!
//! Every replication draws its sample from its own [`SeededStream`]
//! `(task_seed, replication)`, where the task seed is derived from the base
//! seed and a label naming the task. Results are therefore independent of the
//! number of worker threads. Null samples depend only on `(seed, n, d)`, so
//! several statistics can share one simulation and be cached together.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::{Evaluator, Statistic};
use crate::error::{Error, Result};
use crate::linalg::{scaled_residuals, ResidualSet};
use crate::sampling::{derive_seed, AlternativeSpec, Sampler, SeededStream, RNG_ALGORITHM};
use crate::statistic::{t_family, Gamma, GammaPolicy};

pub const NULL_TABLE_SCHEMA_VERSION: u32 = 1;
pub const MIN_REPS: usize = 100;
/// Critical values computed on the fly for a power run use this many times
/// the power replications.
pub const CRITICAL_REPS_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MCKind {
    CriticalValue,
    PValue,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub kind: MCKind,
    pub statistic: Statistic,
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    pub value: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<AlternativeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_value: Option<f64>,
}

/// Sorted null values of one statistic with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTable {
    pub schema_version: u32,
    pub statistic: Statistic,
    pub tuning: Option<String>,
    pub n: usize,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    pub algorithm: String,
    pub values: Vec<f64>,
}

impl NullTable {
    fn new(statistic: Statistic, n: usize, d: usize, seed: u64, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            schema_version: NULL_TABLE_SCHEMA_VERSION,
            statistic,
            tuning: statistic.tuning(),
            n,
            d,
            reps: values.len(),
            seed,
            algorithm: RNG_ALGORITHM.to_string(),
            values,
        }
    }

    /// Index (0-based) of the `1 - alpha` order statistic:
    /// `ceil((1 - alpha) reps) - 1`.
    fn quantile_index(&self, alpha: f64) -> usize {
        let k = ((1.0 - alpha) * self.reps as f64 - 1e-9).ceil() as usize;
        k.clamp(1, self.reps) - 1
    }

    pub fn quantile(&self, alpha: f64) -> f64 {
        self.values[self.quantile_index(alpha)]
    }

    /// Critical value at level `alpha`. The standard error is half the
    /// spread between the order statistics one binomial standard deviation
    /// either side of the quantile.
    pub fn critical_value(&self, alpha: f64) -> MCResult {
        let k = self.quantile_index(alpha);
        let m = (self.reps as f64 * alpha * (1.0 - alpha)).sqrt().ceil() as usize;
        let lo = self.values[k.saturating_sub(m)];
        let hi = self.values[(k + m).min(self.reps - 1)];
        MCResult {
            kind: MCKind::CriticalValue,
            statistic: self.statistic,
            n: self.n,
            d: self.d,
            alpha: Some(alpha),
            reps: self.reps,
            seed: self.seed,
            value: self.values[k],
            std_error: (hi - lo) / 2.0,
            alternative: None,
            critical_value: None,
        }
    }

    /// `(1 + #{null >= observed}) / (reps + 1)`.
    pub fn p_value(&self, observed: f64) -> MCResult {
        let below = self.values.partition_point(|v| *v < observed);
        let exceed = self.reps - below;
        let p = (1 + exceed) as f64 / (self.reps + 1) as f64;
        MCResult {
            kind: MCKind::PValue,
            statistic: self.statistic,
            n: self.n,
            d: self.d,
            alpha: None,
            reps: self.reps,
            seed: self.seed,
            value: p,
            std_error: (p * (1.0 - p) / self.reps as f64).sqrt(),
            alternative: None,
            critical_value: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(self)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let table: NullTable = serde_json::from_slice(&fs::read(path)?)?;
        if table.schema_version != NULL_TABLE_SCHEMA_VERSION {
            return Err(Error::InvalidData(format!(
                "{}: unsupported null table schema version {}",
                path.display(),
                table.schema_version
            )));
        }
        if table.values.len() != table.reps {
            return Err(Error::InvalidData(format!("{}: length does not match reps", path.display())));
        }
        Ok(table)
    }
}

/// Directory of persisted [`NullTable`]s keyed by statistic, `n`, `d`,
/// `reps` and seed.
#[derive(Debug, Clone)]
pub struct NullCache {
    dir: PathBuf,
}

impl NullCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, stat: &Statistic, n: usize, d: usize, reps: usize, seed: u64) -> PathBuf {
        let label: String = stat
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
            .collect();
        self.dir
            .join(format!("{label}_n{n}_d{d}_r{reps}_s{seed}_{RNG_ALGORITHM}.json"))
    }

    fn lookup(&self, stat: &Statistic, n: usize, d: usize, reps: usize, seed: u64) -> Option<NullTable> {
        let table = NullTable::load(&self.path_for(stat, n, d, reps, seed)).ok()?;
        let matches = table.statistic == *stat
            && table.n == n
            && table.d == d
            && table.seed == seed
            && table.algorithm == RNG_ALGORITHM;
        matches.then_some(table)
    }

    fn store(&self, table: &NullTable) -> Result<()> {
        table.save(&self.path_for(&table.statistic, table.n, table.d, table.reps, table.seed))
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::BadRequest(format!("need at least {MIN_REPS} replications, got {reps}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadRequest(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Evaluates every statistic on `reps` samples from `sampler`. Returns one
/// vector per statistic in replication order. The lowest-index failure is
/// reported, together with how many replications failed.
fn simulate(
    sampler: &Sampler,
    n: usize,
    reps: usize,
    task_seed: u64,
    evaluators: &[Evaluator],
) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Result<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let wrap = |e: Error| Error::DegenerateReplication {
                replication: r as u64,
                source: Box::new(e),
            };
            let x = sampler.sample(n, SeededStream::new(task_seed, r as u64))?;
            let res = scaled_residuals(&x).map_err(wrap)?;
            evaluators.iter().map(|e| e.evaluate(&res).map_err(wrap)).collect()
        })
        .collect();

    let mut out = vec![Vec::with_capacity(reps); evaluators.len()];
    let mut first_error = None;
    let mut failures = 0usize;
    for row in rows {
        match row {
            Ok(vals) => {
                for (col, v) in out.iter_mut().zip(vals) {
                    col.push(v);
                }
            }
            Err(e) => {
                failures += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        None => Ok(out),
        Some(Error::DegenerateReplication { replication, source }) if failures > 1 => {
            Err(Error::DegenerateReplication {
                replication,
                source: Box::new(Error::InvalidData(format!("{source} ({failures} of {reps} replications failed)"))),
            })
        }
        Some(e) => Err(e),
    }
}

fn null_task_seed(seed: u64, n: usize, d: usize) -> u64 {
    derive_seed(seed, &format!("null:n={n}:d={d}"))
}

/// Null tables for several statistics on shared `N_d(0, I)` samples. Tables
/// present in `cache` are loaded; the others are simulated together and
/// stored.
pub fn null_tables(
    stats: &[Statistic],
    n: usize,
    d: usize,
    reps: usize,
    seed: u64,
    cache: Option<&NullCache>,
) -> Result<Vec<NullTable>> {
    check_reps(reps)?;
    let mut found: Vec<Option<NullTable>> = stats
        .iter()
        .map(|s| cache.and_then(|c| c.lookup(s, n, d, reps, seed)))
        .collect();
    let missing: Vec<usize> = (0..stats.len()).filter(|i| found[*i].is_none()).collect();
    if !missing.is_empty() {
        let evaluators = missing
            .iter()
            .map(|i| stats[*i].evaluator(d))
            .collect::<Result<Vec<_>>>()?;
        let sampler = Sampler::new(&AlternativeSpec::std_normal(d))?;
        let columns = simulate(&sampler, n, reps, null_task_seed(seed, n, d), &evaluators)?;
        for (i, values) in missing.into_iter().zip(columns) {
            let table = NullTable::new(stats[i], n, d, seed, values);
            if let Some(c) = cache {
                c.store(&table)?;
            }
            found[i] = Some(table);
        }
    }
    Ok(found.into_iter().map(|t| t.expect("every table filled")).collect())
}

pub fn null_table(
    stat: &Statistic,
    n: usize,
    d: usize,
    reps: usize,
    seed: u64,
    cache: Option<&NullCache>,
) -> Result<NullTable> {
    Ok(null_tables(std::slice::from_ref(stat), n, d, reps, seed, cache)?.remove(0))
}

pub fn estimate_critical_value(
    stat: &Statistic,
    n: usize,
    d: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<MCResult> {
    check_alpha(alpha)?;
    Ok(null_table(stat, n, d, reps, seed, None)?.critical_value(alpha))
}

pub fn mc_p_value(stat: &Statistic, observed: f64, n: usize, d: usize, reps: usize, seed: u64) -> Result<MCResult> {
    if observed.is_nan() {
        return Err(Error::BadRequest("observed statistic is NaN".into()));
    }
    Ok(null_table(stat, n, d, reps, seed, None)?.p_value(observed))
}

/// Seed used for critical values computed on behalf of a power run, kept
/// apart from the alternative samples.
pub fn critical_value_seed(seed: u64) -> u64 {
    derive_seed(seed, "critical-values")
}

fn power_result(stat: Statistic, alt: &AlternativeSpec, n: usize, alpha: f64, seed: u64, cv: f64, values: &[f64]) -> MCResult {
    let reps = values.len();
    let p = values.iter().filter(|v| **v > cv).count() as f64 / reps as f64;
    MCResult {
        kind: MCKind::Power,
        statistic: stat,
        n,
        d: alt.d,
        alpha: Some(alpha),
        reps,
        seed,
        value: p,
        std_error: (p * (1.0 - p) / reps as f64).sqrt(),
        alternative: Some(*alt),
        critical_value: Some(cv),
    }
}

/// Rejection rates of several statistics on shared samples from `alt`, each
/// against its own critical value.
pub fn estimate_powers(
    stats: &[(Statistic, f64)],
    alt: &AlternativeSpec,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<MCResult>> {
    check_alpha(alpha)?;
    check_reps(reps)?;
    let evaluators = stats
        .iter()
        .map(|(s, _)| s.evaluator(alt.d))
        .collect::<Result<Vec<_>>>()?;
    let sampler = Sampler::new(alt)?;
    let task_seed = derive_seed(seed, &format!("alt:{alt}:n={n}"));
    let columns = simulate(&sampler, n, reps, task_seed, &evaluators)?;
    Ok(stats
        .iter()
        .zip(columns)
        .map(|((s, cv), values)| power_result(*s, alt, n, alpha, seed, *cv, &values))
        .collect())
}

/// Power of `stat` against `alt`. Without a critical value one is estimated
/// from [`CRITICAL_REPS_FACTOR`]` * reps` null samples on an independent
/// stream.
pub fn estimate_power(
    stat: &Statistic,
    alt: &AlternativeSpec,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    critical_value: Option<f64>,
) -> Result<MCResult> {
    check_alpha(alpha)?;
    let cv = match critical_value {
        Some(cv) => cv,
        None => {
            estimate_critical_value(stat, n, alt.d, alpha, reps * CRITICAL_REPS_FACTOR, critical_value_seed(seed))?
                .value
        }
    };
    Ok(estimate_powers(&[(*stat, cv)], alt, n, alpha, reps, seed)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n: usize,
    /// Average of the unscaled `T_{n,gamma} / n`.
    pub mean: f64,
    pub std_error: f64,
}

/// Average `T_{n,gamma} / n` under `alt` along `n_grid`. Only laws whose
/// moment generating function is finite near the origin are accepted.
pub fn consistency_curve(
    alt: &AlternativeSpec,
    gamma: f64,
    n_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<ConsistencyPoint>> {
    if !alt.has_local_mgf() {
        return Err(Error::MgfNotFinite(alt.to_string()));
    }
    if reps < 2 {
        return Err(Error::BadRequest("need at least two replications".into()));
    }
    let sampler = Sampler::new(alt)?;
    n_grid
        .iter()
        .map(|&n| {
            let task_seed = derive_seed(seed, &format!("consistency:{alt}:n={n}"));
            let values: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let x = sampler.sample(n, SeededStream::new(task_seed, r as u64))?;
                    let res: ResidualSet = scaled_residuals(&x)?;
                    Ok(t_family(&res, Gamma::Finite(gamma), GammaPolicy::AllowSmall)?.raw / n as f64)
                })
                .collect::<Result<_>>()?;
            let mean = values.iter().sum::<f64>() / reps as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            Ok(ConsistencyPoint {
                n,
                mean,
                std_error: (var / reps as f64).sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(values: Vec<f64>) -> NullTable {
        NullTable::new(Statistic::Energy, 10, 1, 0, values)
    }

    #[test]
    fn quantile_convention() {
        let t = toy((1..=100).map(f64::from).collect());
        assert_eq!(t.quantile(0.05), 95.0);
        assert_eq!(t.quantile(0.5), 50.0);
        let t = toy((1..=101).map(f64::from).collect());
        assert_eq!(t.quantile(0.5), 51.0);
    }

    #[test]
    fn p_value_extremes() {
        let t = toy((0..200).map(|i| f64::from(i) - 100.0).collect());
        assert_eq!(t.p_value(-1e300).value, 1.0);
        assert_eq!(t.p_value(1e300).value, 1.0 / 201.0);
        assert_eq!(t.p_value(99.0).value, 2.0 / 201.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let s = Statistic::t(Gamma::Finite(5.0));
        assert!(matches!(null_table(&s, 10, 1, 50, 1, None), Err(Error::BadRequest(_))));
        assert!(matches!(estimate_critical_value(&s, 10, 1, 1.0, 100, 1), Err(Error::BadRequest(_))));
        let t3: AlternativeSpec = "t:nu=3".parse().unwrap();
        assert!(matches!(consistency_curve(&t3, 4.0, &[20], 10, 1), Err(Error::MgfNotFinite(_))));
    }

    #[test]
    fn shared_simulation_matches_single() {
        let a = Statistic::t(Gamma::Finite(5.0));
        let b = Statistic::MardiaSkewness;
        let both = null_tables(&[a, b], 15, 2, 120, 3, None).unwrap();
        let single = null_table(&b, 15, 2, 120, 3, None).unwrap();
        assert_eq!(both[1], single);
    }
}
