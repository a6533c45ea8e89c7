use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mgfnorm::montecarlo::{critical_value_seed, estimate_powers, null_tables, CRITICAL_REPS_FACTOR};
use mgfnorm::sampling::RNG_ALGORITHM;
use mgfnorm::tables::reproduce_table;
use mgfnorm::{
    io as csvio, scaled_residuals, AlternativeSpec, Error, Gamma, GammaPolicy, NullCache, Statistic, Subset,
    TableId, TableReport,
};

const DEFAULT_GAMMAS: &str = "2.5,3,4,5,7,10,inf";
const LIMIT_NOTE: &str = "gamma=inf gives the limit statistic 2*b1 + b~1; the reference critical-value grid lists 100x this value";

#[derive(Parser)]
#[command(name = "mgfnorm", version, about = "Moment generating function tests of multivariate normality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo replications (defaults depend on the command).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for persisted null distributions.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct Battery {
    /// Statistics, e.g. T,HZ,EN,HM,HJ,MS,MK,Z3. `T` expands over --gamma.
    #[arg(long, value_delimiter = ',')]
    stat: Vec<String>,
    /// Values of gamma for `T`; `inf` selects the limit statistic.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<String>,
    /// Accept 0 < gamma <= 2 for `T`.
    #[arg(long)]
    allow_small_gamma: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Test a data set (CSV, one observation per row) for normality.
    Test {
        input: PathBuf,
        #[command(flatten)]
        battery: Battery,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate null critical values.
    Critvals {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        battery: Battery,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate power against an alternative such as `nmix1:d=2`.
    Power {
        #[arg(long)]
        alt: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Optional check against the dimension of --alt.
        #[arg(long)]
        d: Option<usize>,
        #[command(flatten)]
        battery: Battery,
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce a reference table (T2..T6) and report deviations.
    Tables {
        table: String,
        /// Filter such as `n=20,d=1` or `stat=T10|Tinf`; an empty string selects nothing.
        #[arg(long)]
        subset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_path: Option<String>,
    gamma_list: Vec<String>,
    alpha: f64,
    reps: usize,
    seed: u64,
    statistics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alternative: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<String>,
    allow_small_gamma: bool,
    format: Format,
}

#[derive(Serialize, Default)]
struct ResultRow {
    statistic: String,
    gamma: Option<String>,
    value: f64,
    scaled: Option<f64>,
    p_value: Option<f64>,
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reject: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

#[derive(Serialize)]
struct Provenance {
    software: &'static str,
    version: &'static str,
    algorithm: &'static str,
    seed: u64,
    reps: usize,
    timestamp: u64,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    command: &'static str,
    config: RunConfig,
    results: T,
    provenance: Provenance,
}

fn provenance(seed: u64, reps: usize) -> Provenance {
    Provenance {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        algorithm: RNG_ALGORITHM,
        seed,
        reps,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    }
}

/// Resolves the battery into statistics; `T` expands over the gamma list.
fn resolve(battery: &Battery) -> Result<(Vec<Statistic>, Vec<String>)> {
    let policy = if battery.allow_small_gamma {
        GammaPolicy::AllowSmall
    } else {
        GammaPolicy::Strict
    };
    let gamma_text = if battery.gamma.is_empty() {
        DEFAULT_GAMMAS.split(',').map(String::from).collect()
    } else {
        battery.gamma.clone()
    };
    let gammas = gamma_text
        .iter()
        .map(|g| g.parse::<Gamma>())
        .collect::<mgfnorm::Result<Vec<_>>>()?;
    let labels = if battery.stat.is_empty() {
        vec!["T".to_string()]
    } else {
        battery.stat.clone()
    };
    let mut stats = Vec::new();
    for label in &labels {
        if label.eq_ignore_ascii_case("t") {
            stats.extend(gammas.iter().map(|g| Statistic::T { gamma: *g, policy }));
        } else {
            let mut s: Statistic = label.parse()?;
            if let Statistic::T { policy: p, .. } = &mut s {
                *p = policy;
            }
            stats.push(s);
        }
    }
    Ok((stats, gamma_text))
}

fn gamma_of(stat: &Statistic) -> Option<String> {
    match stat {
        Statistic::T { gamma, .. } => Some(gamma.to_string()),
        _ => None,
    }
}

fn statistic_label(stat: &Statistic) -> String {
    match stat {
        Statistic::T { .. } => "T".to_string(),
        other => other.to_string(),
    }
}

fn limit_note(stat: &Statistic) -> Option<&'static str> {
    matches!(stat, Statistic::T { gamma: Gamma::Infinity, .. }).then_some(LIMIT_NOTE)
}

fn cache(common: &Common) -> Option<NullCache> {
    common.cache_dir.as_ref().map(NullCache::new)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadRequest(format!("alpha must lie in (0, 1), got {alpha}")).into())
    }
}

fn cmd_test(input: &Path, battery: &Battery, common: &Common) -> Result<()> {
    check_alpha(common.alpha)?;
    let reps = common.reps.unwrap_or(10_000);
    let (stats, gamma_list) = resolve(battery)?;
    let data = csvio::read_csv(input)?;
    let res = scaled_residuals(&data)?;
    let (n, d) = (data.n(), data.d());

    let mut observed = Vec::with_capacity(stats.len());
    for s in &stats {
        let raw_and_scaled = match s {
            Statistic::T { gamma, policy } => {
                let r = mgfnorm::statistic::t_family(&res, *gamma, *policy)?;
                (r.raw, r.scaled)
            }
            other => {
                let v = other.evaluate(&res)?;
                (v, v)
            }
        };
        observed.push(raw_and_scaled);
    }
    let nulls = null_tables(&stats, n, d, reps, common.seed, cache(common).as_ref())?;
    let results: Vec<ResultRow> = stats
        .iter()
        .zip(&observed)
        .zip(&nulls)
        .map(|((s, (raw, scaled)), null)| {
            let p = null.p_value(*scaled);
            ResultRow {
                statistic: statistic_label(s),
                gamma: gamma_of(s),
                value: *raw,
                scaled: Some(*scaled),
                p_value: Some(p.value),
                std_error: Some(p.std_error),
                reject: Some(p.value < common.alpha),
                note: limit_note(s),
                ..Default::default()
            }
        })
        .collect();
    let config = RunConfig {
        command: "test",
        input_path: Some(input.display().to_string()),
        gamma_list,
        alpha: common.alpha,
        reps,
        seed: common.seed,
        statistics: stats.iter().map(ToString::to_string).collect(),
        alternative: None,
        n: Some(n),
        d: Some(d),
        table: None,
        subset: None,
        allow_small_gamma: battery.allow_small_gamma,
        format: common.format,
    };
    emit(common, "test", config, results)
}

fn cmd_critvals(n: usize, d: usize, battery: &Battery, common: &Common) -> Result<()> {
    check_alpha(common.alpha)?;
    let reps = common.reps.unwrap_or(100_000);
    let (stats, gamma_list) = resolve(battery)?;
    let nulls = null_tables(&stats, n, d, reps, common.seed, cache(common).as_ref())?;
    let results: Vec<ResultRow> = stats
        .iter()
        .zip(&nulls)
        .map(|(s, null)| {
            let cv = null.critical_value(common.alpha);
            ResultRow {
                statistic: statistic_label(s),
                gamma: gamma_of(s),
                value: cv.value,
                std_error: Some(cv.std_error),
                critical_value: Some(cv.value),
                note: limit_note(s),
                ..Default::default()
            }
        })
        .collect();
    let config = RunConfig {
        command: "critvals",
        input_path: None,
        gamma_list,
        alpha: common.alpha,
        reps,
        seed: common.seed,
        statistics: stats.iter().map(ToString::to_string).collect(),
        alternative: None,
        n: Some(n),
        d: Some(d),
        table: None,
        subset: None,
        allow_small_gamma: battery.allow_small_gamma,
        format: common.format,
    };
    emit(common, "critvals", config, results)
}

fn cmd_power(alt: &str, n: usize, d: Option<usize>, battery: &Battery, common: &Common) -> Result<()> {
    check_alpha(common.alpha)?;
    let reps = common.reps.unwrap_or(10_000);
    let alt: AlternativeSpec = alt.parse()?;
    if let Some(d) = d {
        if d != alt.d {
            return Err(Error::BadRequest(format!("--d {d} does not match the dimension of {alt}")).into());
        }
    }
    let (stats, gamma_list) = resolve(battery)?;
    let cv_reps = reps * CRITICAL_REPS_FACTOR;
    let nulls = null_tables(&stats, n, alt.d, cv_reps, critical_value_seed(common.seed), cache(common).as_ref())?;
    let with_cv: Vec<(Statistic, f64)> = stats.iter().zip(&nulls).map(|(s, t)| (*s, t.quantile(common.alpha))).collect();
    let powers = estimate_powers(&with_cv, &alt, n, common.alpha, reps, common.seed)?;
    let results: Vec<ResultRow> = powers
        .iter()
        .map(|p| ResultRow {
            statistic: statistic_label(&p.statistic),
            gamma: gamma_of(&p.statistic),
            value: p.value,
            std_error: Some(p.std_error),
            critical_value: p.critical_value,
            note: limit_note(&p.statistic),
            ..Default::default()
        })
        .collect();
    let config = RunConfig {
        command: "power",
        input_path: None,
        gamma_list,
        alpha: common.alpha,
        reps,
        seed: common.seed,
        statistics: stats.iter().map(ToString::to_string).collect(),
        alternative: Some(alt.to_string()),
        n: Some(n),
        d: Some(alt.d),
        table: None,
        subset: None,
        allow_small_gamma: battery.allow_small_gamma,
        format: common.format,
    };
    emit(common, "power", config, results)
}

fn cmd_tables(table: &str, subset: Option<&str>, common: &Common) -> Result<()> {
    let id: TableId = table.parse()?;
    let reps = common.reps.unwrap_or(if id == TableId::T2 { 100_000 } else { 10_000 });
    let filter = match subset {
        Some(s) => s.parse()?,
        None => Subset::all(),
    };
    let report = reproduce_table(id, reps, common.seed, &filter, cache(common).as_ref())?;
    let config = RunConfig {
        command: "tables",
        input_path: None,
        gamma_list: Vec::new(),
        alpha: report.alpha,
        reps,
        seed: common.seed,
        statistics: Vec::new(),
        alternative: None,
        n: None,
        d: None,
        table: Some(id.to_string()),
        subset: subset.map(String::from),
        allow_small_gamma: false,
        format: common.format,
    };
    match common.format {
        Format::Json => write_json(common, "tables", config, &report.entries),
        Format::Csv => with_output(common, |w| Ok(report.write_csv(w)?)),
        Format::Text => with_output(common, |w| write_table_text(w, &report)),
    }
}

fn with_output(common: &Common, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &common.out {
        Some(path) => {
            let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(common: &Common, command: &'static str, config: RunConfig, results: T) -> Result<()> {
    let report = Report {
        command,
        provenance: provenance(config.seed, config.reps),
        config,
        results,
    };
    with_output(common, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn emit(common: &Common, command: &'static str, config: RunConfig, results: Vec<ResultRow>) -> Result<()> {
    match common.format {
        Format::Json => write_json(common, command, config, results),
        Format::Csv => with_output(common, |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["statistic", "gamma", "value", "scaled", "p_value", "std_error", "critical_value"])?;
            for r in &results {
                out.write_record([
                    r.statistic.clone(),
                    r.gamma.clone().unwrap_or_default(),
                    r.value.to_string(),
                    fmt_opt(r.scaled),
                    fmt_opt(r.p_value),
                    fmt_opt(r.std_error),
                    fmt_opt(r.critical_value),
                ])?;
            }
            out.flush()?;
            Ok(())
        }),
        Format::Text => with_output(common, |w| {
            writeln!(
                w,
                "{command}: reps={} seed={} alpha={}",
                config.reps, config.seed, config.alpha
            )?;
            writeln!(w, "{:<10} {:>6} {:>16} {:>16} {:>10} {:>10}", "stat", "gamma", "value", "scaled", "p", "se")?;
            for r in &results {
                writeln!(
                    w,
                    "{:<10} {:>6} {:>16.6} {:>16} {:>10} {:>10}",
                    r.statistic,
                    r.gamma.as_deref().unwrap_or("-"),
                    r.value,
                    r.scaled.map_or("-".into(), |v| format!("{v:.4}")),
                    r.p_value.map_or("-".into(), |v| format!("{v:.4}")),
                    r.std_error.map_or("-".into(), |v| format!("{v:.4}")),
                )?;
            }
            if results.iter().any(|r| r.note.is_some()) {
                writeln!(w, "note: {LIMIT_NOTE}")?;
            }
            Ok(())
        }),
    }
}

fn write_table_text(w: &mut dyn Write, report: &TableReport) -> Result<()> {
    writeln!(w, "{}: reps={} seed={}", report.table, report.reps, report.seed)?;
    writeln!(
        w,
        "{:<26} {:<7} {:>10} {:>10} {:>9} {:>6}",
        "row", "column", "reference", "ours", "dev", "ok"
    )?;
    for e in &report.entries {
        writeln!(
            w,
            "{:<26} {:<7} {:>10.2} {:>10} {:>9} {:>6}",
            e.row,
            e.column,
            e.reference,
            e.reproduced.map_or("-".into(), |v| format!("{v:.4}")),
            e.deviation.map_or("-".into(), |v| format!("{v:+.4}")),
            match e.within_tolerance {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "n/a",
            }
        )?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::InvalidData(_)) => 2,
        Some(Error::SingularCovariance { .. }) => 3,
        Some(Error::Io(_) | Error::Json(_) | Error::DegenerateReplication { .. }) | None => 1,
        Some(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test { input, battery, common } => cmd_test(input, battery, common),
        Command::Critvals { n, d, battery, common } => cmd_critvals(*n, *d, battery, common),
        Command::Power {
            alt,
            n,
            d,
            battery,
            common,
        } => cmd_power(alt, *n, *d, battery, common),
        Command::Tables { table, subset, common } => cmd_tables(table, subset.as_deref(), common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
