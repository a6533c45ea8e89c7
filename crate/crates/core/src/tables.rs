//! Reference grids for the critical-value table (T2) and the four power
//! tables (T3 to T6), and a driver that reproduces any part of them by
//! simulation and reports the deviations.
//!
//! T2 holds 95% quantiles of `c(gamma, d) T_{n,gamma}`; its `inf` column is
//! the limit statistic multiplied by 100. The power tables hold rejection
//! percentages at `n = 50`, `alpha = 0.05`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::battery::Statistic;
use crate::error::{Error, Result};
use crate::montecarlo::{critical_value_seed, estimate_powers, null_tables, NullCache, CRITICAL_REPS_FACTOR};
use crate::sampling::AlternativeSpec;
use crate::statistic::Gamma;

pub const ALPHA: f64 = 0.05;
pub const POWER_N: usize = 50;
pub const MIN_TABLE_REPS: usize = 1000;
/// The O(n^4) statistic runs with this many times fewer replications.
pub const HM_REPS_DIVISOR: usize = 10;

pub const T2_N: [usize; 5] = [20, 50, 100, 200, 300];
pub const T2_D: [usize; 4] = [1, 2, 3, 5];
pub const T2_GAMMA: [Gamma; 7] = [
    Gamma::Finite(2.5),
    Gamma::Finite(3.0),
    Gamma::Finite(4.0),
    Gamma::Finite(5.0),
    Gamma::Finite(7.0),
    Gamma::Finite(10.0),
    Gamma::Infinity,
];
/// Factor applied to the `inf` column of T2.
pub const LIMIT_COLUMN_SCALE: f64 = 100.0;

#[rustfmt::skip]
const T2_VALUES: [[[f64; 7]; 5]; 4] = [
    [
        [120.42, 105.16, 88.41, 79.48, 70.66, 64.74, 265.14],
        [219.25, 173.63, 130.90, 111.24, 93.12, 82.02, 125.20],
        [294.01, 218.62, 154.20, 126.76, 102.94, 89.04, 66.13],
        [361.62, 254.88, 170.48, 136.65, 108.60, 92.88, 33.89],
        [395.67, 271.05, 176.56, 140.20, 110.50, 94.19, 22.79],
    ],
    [
        [535.50, 413.65, 300.96, 249.60, 203.09, 174.73, 628.97],
        [1086.28, 737.69, 464.16, 356.56, 268.57, 220.27, 291.96],
        [1516.50, 947.61, 546.91, 402.84, 292.63, 235.24, 152.02],
        [1867.44, 1089.76, 585.61, 419.94, 299.04, 238.36, 77.02],
        [2035.48, 1141.98, 595.36, 422.25, 299.14, 238.42, 51.52],
    ],
    [
        [1460.39, 1044.12, 695.34, 549.27, 423.00, 350.28, 1157.20],
        [3444.99, 2095.29, 1162.22, 831.36, 580.61, 451.38, 537.68],
        [5054.15, 2781.23, 1384.12, 941.78, 628.33, 477.34, 278.23],
        [6463.29, 3267.95, 1495.75, 980.63, 638.18, 481.29, 140.44],
        [7108.14, 3439.05, 1508.96, 977.42, 633.30, 478.42, 93.78],
    ],
    [
        [6346.44, 4065.35, 2389.07, 1759.71, 1257.17, 986.77, 2903.55],
        [20164.36, 10268.49, 4655.52, 2988.80, 1862.85, 1340.01, 1361.04],
        [34187.51, 15193.42, 5934.77, 3545.86, 2070.71, 1439.25, 705.30],
        [47436.90, 18844.25, 6578.37, 3746.81, 2114.14, 1450.44, 355.91],
        [54128.44, 20321.98, 6715.41, 3749.27, 2091.10, 1436.11, 237.36],
    ],
];

/// Tabulated 95% critical value for T2, if `(n, d, gamma)` is on the grid.
pub fn t2_value(n: usize, d: usize, gamma: Gamma) -> Option<f64> {
    let i = T2_D.iter().position(|v| *v == d)?;
    let j = T2_N.iter().position(|v| *v == n)?;
    let k = T2_GAMMA.iter().position(|v| *v == gamma)?;
    Some(T2_VALUES[i][j][k])
}

const T3_COLUMNS: [&str; 10] = ["CvM", "AD", "SW", "JB", "Z3", "Z15", "T2.5", "T5", "T10", "Tinf"];
const MULTI_COLUMNS: [&str; 10] = ["MS", "MK", "HZ", "EN", "HM", "HJ", "T2.5", "T5", "T10", "Tinf"];

#[rustfmt::skip]
const T3_ROWS: [(&str, &str, [u8; 10]); 17] = [
    ("N(0,1)", "normal:d=1", [5, 5, 5, 5, 5, 5, 5, 5, 5, 5]),
    ("NMIX1", "nmix1:d=1", [18, 20, 21, 28, 24, 20, 24, 23, 21, 18]),
    ("NMIX2", "nmix2:d=1", [19, 22, 28, 37, 34, 28, 34, 32, 30, 26]),
    ("t(3)", "t:nu=3,d=1", [58, 61, 63, 69, 65, 57, 65, 63, 60, 52]),
    ("t(5)", "t:nu=5,d=1", [28, 31, 37, 44, 41, 35, 41, 39, 37, 32]),
    ("t(10)", "t:nu=10,d=1", [12, 13, 16, 21, 20, 17, 20, 20, 19, 17]),
    ("LN(0,1/2)", "lognormal:mu=0,sigma=0.5,d=1", [83, 87, 93, 85, 80, 89, 76, 85, 88, 91]),
    ("LN(0,1/4)", "lognormal:mu=0,sigma=0.25,d=1", [31, 35, 44, 39, 37, 45, 34, 40, 44, 47]),
    ("chi2(5)", "chisq:k=5,d=1", [74, 81, 89, 75, 69, 82, 62, 74, 80, 83]),
    ("chi2(15)", "chisq:k=15,d=1", [30, 34, 43, 36, 34, 43, 31, 38, 41, 45]),
    ("Logistic(0,1)", "logistic:d=1", [14, 16, 19, 26, 24, 20, 24, 23, 21, 19]),
    ("Weibull(10)", "weibull:k=10,d=1", [25, 28, 34, 30, 28, 36, 25, 31, 35, 37]),
    ("Weibull(20)", "weibull:k=20,d=1", [39, 44, 53, 46, 44, 53, 40, 48, 52, 55]),
    ("PVII(5)", "pearson7:df=5,d=1", [27, 30, 36, 43, 40, 35, 41, 39, 37, 32]),
    ("PVII(10)", "pearson7:df=10,d=1", [10, 12, 16, 21, 20, 17, 20, 19, 18, 16]),
    ("SN(3)", "skewnormal:lambda=3,d=1", [31, 34, 40, 32, 30, 39, 25, 33, 37, 41]),
    ("SN(5)", "skewnormal:lambda=5,d=1", [53, 59, 67, 49, 43, 58, 36, 49, 55, 61]),
];

/// Row labels and alternatives shared by the multivariate tables; `{d}` is
/// substituted with the table's dimension.
const MULTI_ROWS: [(&str, &str); 17] = [
    ("N(0,I)", "normal:d={d}"),
    ("NMIX1", "nmix1:d={d}"),
    ("NMIX2", "nmix2:d={d}"),
    ("t5(0,I)", "mvt:nu=5,d={d}"),
    ("t10(0,I)", "mvt:nu=10,d={d}"),
    ("chi2(15)^d", "chisq:k=15,d={d},iid"),
    ("chi2(20)^d", "chisq:k=20,d={d},iid"),
    ("Logistic(0,1)^d", "logistic:d={d},iid"),
    ("Gamma(5,1)^d", "gamma:shape=5,rate=1,d={d},iid"),
    ("Gamma(4,2)^d", "gamma:shape=4,rate=2,d={d},iid"),
    ("PVII(10)^d", "pearson7:df=10,d={d},iid"),
    ("PVII(20)^d", "pearson7:df=20,d={d},iid"),
    ("N(0,1)^(d-1) x t(3)", "t:nu=3,d={d},one"),
    ("N(0,1)^(d-1) x chi2(5)", "chisq:k=5,d={d},one"),
    ("N(0,1)^(d-1) x chi2(10)", "chisq:k=10,d={d},one"),
    ("S^d(LN(0,1/2))", "sphlognormal:mu=0,sigma=0.5,d={d}"),
    ("NM_d(rho=0.2)", "nmrho:rho=0.2,d={d}"),
];

#[rustfmt::skip]
const T4_VALUES: [[u8; 10]; 17] = [
    [5, 5, 5, 5, 5, 5, 5, 5, 5, 5],
    [85, 34, 75, 82, 57, 73, 48, 69, 80, 86],
    [44, 48, 29, 38, 57, 53, 55, 54, 52, 44],
    [53, 62, 42, 51, 67, 60, 60, 60, 58, 53],
    [24, 26, 14, 19, 32, 29, 29, 29, 28, 25],
    [49, 19, 34, 42, 26, 41, 30, 39, 45, 52],
    [40, 16, 27, 33, 24, 34, 25, 32, 37, 42],
    [24, 27, 15, 19, 33, 28, 28, 29, 28, 25],
    [67, 27, 52, 61, 38, 57, 41, 54, 62, 70],
    [76, 32, 64, 72, 42, 66, 48, 62, 71, 78],
    [20, 21, 11, 14, 27, 23, 24, 24, 23, 20],
    [11, 10, 7, 8, 14, 12, 13, 13, 12, 12],
    [47, 52, 42, 49, 61, 55, 56, 56, 54, 47],
    [63, 25, 52, 60, 36, 52, 39, 49, 57, 65],
    [38, 15, 26, 32, 21, 32, 24, 30, 35, 40],
    [26, 25, 15, 21, 29, 30, 31, 31, 29, 26],
    [6, 6, 5, 6, 6, 6, 6, 6, 6, 6],
];

#[rustfmt::skip]
const T5_VALUES: [[u8; 10]; 17] = [
    [5, 5, 5, 5, 5, 5, 5, 5, 5, 5],
    [89, 36, 81, 91, 59, 72, 43, 66, 82, 91],
    [71, 76, 49, 66, 79, 79, 79, 80, 78, 72],
    [68, 78, 55, 68, 77, 73, 71, 73, 73, 69],
    [34, 38, 18, 27, 35, 38, 36, 38, 38, 34],
    [52, 21, 35, 49, 27, 42, 31, 39, 47, 55],
    [40, 16, 26, 37, 21, 33, 24, 30, 36, 44],
    [28, 30, 15, 22, 33, 31, 30, 31, 31, 28],
    [72, 30, 53, 69, 39, 58, 41, 53, 65, 75],
    [80, 36, 65, 79, 46, 66, 47, 61, 73, 83],
    [22, 22, 10, 16, 24, 25, 25, 26, 25, 23],
    [12, 10, 6, 8, 14, 13, 13, 13, 13, 12],
    [42, 43, 29, 40, 54, 48, 49, 49, 48, 43],
    [47, 18, 33, 46, 28, 39, 29, 36, 43, 51],
    [26, 12, 17, 24, 16, 22, 17, 21, 24, 28],
    [53, 58, 18, 43, 62, 58, 57, 58, 58, 54],
    [8, 7, 5, 6, 7, 8, 8, 8, 8, 8],
];

#[rustfmt::skip]
const T6_VALUES: [[u8; 10]; 17] = [
    [5, 5, 5, 5, 5, 5, 5, 5, 5, 5],
    [82, 33, 74, 94, 43, 58, 34, 51, 68, 86],
    [94, 94, 68, 89, 95, 95, 95, 96, 95, 94],
    [88, 94, 72, 88, 89, 90, 86, 89, 90, 89],
    [54, 58, 23, 45, 51, 55, 51, 55, 57, 55],
    [51, 22, 30, 52, 26, 39, 29, 36, 44, 56],
    [39, 16, 22, 39, 20, 30, 23, 28, 33, 42],
    [33, 34, 13, 25, 31, 34, 31, 34, 36, 33],
    [72, 33, 49, 74, 37, 55, 40, 51, 63, 76],
    [81, 40, 60, 84, 40, 64, 47, 59, 72, 85],
    [27, 25, 9, 19, 26, 28, 26, 28, 29, 27],
    [12, 9, 6, 9, 12, 12, 11, 12, 12, 12],
    [35, 32, 16, 30, 42, 39, 38, 39, 39, 35],
    [28, 13, 16, 28, 19, 23, 19, 22, 25, 31],
    [16, 8, 10, 15, 13, 14, 12, 13, 15, 18],
    [89, 95, 77, 90, 90, 90, 86, 90, 91, 89],
    [12, 9, 5, 11, 12, 13, 12, 13, 13, 12],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl TableId {
    /// Dimension of a power table.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            TableId::T2 => None,
            TableId::T3 => Some(1),
            TableId::T4 => Some(2),
            TableId::T5 => Some(3),
            TableId::T6 => Some(5),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T2" => Ok(TableId::T2),
            "T3" => Ok(TableId::T3),
            "T4" => Ok(TableId::T4),
            "T5" => Ok(TableId::T5),
            "T6" => Ok(TableId::T6),
            _ => Err(Error::BadRequest(format!("unknown table '{s}' (expected T2..T6)"))),
        }
    }
}

/// One cell of a power table.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCell {
    pub row: &'static str,
    pub column: &'static str,
    pub alternative: AlternativeSpec,
    /// `None` for the classical univariate tests, which are not implemented.
    pub statistic: Option<Statistic>,
    /// Rejection rate as a fraction.
    pub reference: f64,
}

pub fn power_cells(table: TableId) -> Vec<PowerCell> {
    let Some(d) = table.dimension() else {
        return Vec::new();
    };
    let (columns, rows): (&[&str; 10], Vec<(&'static str, String, [u8; 10])>) = match table {
        TableId::T3 => (
            &T3_COLUMNS,
            T3_ROWS.iter().map(|(l, a, v)| (*l, a.to_string(), *v)).collect(),
        ),
        _ => {
            let values = match table {
                TableId::T4 => &T4_VALUES,
                TableId::T5 => &T5_VALUES,
                _ => &T6_VALUES,
            };
            let rows = MULTI_ROWS
                .iter()
                .zip(values)
                .map(|((l, a), v)| (*l, a.replace("{d}", &d.to_string()), *v))
                .collect();
            (&MULTI_COLUMNS, rows)
        }
    };
    let mut cells = Vec::with_capacity(rows.len() * columns.len());
    for (row, alt, values) in rows {
        let alternative: AlternativeSpec = alt.parse().expect("embedded alternatives are valid");
        for (column, v) in columns.iter().zip(values) {
            cells.push(PowerCell {
                row,
                column,
                alternative,
                statistic: column.parse().ok(),
                reference: f64::from(v) / 100.0,
            });
        }
    }
    cells
}

/// Row/column filter for [`reproduce_table`]. Text form: comma separated
/// `key=value` clauses, alternatives for one key separated by `|`. Keys are
/// `n`, `d`, `gamma` (T2), `stat` (column label) and `row`. An empty string
/// selects nothing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Subset {
    clauses: Vec<(SubsetKey, Vec<String>)>,
    nothing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SubsetKey {
    N,
    D,
    Gamma,
    Stat,
    Row,
}

impl Subset {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn nothing() -> Self {
        Self {
            clauses: Vec::new(),
            nothing: true,
        }
    }

    fn values(&self, key: SubsetKey) -> impl Iterator<Item = &str> {
        self.clauses
            .iter()
            .filter(move |(k, _)| *k == key)
            .flat_map(|(_, v)| v.iter().map(String::as_str))
    }

    fn accepts(&self, key: SubsetKey, matches: impl Fn(&str) -> bool) -> bool {
        let mut any = false;
        for v in self.values(key) {
            any = true;
            if matches(v) {
                return true;
            }
        }
        !any
    }

    fn accepts_usize(&self, key: SubsetKey, value: usize) -> bool {
        self.accepts(key, |v| v.parse::<usize>().ok() == Some(value))
    }

    fn accepts_t2(&self, n: usize, d: usize, gamma: Gamma) -> bool {
        let label = format!("T{gamma}");
        !self.nothing
            && self.accepts_usize(SubsetKey::N, n)
            && self.accepts_usize(SubsetKey::D, d)
            && self.accepts(SubsetKey::Gamma, |v| v.parse::<Gamma>().ok() == Some(gamma))
            && self.accepts(SubsetKey::Stat, |v| same_column(v, &label))
    }

    fn accepts_cell(&self, d: usize, cell: &PowerCell) -> bool {
        !self.nothing
            && self.accepts_usize(SubsetKey::N, POWER_N)
            && self.accepts_usize(SubsetKey::D, d)
            && self.accepts(SubsetKey::Stat, |v| same_column(v, cell.column))
            && self.accepts(SubsetKey::Row, |v| {
                v.eq_ignore_ascii_case(cell.row)
                    || v.parse::<AlternativeSpec>().is_ok_and(|a| a.family == cell.alternative.family)
            })
    }
}

fn subset_key(k: &str) -> Option<SubsetKey> {
    match k.trim().to_ascii_lowercase().as_str() {
        "n" => Some(SubsetKey::N),
        "d" => Some(SubsetKey::D),
        "gamma" => Some(SubsetKey::Gamma),
        "stat" | "col" | "column" => Some(SubsetKey::Stat),
        "row" | "alt" => Some(SubsetKey::Row),
        _ => None,
    }
}

/// Column labels match case-insensitively or when they name the same
/// statistic (`HM` and `HM1.5`, `Tinf` and `T∞`).
fn same_column(query: &str, label: &str) -> bool {
    if query.eq_ignore_ascii_case(label) {
        return true;
    }
    match (query.parse::<Statistic>(), label.parse::<Statistic>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Subset::nothing());
        }
        // commas inside row labels such as `t5(0,I)` do not start a clause
        let mut raw: Vec<(SubsetKey, String)> = Vec::new();
        for fragment in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let key = fragment.split_once('=').and_then(|(k, _)| subset_key(k));
            match (key, raw.last_mut()) {
                (Some(key), _) => raw.push((key, fragment.split_once('=').expect("has '='").1.to_string())),
                (None, Some((SubsetKey::Row, v))) => {
                    v.push(',');
                    v.push_str(fragment);
                }
                (None, _) => {
                    return Err(Error::BadRequest(format!(
                        "subset clause '{fragment}' is not key=value with key n, d, gamma, stat or row"
                    )))
                }
            }
        }
        let clauses = raw
            .into_iter()
            .map(|(key, v)| (key, v.split('|').map(|x| x.trim().to_string()).collect()))
            .collect();
        Ok(Subset { clauses, nothing: false })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub row: String,
    pub column: String,
    pub n: usize,
    pub d: usize,
    pub statistic: Option<String>,
    pub alternative: Option<String>,
    pub reference: f64,
    pub reproduced: Option<f64>,
    pub std_error: Option<f64>,
    /// Relative for T2, absolute for the power tables.
    pub deviation: Option<f64>,
    pub tolerance: f64,
    pub within_tolerance: Option<bool>,
    pub reps: Option<usize>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: TableId,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub entries: Vec<ReportEntry>,
}

impl TableReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "table", "row", "column", "n", "d", "statistic", "alternative", "reference", "reproduced", "std_error",
            "deviation", "tolerance", "within_tolerance", "reps", "note",
        ])
        .map_err(csv_error)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            w.write_record([
                self.table.to_string(),
                e.row.clone(),
                e.column.clone(),
                e.n.to_string(),
                e.d.to_string(),
                e.statistic.clone().unwrap_or_default(),
                e.alternative.clone().unwrap_or_default(),
                e.reference.to_string(),
                opt(e.reproduced),
                opt(e.std_error),
                opt(e.deviation),
                e.tolerance.to_string(),
                e.within_tolerance.map(|b| b.to_string()).unwrap_or_default(),
                e.reps.map(|r| r.to_string()).unwrap_or_default(),
                e.note.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Entries that were reproduced and fall outside their tolerance.
    pub fn flagged(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| e.within_tolerance == Some(false))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reproduces the selected part of a table. `reps` is the number of null
/// replications per critical value for T2 and the number of power
/// replications for T3..T6; power tables estimate their critical values
/// from `10 * reps` null samples on an independent stream (both divided by
/// ten for `HM`).
pub fn reproduce_table(
    table: TableId,
    reps: usize,
    seed: u64,
    subset: &Subset,
    cache: Option<&NullCache>,
) -> Result<TableReport> {
    if reps < MIN_TABLE_REPS {
        return Err(Error::BadRequest(format!("tables need at least {MIN_TABLE_REPS} replications, got {reps}")));
    }
    let entries = match table {
        TableId::T2 => reproduce_t2(reps, seed, subset, cache)?,
        _ => reproduce_power(table, reps, seed, subset, cache)?,
    };
    Ok(TableReport {
        table,
        reps,
        seed,
        alpha: ALPHA,
        entries,
    })
}

fn reproduce_t2(reps: usize, seed: u64, subset: &Subset, cache: Option<&NullCache>) -> Result<Vec<ReportEntry>> {
    let mut entries = Vec::new();
    for d in T2_D {
        for n in T2_N {
            let gammas: Vec<Gamma> = T2_GAMMA
                .iter()
                .copied()
                .filter(|g| subset.accepts_t2(n, d, *g))
                .collect();
            if gammas.is_empty() {
                continue;
            }
            let stats: Vec<Statistic> = gammas.iter().map(|g| Statistic::t(*g)).collect();
            let tables = null_tables(&stats, n, d, reps, seed, cache)?;
            for ((gamma, stat), null) in gammas.iter().zip(&stats).zip(&tables) {
                let cv = null.critical_value(ALPHA);
                let (scale, tolerance, note) = match gamma {
                    Gamma::Infinity => (LIMIT_COLUMN_SCALE, 0.03, Some("limit statistic x100".to_string())),
                    Gamma::Finite(_) => (1.0, 0.02, None),
                };
                let reference = t2_value(n, d, *gamma).expect("grid value");
                let reproduced = scale * cv.value;
                let deviation = (reproduced - reference) / reference;
                entries.push(ReportEntry {
                    row: format!("n={n},d={d}"),
                    column: gamma.to_string(),
                    n,
                    d,
                    statistic: Some(stat.to_string()),
                    alternative: None,
                    reference,
                    reproduced: Some(reproduced),
                    std_error: Some(scale * cv.std_error),
                    deviation: Some(deviation),
                    tolerance,
                    within_tolerance: Some(deviation.abs() <= tolerance),
                    reps: Some(reps),
                    note,
                });
            }
        }
    }
    Ok(entries)
}

fn reproduce_power(
    table: TableId,
    reps: usize,
    seed: u64,
    subset: &Subset,
    cache: Option<&NullCache>,
) -> Result<Vec<ReportEntry>> {
    let d = table.dimension().expect("power table");
    let cells: Vec<PowerCell> = power_cells(table)
        .into_iter()
        .filter(|c| subset.accepts_cell(d, c))
        .collect();

    let reduced = |s: &Statistic| matches!(s, Statistic::HenzeJimenezGameroMeintanis { .. });
    let power_reps = |s: &Statistic| if reduced(s) { (reps / HM_REPS_DIVISOR).max(1) } else { reps };

    // critical values, one null simulation per replication count
    let mut stats: Vec<Statistic> = Vec::new();
    for s in cells.iter().filter_map(|c| c.statistic) {
        if !stats.contains(&s) {
            stats.push(s);
        }
    }
    let mut critical: Vec<(Statistic, f64)> = Vec::new();
    for hm in [false, true] {
        let group: Vec<Statistic> = stats.iter().copied().filter(|s| reduced(s) == hm).collect();
        if group.is_empty() {
            continue;
        }
        let cv_reps = power_reps(&group[0]) * CRITICAL_REPS_FACTOR;
        let tables = null_tables(&group, POWER_N, d, cv_reps, critical_value_seed(seed), cache)?;
        critical.extend(group.iter().zip(&tables).map(|(s, t)| (*s, t.quantile(ALPHA))));
    }

    let mut rows: Vec<&'static str> = Vec::new();
    for c in &cells {
        if !rows.contains(&c.row) {
            rows.push(c.row);
        }
    }
    let mut entries = Vec::with_capacity(cells.len());
    for row in rows {
        let row_cells: Vec<&PowerCell> = cells.iter().filter(|c| c.row == row).collect();
        let alt = row_cells[0].alternative;
        let mut results = Vec::new();
        for hm in [false, true] {
            let group: Vec<(Statistic, f64)> = critical
                .iter()
                .copied()
                .filter(|(s, _)| reduced(s) == hm && row_cells.iter().any(|c| c.statistic == Some(*s)))
                .collect();
            if group.is_empty() {
                continue;
            }
            let r = power_reps(&group[0].0);
            results.extend(estimate_powers(&group, &alt, POWER_N, ALPHA, r, seed)?);
        }
        for cell in row_cells {
            let result = cell.statistic.and_then(|s| results.iter().find(|r| r.statistic == s));
            let mut entry = ReportEntry {
                row: cell.row.to_string(),
                column: cell.column.to_string(),
                n: POWER_N,
                d,
                statistic: cell.statistic.map(|s| s.to_string()),
                alternative: Some(alt.to_string()),
                reference: cell.reference,
                reproduced: None,
                std_error: None,
                deviation: None,
                tolerance: 0.02,
                within_tolerance: None,
                reps: None,
                note: None,
            };
            match result {
                Some(r) => {
                    let dev = r.value - cell.reference;
                    entry.reproduced = Some(r.value);
                    entry.std_error = Some(r.std_error);
                    entry.deviation = Some(dev);
                    entry.within_tolerance = Some(dev.abs() <= entry.tolerance);
                    entry.reps = Some(r.reps);
                }
                None => entry.note = Some("not implemented".to_string()),
            }
            entries.push(entry);
        }
    }
    Ok(entries)
}
