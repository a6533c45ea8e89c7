//! CSV input and output for data matrices. Rows are observations, fields are
//! comma separated, and an optional single header line is recognised by
//! containing a non-numeric field.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

pub fn read_csv(path: &Path) -> Result<DataMatrix> {
    read_csv_from(File::open(path)?)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut values: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(index + 1, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(col, field)| field.parse::<f64>().map_err(|_| col + 1))
            .collect();
        if index == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(Error::Parse {
                    line,
                    column: parsed.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", parsed.len()),
                });
            }
            _ => {}
        }
        for (col, p) in parsed.into_iter().enumerate() {
            match p {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(v) => {
                    return Err(Error::Parse {
                        line,
                        column: col + 1,
                        message: format!("non-finite value {v}"),
                    })
                }
                Err(column) => {
                    return Err(Error::Parse {
                        line,
                        column,
                        message: format!("'{}' is not a number", &record[column - 1]),
                    })
                }
            }
        }
        rows += 1;
    }
    let d = width.ok_or_else(|| Error::InvalidData("no numeric rows in input".into()))?;
    DataMatrix::new(DMatrix::from_row_slice(rows, d, &values))
}

/// Writes one observation per line with 17 significant digits, so reading
/// the file back reproduces the matrix exactly.
pub fn write_csv_to<W: Write>(data: &DataMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let m = data.values();
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:.16e}")))
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(data: &DataMatrix, path: &Path) -> Result<()> {
    write_csv_to(data, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped() {
        let m = read_csv_from("a,b\n1,2\n3,5\n-1,0.5\n".as_bytes()).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.values()[(1, 1)], 5.0);
    }

    #[test]
    fn bad_cell_reports_position() {
        let err = read_csv_from("1,2\n3,x\n4,5\n6,1\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 2)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = read_csv_from("1,2\n3\n4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = DMatrix::from_fn(7, 2, |i, j| (i as f64 + 0.1).ln() * std::f64::consts::PI.powi(j as i32 * 7 - 5));
        let data = DataMatrix::new(m).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&data, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }
}
