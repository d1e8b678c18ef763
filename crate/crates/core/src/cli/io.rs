//! CSV loading for the command-line tool.

use std::collections::BTreeSet;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: missing column {column:?} (found {found:?})")]
    MissingColumn {
        path: PathBuf,
        column: String,
        found: Vec<String>,
    },

    #[error("{path}: unparsable values: {}", cells.join("; "))]
    ParseError { path: PathBuf, cells: Vec<String> },

    #[error("{path}: covariate columns differ from the labeled file: {}", differing.join(", "))]
    ColumnMismatch {
        path: PathBuf,
        differing: Vec<String>,
    },

    #[error("{0}")]
    Invalid(String),
}

/// Labeled rows read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub y: Vec<f64>,
    pub x: Matrix,
    /// Covariate names in file order.
    pub covariates: Vec<String>,
}

struct RawTable {
    header: Vec<String>,
    records: Vec<csv::StringRecord>,
}

fn read_raw(path: &Path) -> Result<RawTable, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| LoadError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    Ok(RawTable { header, records })
}

/// Parses the named columns; failures list the 1-based data row and column.
fn parse_columns(
    path: &Path,
    raw: &RawTable,
    columns: &[(usize, &str)],
) -> Result<Vec<Vec<f64>>, LoadError> {
    let mut out = vec![Vec::with_capacity(raw.records.len()); columns.len()];
    let mut bad = Vec::new();
    for (i, rec) in raw.records.iter().enumerate() {
        for (k, &(idx, name)) in columns.iter().enumerate() {
            let cell = rec.get(idx).unwrap_or("");
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => out[k].push(v),
                _ => bad.push(format!("row {}, column {name}: {cell:?}", i + 1)),
            }
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(LoadError::ParseError {
            path: path.to_path_buf(),
            cells: bad,
        })
    }
}

fn to_rows(columns: &[Vec<f64>], rows: usize) -> Matrix {
    let p = columns.len();
    let mut data = Vec::with_capacity(rows * p);
    for i in 0..rows {
        data.extend(columns.iter().map(|c| c[i]));
    }
    Matrix::new(rows, p, data).expect("finite parsed values")
}

/// Reads a labeled file: the `response` column plus every other column as a covariate.
pub fn load_labeled_csv(path: &Path, response: &str) -> Result<LabeledTable, LoadError> {
    let raw = read_raw(path)?;
    let y_idx = raw
        .header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| LoadError::MissingColumn {
            path: path.to_path_buf(),
            column: response.to_string(),
            found: raw.header.clone(),
        })?;
    if raw.records.is_empty() {
        return Err(LoadError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut columns = vec![(y_idx, response)];
    columns.extend(
        raw.header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != y_idx)
            .map(|(i, h)| (i, h.as_str())),
    );
    let mut parsed = parse_columns(path, &raw, &columns)?;
    let y = parsed.remove(0);
    let x = to_rows(&parsed, y.len());
    let covariates = columns[1..].iter().map(|(_, h)| h.to_string()).collect();
    Ok(LabeledTable { y, x, covariates })
}

/// Reads covariate-only rows whose columns, in any order, are exactly
/// `covariates`; a `response` column, if present, is ignored. Zero rows is allowed.
pub fn load_unlabeled_csv(
    path: &Path,
    covariates: &[String],
    response: &str,
) -> Result<Matrix, LoadError> {
    let raw = read_raw(path)?;
    let have: BTreeSet<&str> = raw
        .header
        .iter()
        .map(String::as_str)
        .filter(|h| *h != response)
        .collect();
    let want: BTreeSet<&str> = covariates.iter().map(String::as_str).collect();
    let differing: Vec<String> = have
        .symmetric_difference(&want)
        .map(|s| s.to_string())
        .collect();
    if !differing.is_empty() {
        return Err(LoadError::ColumnMismatch {
            path: path.to_path_buf(),
            differing,
        });
    }
    let columns: Vec<(usize, &str)> = covariates
        .iter()
        .map(|c| {
            let idx = raw
                .header
                .iter()
                .position(|h| h == c)
                .expect("checked above");
            (idx, c.as_str())
        })
        .collect();
    let parsed = parse_columns(path, &raw, &columns)?;
    Ok(to_rows(&parsed, raw.records.len()))
}

/// Parses a comma-separated list of numbers.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, LoadError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| LoadError::Invalid(format!("not a number: {s:?}")))
        })
        .collect()
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_vector(&text)
}

/// Writes a CSV with the given header and rows, used for fixtures and round trips.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), LoadError> {
    let io_err = |e: csv::Error| LoadError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io_err)?;
    }
    w.flush().map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn response_column_can_sit_anywhere() {
        let f = file_with("a,y,b\n1,10,2\n3,20,4\n5,30,7\n");
        let t = load_labeled_csv(f.path(), "y").unwrap();
        assert_eq!(t.y, vec![10.0, 20.0, 30.0]);
        assert_eq!(t.covariates, vec!["a", "b"]);
        assert_eq!(t.x.row(2), &[5.0, 7.0]);
    }

    #[test]
    fn reports_every_bad_cell() {
        let f = file_with("y,x1,x2\n1,2,3\n1,oops,3\n2,3,\n");
        match load_labeled_csv(f.path(), "y") {
            Err(LoadError::ParseError { cells, .. }) => {
                assert_eq!(cells.len(), 2);
                assert!(cells[0].contains("row 2, column x1"));
                assert!(cells[1].contains("row 3, column x2"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_response_and_empty_files() {
        let f = file_with("x1,x2\n1,2\n");
        assert!(matches!(
            load_labeled_csv(f.path(), "y"),
            Err(LoadError::MissingColumn { .. })
        ));
        let f = file_with("y,x\n");
        assert!(matches!(
            load_labeled_csv(f.path(), "y"),
            Err(LoadError::EmptyFile { .. })
        ));
    }

    #[test]
    fn unlabeled_columns_are_matched_by_name() {
        let cov = vec!["a".to_string(), "b".to_string()];
        let f = file_with("b,a\n2,1\n4,3\n");
        let m = load_unlabeled_csv(f.path(), &cov, "y").unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        let f = file_with("a,c\n1,2\n");
        match load_unlabeled_csv(f.path(), &cov, "y") {
            Err(LoadError::ColumnMismatch { differing, .. }) => {
                assert_eq!(differing, vec!["b", "c"])
            }
            other => panic!("{other:?}"),
        }
        let f = file_with("a,b\n");
        assert_eq!(load_unlabeled_csv(f.path(), &cov, "y").unwrap().rows(), 0);
    }

    #[test]
    fn round_trip_through_writer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-8, 7.0]];
        write_table(&path, &["y", "x"], &rows).unwrap();
        let t = load_labeled_csv(&path, "y").unwrap();
        assert_eq!(t.y, vec![0.1, -2.5e-8]);
        assert_eq!(t.x.as_slice(), &[1.0 / 3.0, 7.0]);
    }

    #[test]
    fn vectors_parse_with_commas_or_spaces() {
        assert_eq!(parse_vector("1, 2.5 -3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert!(parse_vector("1,x").is_err());
    }
}
