//! File formats: CSV matrices (one row per line, comma-separated, no
//! header), JSON matrices `{"rows","cols","data"}`, JSON vectors (arrays).

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::matrix::{Matrix, MatrixError};
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, field {field}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        field: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Matrix {
        path: PathBuf,
        #[source]
        source: MatrixError,
    },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_owned(),
        source,
    })
}

/// Parses CSV text; blank lines are skipped, line numbers are 1-based.
pub fn parse_csv_matrix(text: &str, path: &Path) -> Result<Matrix, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (field, cell) in line.split(',').enumerate() {
            let x: f64 = cell.trim().parse().map_err(|e| IoError::Csv {
                path: path.to_owned(),
                line: lineno + 1,
                field: field + 1,
                msg: format!("cannot parse {:?} as a number ({e})", cell.trim()),
            })?;
            if !x.is_finite() {
                return Err(IoError::Csv {
                    path: path.to_owned(),
                    line: lineno + 1,
                    field: field + 1,
                    msg: format!("non-finite value {x}"),
                });
            }
            row.push(x);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(IoError::Csv {
                    path: path.to_owned(),
                    line: lineno + 1,
                    field: row.len().min(w) + 1,
                    msg: format!("expected {w} fields, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|source| IoError::Matrix {
        path: path.to_owned(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })
}

/// Reads a matrix as JSON when the content starts with `{`, otherwise CSV.
pub fn read_matrix(path: &Path) -> Result<Matrix, IoError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: path.to_owned(),
            source,
        })
    } else {
        parse_csv_matrix(&text, path)
    }
}

pub fn read_vector(path: &Path) -> Result<Vector, IoError> {
    read_json(path)
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<(), IoError> {
    let mut out = String::new();
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|source| IoError::Write {
        path: path.to_owned(),
        source,
    })
}
