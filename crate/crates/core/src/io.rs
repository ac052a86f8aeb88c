//! Plain-text formats.
//!
//! * Dense matrices: one row per line, comma-separated, no header.
//! * Diagonal entries and vectors: whitespace-separated numbers (usually one
//!   per line). Diagonal files accept `+inf` / `inf`.
//!
//! Blank lines and lines starting with `#` are skipped everywhere.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(token: &str, line: usize, allow_inf: bool) -> Result<f64> {
    let lower = token.to_ascii_lowercase();
    let value = match lower.as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" if allow_inf => f64::INFINITY,
        _ => token.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse '{token}' as a number"),
        })?,
    };
    if value.is_nan() || (value.is_infinite() && !allow_inf) {
        return Err(Error::Parse {
            line,
            message: format!("'{token}' is not a finite number"),
        });
    }
    Ok(value)
}

pub fn parse_dense_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, content) in content_lines(text) {
        let row = content
            .split(',')
            .map(|t| parse_number(t.trim(), line, false))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "matrix file is empty".into(),
        });
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

fn parse_list(text: &str, allow_inf: bool) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, content) in content_lines(text) {
        for token in content.split_whitespace() {
            out.push(parse_number(token, line, allow_inf)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "file contains no entries".into(),
        });
    }
    Ok(out)
}

pub fn parse_diagonal(text: &str) -> Result<Vec<f64>> {
    parse_list(text, true)
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    parse_list(text, false)
}

pub fn read_dense_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_dense_csv(&std::fs::read_to_string(path)?)
}

pub fn read_diagonal(path: &Path) -> Result<Vec<f64>> {
    parse_diagonal(&std::fs::read_to_string(path)?)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&std::fs::read_to_string(path)?)
}

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// One value per line.
pub fn format_vector(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        let _ = writeln!(out, "{}", format_float(*v));
    }
    out
}
