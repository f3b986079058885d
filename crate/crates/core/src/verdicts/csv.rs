use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A rectangular numeric log whose first column is a strictly increasing
/// timestamp (nanoseconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvLog {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("log is empty")]
    Empty,
    #[error("line {line}: expected a header row, found numeric data")]
    MissingHeader { line: usize },
    #[error("line {line}: duplicate or empty column name `{name}`")]
    BadColumn { line: usize, name: String },
    #[error("line {line}: expected {expected} cells, found {found}")]
    NonRectangular {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: `{cell}` is not a finite number")]
    NonNumeric {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("line {line}: timestamp does not increase")]
    NonMonotone { line: usize },
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses `header\nrow\nrow...`; blank lines are ignored.
pub fn parse_csv_log(text: &str) -> Result<CsvLog, CsvError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(CsvError::Empty)?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if columns.iter().all(|c| parse_cell(c).is_some()) {
        return Err(CsvError::MissingHeader { line: header_line });
    }
    for (i, name) in columns.iter().enumerate() {
        if name.is_empty() || columns[..i].contains(name) {
            return Err(CsvError::BadColumn {
                line: header_line,
                name: name.clone(),
            });
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, text) in lines {
        let cells: Vec<&str> = text.split(',').collect();
        if cells.len() != columns.len() {
            return Err(CsvError::NonRectangular {
                line,
                expected: columns.len(),
                found: cells.len(),
            });
        }
        let row = cells
            .iter()
            .enumerate()
            .map(|(column, cell)| {
                parse_cell(cell).ok_or_else(|| CsvError::NonNumeric {
                    line,
                    column: column + 1,
                    cell: cell.trim().to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(prev) = rows.last() {
            if row[0] <= prev[0] {
                return Err(CsvError::NonMonotone { line });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(CsvLog { columns, rows })
}

impl CsvLog {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r[0])
    }

    pub fn render(&self) -> String {
        use core::fmt::Write;
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}
