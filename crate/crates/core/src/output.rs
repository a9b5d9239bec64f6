//! CSV tables with `# key=value` metadata headers, and plain numeric matrices.
//!
//! Floats are written with 17 significant digits, so re-reading a file and
//! writing it again reproduces it byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn parse(s: &str) -> Self {
        if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            Cell::Num(f)
        } else {
            Cell::Text(s.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(f) => Some(*f),
            Cell::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Num(v) => f.write_str(&format_f64(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, meta: Vec<(String, String)>) -> Self {
        self.meta = meta;
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("line {}: metadata needs key=value", lineno + 1)))?;
                table.meta.push((k.to_string(), v.to_string()));
            } else if !header {
                table.columns = line.split(',').map(str::to_string).collect();
                header = true;
            } else if !line.is_empty() {
                let row: Vec<Cell> = line.split(',').map(Cell::parse).collect();
                if row.len() != table.columns.len() {
                    return Err(Error::Parse(format!(
                        "line {}: {} fields, header has {}",
                        lineno + 1,
                        row.len(),
                        table.columns.len()
                    )));
                }
                table.rows.push(row);
            }
        }
        if !header {
            return Err(Error::Parse("missing header line".into()));
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Row-major numeric matrix preceded by `# rows=N` and `# cols=M` lines
/// (plus any extra metadata).
pub fn matrix_to_csv(m: &DMatrix<f64>, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# rows={}", m.nrows());
    let _ = writeln!(out, "# cols={}", m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Parses a numeric matrix; `# rows` / `# cols` lines, when present, must
/// match the data.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let (mut rows_hint, mut cols_hint) = (None, None);
    let mut data = Vec::new();
    let mut cols = None;
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                let parse = || {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {}: bad dimension '{v}'", lineno + 1)))
                };
                match k.trim() {
                    "rows" => rows_hint = Some(parse()?),
                    "cols" => cols_hint = Some(parse()?),
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: '{s}' is not a number", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!(
                    "line {}: {} values, expected {c}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
    }
    let cols = cols.unwrap_or(cols_hint.unwrap_or(0));
    let rows = data.len().checked_div(cols).unwrap_or(0);
    if rows_hint.is_some_and(|r| r != rows) || cols_hint.is_some_and(|c| c != cols) {
        return Err(Error::Parse(format!(
            "matrix is {rows}x{cols} but header says {}x{}",
            rows_hint.unwrap_or(rows),
            cols_hint.unwrap_or(cols)
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
