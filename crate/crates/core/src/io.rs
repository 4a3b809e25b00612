//! CSV and JSON emission, and the tomogram CSV reader.
//!
//! Floats are written as `{:.16e}` (17 significant digits, round-trip safe)
//! with LF line endings, so identical inputs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::phase_space::{Provenance, Tomogram};
use crate::{Error, Result};

pub const TOMOGRAM_HEADER: [&str; 4] = ["X", "mu", "nu", "w"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(v) => Value::from(*v),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Array of records keyed by column name.
    pub fn to_json_records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let map = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    Value::Object(map)
                })
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => json_string(&self.to_json_records()),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::invalid("table", "nothing to emit"));
    }
    write_output(&table.render(format), path)
}

/// Tomogram as `X,mu,nu,w` rows: `μ` outermost, then `ν`, then `X`.
pub fn tomogram_table(t: &Tomogram<f64>) -> Table {
    let mut table = Table::new(&TOMOGRAM_HEADER);
    for (im, &mu) in t.mu.iter().enumerate() {
        for (inu, &nu) in t.nu.iter().enumerate() {
            for (ix, &x) in t.x.iter().enumerate() {
                table.push(vec![x.into(), mu.into(), nu.into(), t.get(ix, im, inu).into()]);
            }
        }
    }
    table
}

/// Parses tomogram CSV text. The header must be exactly `X,mu,nu,w` and the
/// rows must cover a full tensor grid, in any order.
pub fn parse_tomogram_csv(text: &str, time: f64) -> Result<Tomogram<f64>> {
    let bad = |m: String| Error::MalformedTomogram(m);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header != TOMOGRAM_HEADER.join(",") {
        return Err(bad(format!("header must be `X,mu,nu,w`, got `{header}`")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {}: expected 4 fields, got {}", k + 2, fields.len())));
        }
        let mut vals = [0.0; 4];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: `{f}`: {e}", k + 2)))?;
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let axis = |c: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (x, mu, nu) = (axis(0), axis(1), axis(2));
    let n = x.len() * mu.len() * nu.len();
    if n != rows.len() {
        return Err(bad(format!(
            "{} rows do not form a {}×{}×{} grid",
            rows.len(),
            x.len(),
            mu.len(),
            nu.len()
        )));
    }
    let find = |axis: &[f64], v: f64| axis.binary_search_by(|a| a.total_cmp(&v)).expect("value from this axis");
    let mut values = vec![f64::NAN; n];
    for r in &rows {
        let idx = (find(&mu, r[1]) * nu.len() + find(&nu, r[2])) * x.len() + find(&x, r[0]);
        if !values[idx].is_nan() {
            return Err(bad(format!("duplicate sample at (X, μ, ν) = ({}, {}, {})", r[0], r[1], r[2])));
        }
        values[idx] = r[3];
    }
    Ok(Tomogram {
        time,
        x,
        mu,
        nu,
        values,
        provenance: Provenance::External,
    })
}

pub fn read_tomogram_csv(path: &Path, time: f64) -> Result<Tomogram<f64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tomogram_csv(&text, time)
}
