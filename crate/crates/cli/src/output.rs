//! Tabular results and their CSV / JSON encodings.

use std::io::Write;

use llproj_core::VERSION;
use serde_json::{json, Map, Value};

use crate::args::Format;

/// Column layout shared by `prob`, `entropy`, `report` and `sweep`.
pub const STANDARD_COLUMNS: [&str; 11] = [
    "N", "c", "ell", "k", "p_k", "S_A_bits", "S_ub_bits", "E_k", "E_PP", "is_TG", "residual",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Row {
    pub cells: Vec<Cell>,
    /// JSON-only fields, such as full spectra.
    pub extra: Map<String, Value>,
}

impl Row {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self {
            cells,
            extra: Map::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: Value) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

/// Everything a command hands back for printing.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
    /// Largest Bethe residual among the solved points.
    pub residual: f64,
    pub cache_hits: u64,
}

impl Report {
    pub fn new(command: &str, params: Value, columns: &[&'static str]) -> Self {
        Self {
            command: command.to_string(),
            params,
            columns: columns.to_vec(),
            rows: Vec::new(),
            residual: 0.0,
            cache_hits: 0,
        }
    }

    pub fn write(&self, format: Format, runtime_ms: u128, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.envelope(runtime_ms))?;
                writeln!(out)
            }
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# llproj {VERSION} {}", self.command)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.cells.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn envelope(&self, runtime_ms: u128) -> Value {
        let results: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(&row.cells)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                obj.extend(row.extra.clone());
                Value::Object(obj)
            })
            .collect();
        json!({
            "params": self.params,
            "results": results,
            "diagnostics": {
                "residual": self.residual,
                "runtime_ms": runtime_ms,
                "cache_hits": self.cache_hits,
            },
            "version": VERSION,
        })
    }
}

/// Machine-readable failure record printed on stderr.
pub fn error_record(kind: &str, message: &str) -> Value {
    json!({
        "error": { "kind": kind, "message": message },
        "version": VERSION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("prob", json!({"n": 4}), &["N", "c", "p_k"]);
        r.rows.push(Row::new(vec![Cell::from(4usize), Cell::Empty, Cell::from(0.375)]));
        r
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# llproj "));
        assert_eq!(lines[1], "N,c,p_k");
        assert_eq!(lines[2], "4,,3.7500000000000000e-1");
    }

    #[test]
    fn json_envelope() {
        let v = sample().envelope(12);
        assert_eq!(v["results"][0]["p_k"], json!(0.375));
        assert_eq!(v["results"][0]["c"], Value::Null);
        assert_eq!(v["diagnostics"]["runtime_ms"], json!(12));
        assert_eq!(v["version"], json!(VERSION));
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1f64 + 0.2;
        let s = Cell::Float(x).csv();
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
