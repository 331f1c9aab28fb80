//! Reports and their on-disk form: `summary.json` and `rows.csv`.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::Kind;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::S(String::new()), Cell::F)
    }
}

/// Shortest round-trip decimal form, switching to exponent notation outside
/// `[1e-5, 1e16)`; `inf`, `-inf`, `NaN` for non-finite values.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::F(x) => format_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// JSON number for finite values, the string form otherwise (JSON has no
/// infinities).
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(format_f64(x))
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub kind: Kind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// One flag per row.
    pub row_pass: Vec<bool>,
    /// Conditions beyond the rows, e.g. an acceptance test on the whole grid.
    pub extra_pass: Vec<(String, bool)>,
    /// Kind-specific results.
    pub summary: Map<String, Value>,
    /// Thresholds behind the pass flags.
    pub thresholds: Map<String, Value>,
    pub scenario: Value,
    pub runtime_ms: u128,
}

impl Report {
    pub fn new(kind: Kind, columns: Vec<&'static str>, scenario: Value) -> Self {
        Report {
            kind,
            columns,
            rows: Vec::new(),
            row_pass: Vec::new(),
            extra_pass: Vec::new(),
            summary: Map::new(),
            thresholds: Map::new(),
            scenario,
            runtime_ms: 0,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>, pass: bool) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
        self.row_pass.push(pass);
    }

    pub fn passed(&self) -> bool {
        self.row_pass.iter().all(|&p| p) && self.extra_pass.iter().all(|(_, p)| *p)
    }

    pub fn csv_string(&self) -> Result<String, HarnessError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("rendered cells are UTF-8"))
    }

    pub fn summary_json(&self) -> Value {
        let failed_rows: Vec<usize> = self.row_pass.iter().enumerate().filter(|(_, p)| !**p).map(|(k, _)| k).collect();
        let checks: Map<String, Value> = self.extra_pass.iter().map(|(k, v)| (k.clone(), Value::Bool(*v))).collect();
        serde_json::json!({
            "kind": self.kind.name(),
            "pass": self.passed(),
            "rows": self.rows.len(),
            "failed_rows": failed_rows,
            "checks": checks,
            "results": self.summary,
            "thresholds": self.thresholds,
            "runtime_ms": self.runtime_ms as u64,
            "provenance": {
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
            },
            "scenario": self.scenario,
        })
    }

    /// Writes `summary.json` and `rows.csv` into `dir`, creating it.
    pub fn emit(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rows.csv"), self.csv_string()?)?;
        let mut text = serde_json::to_string_pretty(&self.summary_json()).expect("JSON values serialise");
        text.push('\n');
        fs::write(dir.join("summary.json"), text)?;
        Ok(())
    }
}
