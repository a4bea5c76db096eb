//! Tables, per-point run records, and their CSV / JSON emission.

use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// One CSV cell. Numbers are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Outcome of one (d, sigma) solve. Failed points carry `error` and no numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub d: usize,
    pub sigma: f64,
    pub method: String,
    pub outputs: serde_json::Map<String, Value>,
    pub iterations: Option<usize>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn new(d: usize, sigma: f64, method: &str) -> Self {
        Self {
            d,
            sigma,
            method: method.to_string(),
            outputs: serde_json::Map::new(),
            iterations: None,
            wall_time_s: 0.0,
            error: None,
        }
    }

    pub fn output(&mut self, key: &str, value: f64) {
        self.outputs.insert(key.to_string(), json!(value));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.outputs.get(key).and_then(Value::as_f64)
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Runs `f`, timing it, and turns an error into a record with `error` set.
pub fn timed<T>(
    d: usize,
    sigma: f64,
    method: &str,
    f: impl FnOnce(&mut RunRecord) -> groundstate_core::Result<T>,
) -> (RunRecord, Option<T>) {
    let mut rec = RunRecord::new(d, sigma, method);
    let start = Instant::now();
    let value = match f(&mut rec) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("d = {d}, sigma = {sigma} ({method}) failed: {e}");
            rec.outputs.clear();
            rec.iterations = None;
            rec.error = Some(e.to_string());
            None
        }
    };
    rec.wall_time_s = start.elapsed().as_secs_f64();
    (rec, value)
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub records: Vec<RunRecord>,
    pub summary: Value,
    /// Failed checks or solves; a nonzero count gives exit code 1.
    pub failures: usize,
    /// Extra JSON documents written as `<name>.json` without a CSV.
    pub documents: Vec<(String, Value)>,
}

impl Report {
    pub fn count_failed_records(&mut self) {
        self.failures += self.records.iter().filter(|r| r.failed()).count();
    }
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Writes every table as CSV with a JSON sidecar, plus standalone documents.
/// Returns the paths written.
pub fn write_report(
    cfg: &RunConfig,
    report: &Report,
    started: DateTime<Utc>,
    finished: DateTime<Utc>,
) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    let meta = |file: &str| {
        json!({
            "command": cfg.command.name(),
            "file": file,
            "solver": "groundstate-core",
            "version": env!("CARGO_PKG_VERSION"),
            "started_at": timestamp(started),
            "finished_at": timestamp(finished),
            "config": cfg,
            "records": report.records,
            "summary": report.summary,
            "failures": report.failures,
        })
    };
    for table in &report.tables {
        let path = cfg.output_path(&table.name, "csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        written.push(path.clone());

        let side = cfg.output_path(&table.name, "json");
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        write_json(&side, &meta(&file))?;
        written.push(side);
    }
    for (name, doc) in &report.documents {
        let path = cfg.output_path(name, "json");
        let mut doc = doc.clone();
        if let Value::Object(map) = &mut doc {
            map.insert("metadata".into(), meta(&format!("{name}.json")));
        }
        write_json(&path, &doc)?;
        written.push(path);
    }
    Ok(written)
}

fn write_json(path: &std::path::Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(Cell::Num(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Num(-2.0).render(), "-2.0000000000000000e0");
        let back: f64 = Cell::Num(std::f64::consts::PI).render().parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
        assert_eq!(Cell::opt(None).render(), "");
        assert_eq!(Cell::from(7usize).render(), "7");
    }

    #[test]
    fn failed_runs_carry_no_numbers() {
        let (rec, value) = timed(3, 0.5, "test", |rec| {
            rec.output("alpha", 1.0);
            Err::<(), _>(groundstate_core::Error::Domain("boom".into()))
        });
        assert!(value.is_none());
        assert!(rec.failed());
        assert!(rec.outputs.is_empty());
        let (rec, value) = timed(3, 0.5, "test", |rec| {
            rec.output("alpha", 1.5);
            Ok(2)
        });
        assert_eq!(value, Some(2));
        assert_eq!(rec.get("alpha"), Some(1.5));
    }
}
