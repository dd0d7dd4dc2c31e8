//! Experiment reports: JSON document plus one CSV file per table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::fit::SlopeFit;
use crate::ExperimentError;

/// A table cell: number or label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    /// Numeric column by name; labels read as NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| if let Cell::Num(v) = r[j] { v } else { f64::NAN }).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A fitted exponent with its acceptance window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
    pub expected: f64,
    pub window: f64,
    pub pass: bool,
}

impl SlopeRecord {
    /// Passes when `|slope − expected| ≤ window + 3·stderr`.
    pub fn new(name: &str, fit: &SlopeFit, expected: f64, window: f64) -> Self {
        Self {
            name: name.to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            stderr: fit.stderr,
            samples: fit.samples,
            expected,
            window,
            pass: (fit.slope - expected).abs() <= window + 3.0 * fit.stderr,
        }
    }
}

/// An empirical constant with its error estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub error: f64,
    pub note: String,
}

/// A pass/fail check of `value` against `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub slopes: Vec<SlopeRecord>,
    pub constants: Vec<Constant>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: config.clone(),
            tables: Vec::new(),
            slopes: Vec::new(),
            constants: Vec::new(),
            checks: Vec::new(),
            pass: false,
        }
    }

    pub fn constant(&mut self, name: &str, value: f64, error: f64, note: &str) {
        self.constants.push(Constant { name: name.to_string(), value, error, note: note.to_string() });
    }

    /// Records `value ≤ threshold`.
    pub fn check_le(&mut self, name: &str, value: f64, threshold: f64, note: &str) -> bool {
        let pass = value <= threshold;
        self.checks.push(Check { name: name.to_string(), value, threshold, pass, note: note.to_string() });
        pass
    }

    /// Records `value ≥ threshold`.
    pub fn check_ge(&mut self, name: &str, value: f64, threshold: f64, note: &str) -> bool {
        let pass = value >= threshold;
        self.checks.push(Check { name: name.to_string(), value, threshold, pass, note: note.to_string() });
        pass
    }

    /// Records a boolean condition (value 1 or 0 against threshold 1).
    pub fn check(&mut self, name: &str, ok: bool, note: &str) -> bool {
        self.checks.push(Check { name: name.to_string(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok, note: note.to_string() });
        ok
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Sets `pass` from every check and slope.
    pub fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass) && self.slopes.iter().all(|s| s.pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }

    /// Writes `<dir>/report.json` and `<dir>/<table>.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json() + "\n")?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .chain(self.slopes.iter().filter(|s| !s.pass).map(|s| s.name.as_str()))
            .collect();
        if failed.is_empty() {
            format!("{}: pass", self.experiment)
        } else {
            format!("{}: FAIL ({})", self.experiment, failed.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ExperimentReport::new("demo", &ExperimentConfig::quick());
        let mut t = Table::new("values", &["label", "x"]);
        t.push(vec!["a".into(), 0.5.into()]);
        t.push(vec!["b,c".into(), 1e-20.into()]);
        r.tables.push(t);
        r.check_le("small", 1.0, 2.0, "");
        let r = r.finish();
        assert!(r.pass);
        r.write(dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("values.csv")).unwrap();
        assert_eq!(csv, "label,x\na,5e-1\n\"b,c\",1e-20\n");
        let back: ExperimentReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.table("values").unwrap().column("x").unwrap(), vec![0.5, 1e-20]);
    }

    #[test]
    fn failing_check_fails_report() {
        let mut r = ExperimentReport::new("demo", &ExperimentConfig::quick());
        r.check_ge("big", 1.0, 2.0, "");
        let r = r.finish();
        assert!(!r.pass);
        assert_eq!(r.summary(), "demo: FAIL (big)");
    }
}
