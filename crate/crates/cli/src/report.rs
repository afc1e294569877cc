//! Report accumulation and the on-disk layout: `report.csv`,
//! `summary.json`, `plots/*.dat` and optional extra JSON tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub bound: Value,
    pub pass: bool,
    /// Passed only because there was nothing to test.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    command: &'a str,
    config_echo: &'a BTreeMap<String, String>,
    checks: &'a [Check],
    fitted_constants: &'a BTreeMap<String, Value>,
    notes: &'a [String],
    /// Set when the run stopped early; the tables hold what was finished.
    error: Option<&'a str>,
}

#[derive(Debug, Default)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub fitted: BTreeMap<String, Value>,
    pub plots: BTreeMap<String, Vec<(f64, f64)>>,
    pub tables: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub config_echo: BTreeMap<String, String>,
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report { command: command.to_string(), ..Report::default() }
    }

    pub fn set_columns(&mut self, cols: &[&str]) {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn check(&mut self, name: impl Into<String>, value: Value, bound: Value, pass: bool) {
        self.checks.push(Check { name: name.into(), value, bound, pass, vacuous: false });
    }

    pub fn vacuous(&mut self, name: impl Into<String>, why: &str) {
        self.checks.push(Check {
            name: name.into(),
            value: Value::String(why.to_string()),
            bound: Value::Null,
            pass: true,
            vacuous: true,
        });
    }

    pub fn fitted(&mut self, name: impl Into<String>, value: Value) {
        self.fitted.insert(name.into(), value);
    }

    pub fn plot(&mut self, name: impl Into<String>, points: Vec<(f64, f64)>) {
        self.plots.insert(name.into(), points);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("report.csv")).map_err(csv_err)?;
        if !self.columns.is_empty() {
            w.write_record(&self.columns).map_err(csv_err)?;
        }
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        let summary = Summary {
            command: &self.command,
            config_echo: &self.config_echo,
            checks: &self.checks,
            fitted_constants: &self.fitted,
            notes: &self.notes,
            error: self.error.as_deref(),
        };
        fs::write(dir.join("summary.json"), to_json(&summary)?)?;
        let plots = dir.join("plots");
        if plots.is_dir() {
            for e in fs::read_dir(&plots)? {
                let p = e?.path();
                if p.extension().is_some_and(|x| x == "dat") {
                    fs::remove_file(p)?;
                }
            }
        }
        if !self.plots.is_empty() {
            fs::create_dir_all(&plots)?;
        }
        for (name, pts) in &self.plots {
            let body: String = pts.iter().map(|(x, y)| format!("{x} {y}\n")).collect();
            fs::write(plots.join(format!("{name}.dat")), body)?;
        }
        for (name, v) in &self.tables {
            fs::write(dir.join(format!("{name}.json")), to_json(v)?)?;
        }
        Ok(())
    }

    /// One line per check for the terminal.
    pub fn check_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let tag = match (c.pass, c.vacuous) {
                    (true, true) => "PASS (vacuous)",
                    (true, false) => "PASS",
                    (false, _) => "FAIL",
                };
                format!("{tag} {}: value {} bound {}", c.name, c.value, c.bound)
            })
            .collect()
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Infeasible(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
