// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::EvalError;

/// One experiment's output: a numeric table (one row per grid point) plus scalar summary
/// metrics and the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
    pub runtime_seconds: f64,
}

impl EvalReport {
    pub fn new(experiment: &str, header: &[&str]) -> Self {
        EvalReport {
            experiment: experiment.to_string(),
            parameters: BTreeMap::new(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(name.to_string(), v);
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.summary.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.summary.get(name).copied()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        self.write_csv(File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
