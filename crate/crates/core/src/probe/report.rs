use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One representation x metric result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub probe: String,
    pub representation: String,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
}

impl ReportRow {
    pub fn new(probe: &str, representation: &str, metric: &str, value: f64, n: usize) -> Self {
        Self {
            probe: probe.into(),
            representation: representation.into(),
            metric: metric.into(),
            value,
            ci_low: None,
            ci_high: None,
            n,
        }
    }

    pub fn with_ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }
}

/// Tabular results plus free-form per-probe detail (dendrograms, per-class
/// breakdowns, skipped pairs) for the JSON document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub rows: Vec<ReportRow>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ProbeReport {
    pub fn extend(&mut self, other: ProbeReport) {
        self.rows.extend(other.rows);
        self.details.extend(other.details);
        self.metadata.extend(other.metadata);
    }

    /// Rows for one probe and metric.
    pub fn select<'a>(&'a self, probe: &'a str, metric: &'a str) -> impl Iterator<Item = &'a ReportRow> {
        self.rows
            .iter()
            .filter(move |r| r.probe == probe && r.metric == metric)
    }

    pub fn value(&self, probe: &str, representation: &str, metric: &str) -> Option<f64> {
        self.select(probe, metric)
            .find(|r| r.representation == representation)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("probe,representation,metric,value,ci_low,ci_high,n\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.probe,
                r.representation,
                r.metric,
                r.value,
                opt(r.ci_low),
                opt(r.ci_high),
                r.n
            );
        }
        s
    }

    pub fn write(&self, csv: &Path, json: &Path) -> Result<()> {
        std::fs::write(csv, self.to_csv()).map_err(|e| Error::io(csv, e))?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(json, text).map_err(|e| Error::io(json, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            kind: "report",
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}
