//! Result rows and their CSV/JSON encodings.
//!
//! The CSV header is versioned: its first cell is `ruinlab-v1` and labels the
//! `kind` column. Absent values are empty cells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "ruinlab-v1";

/// Column names after the schema cell, in order.
pub const COLUMNS: [&str; 16] = [
    "h",
    "c",
    "u",
    "law",
    "delta",
    "p_hat",
    "stderr",
    "ci_lo",
    "ci_hi",
    "asympt_value",
    "ratio",
    "log_asympt",
    "horizon",
    "reps",
    "seed",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kind: String,
    pub h: Option<f64>,
    pub c: Option<f64>,
    pub u: Option<f64>,
    pub law: Option<String>,
    pub delta: Option<f64>,
    pub p_hat: Option<f64>,
    pub stderr: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub asympt_value: Option<f64>,
    /// `p_hat / asympt_value` whenever both are present.
    pub ratio: Option<f64>,
    pub log_asympt: Option<f64>,
    /// Simulation horizon, or the truncation `S` for Pickands rows.
    pub horizon: Option<f64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub wall_time_s: Option<f64>,
}

impl ResultRecord {
    pub fn new(kind: impl Into<String>) -> Self {
        ResultRecord { kind: kind.into(), ..Default::default() }
    }

    /// Sets the comparison value and derives `ratio` and `log_asympt`.
    pub fn with_reference(mut self, value: f64, log_value: f64) -> Self {
        self.asympt_value = Some(value);
        self.log_asympt = Some(log_value);
        self.ratio = match self.p_hat {
            Some(p) if value > 0.0 => Some(p / value),
            _ => None,
        };
        self
    }
}

pub fn write_csv<W: Write>(out: W, records: &[ResultRecord]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let header: Vec<&str> = std::iter::once(SCHEMA).chain(COLUMNS).collect();
    w.write_record(&header).map_err(csv_error)?;
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))
}

pub fn read_csv<R: Read>(input: R) -> CliResult<Vec<ResultRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = reader.records();
    let header = rows.next().ok_or_else(|| CliError::config("csv", "empty file"))?.map_err(csv_error)?;
    let expected: Vec<&str> = std::iter::once(SCHEMA).chain(COLUMNS).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::config("csv", format!("unexpected header, want `{}`", expected.join(","))));
    }
    rows.map(|row| row.and_then(|r| r.deserialize(None)).map_err(csv_error)).collect()
}

pub fn write_json<W: Write>(mut out: W, records: &[ResultRecord]) -> CliResult<()> {
    let doc = serde_json::json!({ "schema": SCHEMA, "records": records });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::io("<json>", e))?;
    out.write_all(b"\n").map_err(|e| CliError::io("<json>", e))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::config("csv", e.to_string())
}
