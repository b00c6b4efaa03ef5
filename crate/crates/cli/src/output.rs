//! Serialized artifacts. Floats use Rust's shortest round-trip formatting throughout, so
//! identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use mulab_core::blowup::{BlowupReport, TheoremEntry};
use mulab_core::diagnostics::DiagnosticsRow;
use mulab_core::{ModelParams, SolutionRecord, Termination};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const TIMESERIES_COLUMNS: [&str; 13] = [
    "t",
    "dt",
    "min_ux",
    "max_ux",
    "sup_u",
    "H0",
    "H1",
    "H2",
    "Ht0",
    "Ht1",
    "Ht2",
    "V",
    "resolvedness",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes rows of string cells with a header.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn timeseries_row(r: &DiagnosticsRow) -> Vec<String> {
    [
        r.t,
        r.dt,
        r.min_ux,
        r.max_ux,
        r.sup_u,
        r.h0,
        r.h1,
        r.h2,
        r.ht0,
        r.ht1,
        r.ht2,
        r.v,
        r.resolvedness,
    ]
    .into_iter()
    .map(fmt_f64)
    .collect()
}

pub fn write_timeseries(path: &Path, rows: &[DiagnosticsRow]) -> CliResult<()> {
    write_csv(path, &TIMESERIES_COLUMNS, rows.iter().map(timeseries_row))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub lambda: f64,
}

impl ModelInfo {
    pub fn new(lambda: f64) -> Self {
        let name = if lambda == 2.0 {
            "muCH"
        } else if lambda == 3.0 {
            "muDP"
        } else {
            "mu-family"
        };
        Self { name, lambda }
    }
}

/// Run summary written next to the time series.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub model: ModelInfo,
    pub params: ModelParams,
    pub n: usize,
    pub termination: Termination,
    pub final_time: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub t_star: Option<f64>,
    pub rate_sigma: Option<f64>,
    pub fit_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_note: Option<String>,
    pub consistency: Option<bool>,
    pub theorems: Vec<TheoremEntry>,
}

impl RunSummary {
    pub fn new(record: &SolutionRecord, report: &BlowupReport) -> Self {
        let obs = report.observed.as_ref();
        Self {
            model: ModelInfo::new(record.params.lambda),
            params: record.params,
            n: record.config.n,
            termination: record.termination,
            final_time: record.final_time,
            accepted_steps: record.accepted_steps,
            rejected_steps: record.rejected_steps,
            t_star: obs.and_then(|o| o.t_star),
            rate_sigma: obs.and_then(|o| o.rate_sigma),
            fit_samples: obs.map_or(0, |o| o.fit_samples),
            fit_note: obs.and_then(|o| o.note.clone()),
            consistency: report.consistency,
            theorems: report.theorems.clone(),
        }
    }
}

/// `<dir>/<prefix><suffix>`.
pub fn artifact(dir: &Path, prefix: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn model_names() {
        assert_eq!(ModelInfo::new(2.0).name, "muCH");
        assert_eq!(ModelInfo::new(3.0).name, "muDP");
        assert_eq!(ModelInfo::new(0.5).name, "mu-family");
    }
}
