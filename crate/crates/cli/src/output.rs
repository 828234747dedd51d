//! Artifact files: per-run JSON records and aggregate CSV tables.
//!
//! Aggregate columns, in order: `cell, protocol, n, t, port, adversary, seed,
//! repetitions, mean_rounds, max_rounds, mean_messages, max_messages,
//! mean_bits, max_bits, mean_messages_nonfaulty, passed, failed`. Every value
//! is recomputable from the per-run records of the cell.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::runner::RunRecord;
use crate::scenario::Scenario;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub cell: usize,
    pub protocol: String,
    pub n: usize,
    pub t: usize,
    pub port: String,
    pub adversary: String,
    pub seed: u64,
    pub repetitions: u64,
    pub mean_rounds: f64,
    pub max_rounds: u64,
    pub mean_messages: f64,
    pub max_messages: u64,
    pub mean_bits: f64,
    pub max_bits: u64,
    pub mean_messages_nonfaulty: f64,
    pub passed: u64,
    pub failed: u64,
}

fn mean(xs: impl Iterator<Item = u64>) -> f64 {
    let (sum, count) = xs.fold((0u128, 0u64), |(s, c), x| (s + x as u128, c + 1));
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

impl AggregateRow {
    pub fn new(cell: usize, s: &Scenario, records: &[RunRecord]) -> Self {
        let m = |f: fn(&RunRecord) -> u64| (mean(records.iter().map(f)), records.iter().map(f).max().unwrap_or(0));
        let (mean_rounds, max_rounds) = m(|r| r.metrics.rounds);
        let (mean_messages, max_messages) = m(|r| r.metrics.messages);
        let (mean_bits, max_bits) = m(|r| r.metrics.bits);
        let passed = records.iter().filter(|r| r.passed()).count() as u64;
        AggregateRow {
            cell,
            protocol: s.protocol.name().to_string(),
            n: s.n,
            t: s.t,
            port: s.port.to_string(),
            adversary: s.adversary.to_string(),
            seed: s.seed,
            repetitions: s.repetitions,
            mean_rounds,
            max_rounds,
            mean_messages,
            max_messages,
            mean_bits,
            max_bits,
            mean_messages_nonfaulty: mean(records.iter().map(|r| r.metrics.messages_nonfaulty)),
            passed,
            failed: records.len() as u64 - passed,
        }
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(dir))?;
    tmp.write_all(contents).map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn record_path(dir: &Path, rep: u64) -> PathBuf {
    dir.join(format!("run-{rep:04}.json"))
}

pub fn write_records(dir: &Path, records: &[RunRecord]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    for r in records {
        write_atomic(&record_path(dir, r.repetition), r.to_json().as_bytes())?;
    }
    Ok(())
}

pub fn read_record(path: &Path) -> Result<(RunRecord, String), CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let record = serde_json::from_str(&text).map_err(|source| CliError::Record { path: path.to_path_buf(), source })?;
    Ok((record, text))
}

pub fn write_table(path: &Path, rows: &[AggregateRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.into_error() })?;
    write_atomic(path, &bytes)
}

pub fn read_table(path: &Path) -> Result<Vec<AggregateRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Least-squares slope of `mean_rounds` against `t`; `None` with fewer than
/// two distinct `t` values.
pub fn rounds_slope(rows: &[AggregateRow]) -> Option<f64> {
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r.t as f64).sum::<f64>() / k;
    let my = rows.iter().map(|r| r.mean_rounds).sum::<f64>() / k;
    let sxx: f64 = rows.iter().map(|r| (r.t as f64 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.t as f64 - mx) * (r.mean_rounds - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
