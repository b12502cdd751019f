//! Result serialization.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! the output recovers the exact values.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::AggregateResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub const CSV_HEADER: [&str; 6] = [
    "t",
    "regret_mean",
    "regret_std",
    "violation_fraction",
    "conservative_episode_count",
    "runs",
];

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub t: u64,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub violation_fraction: f64,
    pub conservative_episode_count: f64,
    pub runs: usize,
}

pub fn rows(result: &AggregateResult) -> Vec<ResultRow> {
    (0..result.grid.len())
        .map(|i| ResultRow {
            t: result.grid[i],
            regret_mean: result.regret_mean[i],
            regret_std: result.regret_std[i],
            violation_fraction: result.violation_fraction[i],
            conservative_episode_count: result.conservative_episodes_mean[i],
            runs: result.runs,
        })
        .collect()
}

pub fn to_csv(result: &AggregateResult) -> std::io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows(result) {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn to_json(result: &AggregateResult) -> std::io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(result)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_csv(bytes: &[u8]) -> std::io::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    r.deserialize().map(|row| row.map_err(std::io::Error::from)).collect()
}

pub fn parse_json(bytes: &[u8]) -> std::io::Result<AggregateResult> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn render(result: &AggregateResult, format: Format) -> std::io::Result<Vec<u8>> {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
    }
}

pub fn emit_results(result: &AggregateResult, format: Format, path: &Path) -> std::io::Result<()> {
    let bytes = render(result, format)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()
}
