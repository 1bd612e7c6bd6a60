//! CSV tables, per-index summaries and JSON sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::{ExperimentConfig, MetricsRow};

/// Serializes rows to CSV bytes with a header line.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(w.into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes rows as CSV and returns the SHA-256 of the bytes written.
pub fn write_rows_csv<T: Serialize, P: AsRef<Path>>(path: P, rows: &[T]) -> Result<String> {
    let bytes = csv_bytes(rows)?;
    fs::write(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

/// Cross-seed aggregate for one ladder index; `beta` is the mean over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub ladder_index: usize,
    pub beta: f64,
    pub cells_ok: usize,
    pub avg_loglik_lsr: Option<f64>,
    pub avg_loglik_lse: Option<f64>,
    pub unique_lsr: Option<f64>,
    pub unique_lse: Option<f64>,
    pub stored_recovered_lsr: Option<f64>,
    pub stored_recovered_lse: Option<f64>,
    pub novel_count: Option<f64>,
    pub support_fraction: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Aligns seeds by ladder index and averages every metric over the cells
/// that succeeded.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<usize, Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        groups.entry(r.ladder_index).or_default().push(r);
    }
    let count = |o: Option<usize>| o.map(|v| v as f64);
    groups
        .into_iter()
        .map(|(i, g)| SummaryRow {
            ladder_index: i,
            beta: g.iter().map(|r| r.beta).sum::<f64>() / g.len() as f64,
            cells_ok: g.len(),
            avg_loglik_lsr: mean_of(g.iter().map(|r| r.avg_loglik_lsr)),
            avg_loglik_lse: mean_of(g.iter().map(|r| r.avg_loglik_lse)),
            unique_lsr: mean_of(g.iter().map(|r| count(r.unique_lsr))),
            unique_lse: mean_of(g.iter().map(|r| count(r.unique_lse))),
            stored_recovered_lsr: mean_of(g.iter().map(|r| count(r.stored_recovered_lsr))),
            stored_recovered_lse: mean_of(g.iter().map(|r| count(r.stored_recovered_lse))),
            novel_count: mean_of(g.iter().map(|r| count(r.novel_count))),
            support_fraction: mean_of(g.iter().map(|r| r.support_fraction)),
        })
        .collect()
}

/// Config echo plus content hashes of the tables it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: ExperimentConfig,
    pub library_version: String,
    pub csv_sha256: String,
    pub summary_sha256: Option<String>,
    pub rows: usize,
    pub cells_ok: usize,
}

pub fn write_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
