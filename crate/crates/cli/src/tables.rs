//! Typed rows of the CSV outputs; the plots are drawn from these alone.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const LINKS_HEADER: &[&str] = &["a", "b", "step_built"];
pub const RUNS_HEADER: &[&str] = &["seed", "total_accessibility", "total_travel_time"];
pub const SUMMARY_HEADER: &[&str] = &[
    "n",
    "mean_accessibility",
    "mean_travel_time",
    "cov_aa",
    "cov_at",
    "cov_tt",
    "ellipse_major",
    "ellipse_minor",
    "ellipse_angle",
];
pub const SWEEP_HEADER: &[&str] = &[
    "configuration",
    "xi",
    "seed",
    "total_accessibility",
    "total_travel_time",
    "status",
];
pub const TREND_HEADER: &[&str] = &["configuration", "weight_ratio", "center_distance", "points", "spearman"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub step: usize,
    pub cell_id: usize,
    pub row: usize,
    pub col: usize,
    pub territory: usize,
    pub workers: f64,
    pub jobs: f64,
}

/// A regional link and the step that built it (0 for the starting network).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub a: usize,
    pub b: usize,
    pub step_built: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub total_accessibility: f64,
    pub total_travel_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub mean_accessibility: f64,
    pub mean_travel_time: f64,
    pub cov_aa: f64,
    pub cov_at: f64,
    pub cov_tt: f64,
    pub ellipse_major: f64,
    pub ellipse_minor: f64,
    pub ellipse_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub configuration: String,
    pub xi: f64,
    pub seed: u64,
    pub total_accessibility: Option<f64>,
    pub total_travel_time: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub configuration: String,
    pub weight_ratio: f64,
    pub center_distance: f64,
    pub points: usize,
    pub spearman: f64,
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes `header` then `rows`; the header is present even with no rows.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
