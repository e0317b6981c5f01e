use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{IndicatorRow, RunOutput, Snapshot};
use crate::transport::Network;
use crate::world::{Metropolis, ScenarioConfig};
use crate::Result;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// `step,total_accessibility,total_travel_time,link_count,mayor_0_objective,...`
pub fn write_history_csv<W: Write>(rows: &[IndicatorRow], mayors: usize, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = ["step", "total_accessibility", "total_travel_time", "link_count"]
        .map(String::from)
        .to_vec();
    header.extend((0..mayors).map(|i| format!("mayor_{i}_objective")));
    header.push("furness_residual".into());
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![
            r.step.to_string(),
            r.total_accessibility.to_string(),
            r.total_travel_time.to_string(),
            r.link_count.to_string(),
        ];
        record.extend(r.mayor_objectives.iter().map(f64::to_string));
        record.push(r.furness_residual.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `step,cell_id,row,col,territory,workers,jobs` for every snapshot.
pub fn write_cells_csv<W: Write>(metropolis: &Metropolis, snapshots: &[Snapshot], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["step", "cell_id", "row", "col", "territory", "workers", "jobs"])?;
    for (step, snap) in snapshots.iter().enumerate() {
        for cell in &metropolis.cells {
            w.write_record([
                step.to_string(),
                cell.id.to_string(),
                cell.row.to_string(),
                cell.col.to_string(),
                cell.territory.to_string(),
                snap.workers[cell.id].to_string(),
                snap.jobs[cell.id].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// End-of-run dump for offline checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub seed: u64,
    pub step: usize,
    pub config: ScenarioConfig,
    pub metropolis: Metropolis,
    pub network: Network,
    /// Congested travel times behind the last history row, row-major.
    pub times: Vec<Vec<f64>>,
}

impl FinalState {
    pub fn new(run: &RunOutput) -> Self {
        let times = run.state.times.as_array();
        Self {
            seed: run.seed,
            step: run.state.step,
            config: run.config.clone(),
            metropolis: run.state.metropolis.clone(),
            network: run.state.network.clone(),
            times: times.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
