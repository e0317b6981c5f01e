use std::path::Path;

use log::info;
use luti_core::engine::{write_cells_csv, write_history_csv, RunFinal};
use luti_core::governance::write_decisions_csv;
use luti_core::{replicate_runs, run, ReplicationStats, RunOutput, ScenarioConfig};

use crate::svg::{render_ellipse, render_map, render_sweep};
use crate::tables::{
    self, create, read_rows, write_rows, write_text, CellRow, LinkRow, RunRow, SummaryRow, SweepRow, LINKS_HEADER,
    RUNS_HEADER, SUMMARY_HEADER,
};
use crate::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Every link of the final network with the step that built it.
pub fn link_rows(out: &RunOutput) -> Vec<LinkRow> {
    let built: Vec<(usize, usize, usize)> = out
        .decisions()
        .iter()
        .filter_map(|d| d.chosen.map(|c| (c.a, c.b, d.step)))
        .collect();
    out.state
        .network
        .links
        .iter()
        .map(|l| {
            let step_built = built
                .iter()
                .find(|&&(a, b, _)| (a, b) == (l.a, l.b))
                .map_or(0, |&(.., s)| s);
            LinkRow {
                a: l.a,
                b: l.b,
                step_built,
            }
        })
        .collect()
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(std::io::BufWriter<std::fs::File>) -> luti_core::Result<()>,
{
    f(create(path)?).map_err(|e| match e {
        luti_core::Error::Config(_) => CliError::from(e),
        other => CliError::io(path, other),
    })
}

pub fn write_history(out: &RunOutput, path: &Path) -> CliResult<()> {
    write_with(path, |w| write_history_csv(out.history(), out.state.metropolis.mayors, w))
}

/// `history.csv`, `decisions.csv`, `cells.csv`, `links.csv`,
/// `final_state.json` and one `map_step_{k}.svg` per history row.
pub fn cmd_run(config: &ScenarioConfig, seed: u64, dir: &Path) -> CliResult<()> {
    ensure_dir(dir)?;
    let out = run(config, seed)?;
    write_history(&out, &dir.join("history.csv"))?;
    write_with(&dir.join("decisions.csv"), |w| write_decisions_csv(out.decisions(), w))?;
    write_with(&dir.join("cells.csv"), |w| {
        write_cells_csv(&out.state.metropolis, &out.state.snapshots, w)
    })?;
    write_rows(&dir.join("links.csv"), LINKS_HEADER, &link_rows(&out))?;
    write_text(&dir.join("final_state.json"), &out.final_state().to_json())?;
    render_maps(dir)?;
    info!("seed {seed}: {} steps written to {}", out.state.step, dir.display());
    Ok(())
}

fn render_maps(dir: &Path) -> CliResult<usize> {
    let cells: Vec<CellRow> = read_rows(&dir.join("cells.csv"))?;
    let links: Vec<LinkRow> = read_rows(&dir.join("links.csv"))?;
    let last = cells.iter().map(|c| c.step).max().unwrap_or(0);
    for step in 0..=last {
        write_text(&dir.join(format!("map_step_{step}.svg")), &render_map(&cells, &links, step))?;
    }
    Ok(last + 1)
}

pub fn summary_row(stats: &ReplicationStats) -> SummaryRow {
    SummaryRow {
        n: stats.n,
        mean_accessibility: stats.mean[0],
        mean_travel_time: stats.mean[1],
        cov_aa: stats.covariance[0][0],
        cov_at: stats.covariance[0][1],
        cov_tt: stats.covariance[1][1],
        ellipse_major: stats.ellipse.major,
        ellipse_minor: stats.ellipse.minor,
        ellipse_angle: stats.ellipse.angle,
    }
}

/// `replicate_summary.csv`, `replicate_runs.csv`, `runs/history_seed_{s}.csv`
/// and `ellipse.svg`.
pub fn cmd_replicate(config: &ScenarioConfig, n: usize, base_seed: u64, dir: &Path) -> CliResult<()> {
    ensure_dir(&dir.join("runs"))?;
    let runs = replicate_runs(config, n, base_seed)?;
    for out in &runs {
        write_history(out, &dir.join("runs").join(format!("history_seed_{}.csv", out.seed)))?;
    }
    let finals: Vec<RunFinal> = runs.iter().map(RunFinal::of).collect();
    let stats = ReplicationStats::from_finals(&finals);
    let rows: Vec<RunRow> = stats
        .finals
        .iter()
        .map(|f| RunRow {
            seed: f.seed,
            total_accessibility: f.total_accessibility,
            total_travel_time: f.total_travel_time,
        })
        .collect();
    write_rows(&dir.join("replicate_runs.csv"), RUNS_HEADER, &rows)?;
    write_rows(&dir.join("replicate_summary.csv"), SUMMARY_HEADER, &[summary_row(&stats)])?;
    render_ellipse_file(dir)?;
    Ok(())
}

fn render_ellipse_file(dir: &Path) -> CliResult<()> {
    let summary: Vec<SummaryRow> = read_rows(&dir.join("replicate_summary.csv"))?;
    let runs: Vec<RunRow> = read_rows(&dir.join("replicate_runs.csv"))?;
    let summary = summary
        .first()
        .ok_or_else(|| CliError::Failed("replicate_summary.csv holds no row".into()))?;
    write_text(&dir.join("ellipse.svg"), &render_ellipse(summary, &runs))
}

pub fn render_sweep_file(dir: &Path) -> CliResult<()> {
    let rows: Vec<SweepRow> = tables::read_rows(&dir.join("sweep.csv"))?;
    write_text(&dir.join("sweep.svg"), &render_sweep(&rows))
}

/// Redraws whichever plots the tables in `dir` support.
pub fn cmd_plot(dir: &Path) -> CliResult<()> {
    let mut drawn = 0;
    if dir.join("cells.csv").exists() && dir.join("links.csv").exists() {
        drawn += render_maps(dir)?;
    }
    if dir.join("replicate_summary.csv").exists() {
        render_ellipse_file(dir)?;
        drawn += 1;
    }
    if dir.join("sweep.csv").exists() {
        render_sweep_file(dir)?;
        drawn += 1;
    }
    if drawn == 0 {
        return Err(CliError::io(dir, "no plottable tables found"));
    }
    Ok(())
}
