//! The stylized metropolis: grid geometry, initial densities and the fixed
//! partition of cells between mayors.

mod config;

pub use config::{CenterSpec, FurnessParams, ScenarioConfig, TransportParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square-cell grid. Cell ids are row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub cell_size_km: f64,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, cell_size_km: f64) -> Self {
        Self {
            rows,
            cols,
            cell_size_km,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self::new(config.grid_rows, config.grid_cols, config.cell_size_km)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, id: usize) -> (usize, usize) {
        (id / self.cols, id % self.cols)
    }

    /// Centroid of a cell in km, `(x, y)` with x along columns.
    pub fn centroid(&self, id: usize) -> (f64, f64) {
        let (row, col) = self.coords(id);
        self.point(row as f64, col as f64)
    }

    /// Position in km of fractional cell coordinates.
    pub fn point(&self, row: f64, col: f64) -> (f64, f64) {
        ((col + 0.5) * self.cell_size_km, (row + 0.5) * self.cell_size_km)
    }

    /// Euclidean centroid distance in km.
    pub fn distance_km(&self, a: usize, b: usize) -> f64 {
        let (xa, ya) = self.centroid(a);
        let (xb, yb) = self.centroid(b);
        (xa - xb).hypot(ya - yb)
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb).max(ca.abs_diff(cb))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    /// Workers per category.
    pub workers: Vec<f64>,
    /// Jobs per category.
    pub jobs: Vec<f64>,
    /// Index of the mayor governing this cell.
    pub territory: usize,
}

impl Cell {
    pub fn total_workers(&self) -> f64 {
        self.workers.iter().sum()
    }

    pub fn total_jobs(&self) -> f64 {
        self.jobs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metropolis {
    pub grid: Grid,
    pub categories: usize,
    pub mayors: usize,
    pub cells: Vec<Cell>,
}

/// Polycentric density at a cell: sum over centers of `A_i exp(-b_i d_i)`.
pub fn raw_density(grid: &Grid, centers: &[CenterSpec], cell: usize) -> f64 {
    let (x, y) = grid.centroid(cell);
    centers
        .iter()
        .map(|c| {
            let (cx, cy) = grid.point(c.row(), c.col());
            c.amplitude * (-c.gradient * (x - cx).hypot(y - cy)).exp()
        })
        .sum()
}

/// Builds the initial metropolis from the density law of each center.
///
/// Workers of category `s` in a cell are `sum_i mix_i[s] A_i exp(-b_i d_i)`,
/// rescaled so the grand total equals `total_workers`. Jobs follow the same
/// law with each amplitude multiplied by the center's `job_weight`.
pub fn init_metropolis(
    config: &ScenarioConfig,
    total_workers: f64,
    total_jobs: f64,
) -> Result<Metropolis> {
    config.validate()?;
    let grid = Grid::from_config(config);
    let s_count = config.categories;

    let mut workers = vec![vec![0.0; s_count]; grid.len()];
    let mut jobs = vec![vec![0.0; s_count]; grid.len()];
    for id in 0..grid.len() {
        let (x, y) = grid.centroid(id);
        for center in &config.centers {
            let (cx, cy) = grid.point(center.row(), center.col());
            let rho = center.amplitude * (-center.gradient * (x - cx).hypot(y - cy)).exp();
            for s in 0..s_count {
                workers[id][s] += center.worker_mix[s] * rho;
                jobs[id][s] += center.job_mix[s] * center.job_weight * rho;
            }
        }
    }

    let scale = |counts: &mut [Vec<f64>], target: f64| -> Result<()> {
        let raw: f64 = counts.iter().flatten().sum();
        if target == 0.0 {
            counts.iter_mut().flatten().for_each(|v| *v = 0.0);
            return Ok(());
        }
        if !(raw > 0.0) || !raw.is_finite() {
            return Err(Error::ZeroDensity);
        }
        let k = target / raw;
        counts.iter_mut().flatten().for_each(|v| *v *= k);
        Ok(())
    };
    scale(&mut workers, total_workers)?;
    scale(&mut jobs, total_jobs)?;

    let cells = workers
        .into_iter()
        .zip(jobs)
        .enumerate()
        .map(|(id, (workers, jobs))| {
            let (row, col) = grid.coords(id);
            Cell {
                id,
                row,
                col,
                workers,
                jobs,
                territory: 0,
            }
        })
        .collect();

    let mut metropolis = Metropolis {
        grid,
        categories: s_count,
        mayors: config.centers.len(),
        cells,
    };
    assign_territories(&mut metropolis, &config.centers);
    Ok(metropolis)
}

/// Assigns every cell to its nearest center (Euclidean, centroid to center);
/// equidistant cells go to the lowest center index.
pub fn assign_territories(metropolis: &mut Metropolis, centers: &[CenterSpec]) {
    let grid = metropolis.grid;
    let points: Vec<(f64, f64)> = centers.iter().map(|c| grid.point(c.row(), c.col())).collect();
    for cell in &mut metropolis.cells {
        let (x, y) = grid.centroid(cell.id);
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, (cx, cy)) in points.iter().enumerate() {
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            if d2 < best_d2 {
                best = i;
                best_d2 = d2;
            }
        }
        cell.territory = best;
    }
    metropolis.mayors = centers.len();
}

/// Total jobs in each mayor's territory.
pub fn mayor_weights(metropolis: &Metropolis) -> Vec<f64> {
    let mut y = vec![0.0; metropolis.mayors];
    for cell in &metropolis.cells {
        y[cell.territory] += cell.total_jobs();
    }
    y
}

impl Metropolis {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn territory(&self, mayor: usize) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| c.territory == mayor)
            .map(|c| c.id)
            .collect()
    }

    pub fn workers_by_category(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.categories];
        for cell in &self.cells {
            for (t, w) in totals.iter_mut().zip(&cell.workers) {
                *t += w;
            }
        }
        totals
    }

    pub fn jobs_by_category(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.categories];
        for cell in &self.cells {
            for (t, e) in totals.iter_mut().zip(&cell.jobs) {
                *t += e;
            }
        }
        totals
    }

    pub fn total_workers(&self) -> f64 {
        self.workers_by_category().iter().sum()
    }

    pub fn total_jobs(&self) -> f64 {
        self.jobs_by_category().iter().sum()
    }

    /// Worker column for category `s`, indexed by cell.
    pub fn workers_of(&self, s: usize) -> Vec<f64> {
        self.cells.iter().map(|c| c.workers[s]).collect()
    }

    pub fn jobs_of(&self, s: usize) -> Vec<f64> {
        self.cells.iter().map(|c| c.jobs[s]).collect()
    }
}
