//! Trip generation and doubly-constrained gravity distribution.

use log::warn;
use ndarray::Array2;
use serde::Serialize;

use super::paths::TravelTimes;
use crate::error::TransportError;
use crate::world::{FurnessParams, Metropolis};

/// Origin and destination totals of one category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryDemand {
    /// Workers per zone.
    pub origins: Vec<f64>,
    /// Jobs per zone.
    pub destinations: Vec<f64>,
    /// False when exactly one side is empty; such a category makes no trips.
    pub active: bool,
}

/// Commuting demand per category: origins are workers, destinations jobs.
pub fn generate_demand(metropolis: &Metropolis) -> Vec<CategoryDemand> {
    (0..metropolis.categories)
        .map(|s| {
            let origins = metropolis.workers_of(s);
            let destinations = metropolis.jobs_of(s);
            let out: f64 = origins.iter().sum();
            let inn: f64 = destinations.iter().sum();
            let active = (out > 0.0) == (inn > 0.0);
            if !active {
                warn!("category {s}: {out} workers but {inn} jobs; no commuting generated");
            }
            CategoryDemand {
                origins,
                destinations,
                active,
            }
        })
        .collect()
}

/// Result of balancing one gravity system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GravityFlows {
    pub flows: Array2<f64>,
    pub origins: Vec<f64>,
    pub destinations: Vec<f64>,
    pub row_factors: Vec<f64>,
    pub col_factors: Vec<f64>,
    /// Largest relative marginal error at exit.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GravityFlows {
    fn empty(n: usize) -> Self {
        Self {
            flows: Array2::zeros((n, n)),
            origins: vec![0.0; n],
            destinations: vec![0.0; n],
            row_factors: vec![0.0; n],
            col_factors: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
            converged: true,
        }
    }
}

fn relative_error(sums: impl Iterator<Item = f64>, targets: &[f64]) -> f64 {
    sums.zip(targets)
        .map(|(s, &t)| (s - t).abs() / t.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Solves `Phi_ij = p_i q_j A_i E_j exp(-lambda d_ij)` with row sums `A` and
/// column sums `E` by alternating the `p` and `q` fixed-point updates.
///
/// Stops when the largest relative marginal error drops below
/// `params.tolerance` or after `params.max_iter` sweeps; a non-converged
/// result is returned with `converged == false`.
pub fn furness_distribution(
    origins: &[f64],
    destinations: &[f64],
    times: &TravelTimes,
    lambda: f64,
    params: &FurnessParams,
) -> Result<GravityFlows, TransportError> {
    let n = times.len();
    if origins.len() != n || destinations.len() != n {
        return Err(TransportError::Dimension {
            origins: origins.len(),
            destinations: destinations.len(),
            cells: n,
        });
    }
    let total_a: f64 = origins.iter().sum();
    let total_e: f64 = destinations.iter().sum();
    if (total_a - total_e).abs() > 1e-6 * total_a.abs().max(total_e.abs()) {
        return Err(TransportError::Imbalanced {
            origins: total_a,
            destinations: total_e,
        });
    }
    if total_a == 0.0 {
        return Ok(GravityFlows::empty(n));
    }

    let deterrence = times.as_array().mapv(|d| (-lambda * d).exp());
    let mut p = vec![1.0; n];
    let mut q = vec![1.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        for i in 0..n {
            let row = deterrence.row(i);
            let denom: f64 = (0..n).map(|l| q[l] * destinations[l] * row[l]).sum();
            p[i] = if origins[i] > 0.0 && denom > 0.0 { 1.0 / denom } else { 0.0 };
        }
        for j in 0..n {
            let col = deterrence.column(j);
            let denom: f64 = (0..n).map(|k| p[k] * origins[k] * col[k]).sum();
            q[j] = if destinations[j] > 0.0 && denom > 0.0 { 1.0 / denom } else { 0.0 };
        }
        let row_sums = (0..n).map(|i| {
            let row = deterrence.row(i);
            p[i] * origins[i] * (0..n).map(|j| q[j] * destinations[j] * row[j]).sum::<f64>()
        });
        residual = relative_error(row_sums, origins);
        if residual < params.tolerance {
            break;
        }
    }

    let flows = Array2::from_shape_fn((n, n), |(i, j)| {
        p[i] * q[j] * origins[i] * destinations[j] * deterrence[[i, j]]
    });
    let col_sums: Vec<f64> = (0..n).map(|j| flows.column(j).sum()).collect();
    residual = residual.max(relative_error(col_sums.into_iter(), destinations));
    let converged = residual < params.tolerance;
    Ok(GravityFlows {
        flows,
        origins: origins.to_vec(),
        destinations: destinations.to_vec(),
        row_factors: p,
        col_factors: q,
        residual,
        iterations,
        converged,
    })
}

/// Commuting flows of every category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdMatrix {
    pub categories: Vec<GravityFlows>,
}

impl OdMatrix {
    pub fn zeros(cells: usize, categories: usize) -> Self {
        Self {
            categories: (0..categories).map(|_| GravityFlows::empty(cells)).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.categories.first().map_or(0, |c| c.flows.nrows())
    }

    /// Flows summed over categories.
    pub fn total(&self) -> Array2<f64> {
        let n = self.cells();
        self.categories
            .iter()
            .fold(Array2::zeros((n, n)), |acc, c| acc + &c.flows)
    }

    pub fn max_residual(&self) -> f64 {
        self.categories.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.categories.iter().all(|c| c.converged)
    }
}

/// Generation plus distribution on the given travel times.
///
/// Destinations are rescaled to the origin total of each category before
/// balancing; inactive categories produce no trips.
pub fn distribute(
    metropolis: &Metropolis,
    times: &TravelTimes,
    lambda: f64,
    params: &FurnessParams,
) -> OdMatrix {
    let n = metropolis.len();
    let categories = generate_demand(metropolis)
        .into_iter()
        .enumerate()
        .map(|(s, demand)| {
            if !demand.active {
                return GravityFlows::empty(n);
            }
            let total_a: f64 = demand.origins.iter().sum();
            let total_e: f64 = demand.destinations.iter().sum();
            let destinations: Vec<f64> = if total_e > 0.0 {
                demand.destinations.iter().map(|e| e * total_a / total_e).collect()
            } else {
                demand.destinations.clone()
            };
            let result = furness_distribution(&demand.origins, &destinations, times, lambda, params)
                .expect("marginals are balanced and sized to the grid");
            if !result.converged {
                warn!(
                    "category {s}: furness stopped after {} sweeps with residual {:.3e}",
                    result.iterations, result.residual
                );
            }
            result
        })
        .collect();
    OdMatrix { categories }
}

/// Sum over categories and zone pairs of `Phi_ij * d_ij`, in hours.
pub fn total_travel_time(od: &OdMatrix, times: &TravelTimes) -> f64 {
    let d = times.as_array();
    od.categories
        .iter()
        .map(|c| c.flows.iter().zip(d.iter()).map(|(f, t)| f * t).sum::<f64>())
        .sum()
}
