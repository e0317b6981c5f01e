#![allow(dead_code)]

use luti_core::transport::{Network, TransportModel};
use luti_core::world::{Cell, Grid, Metropolis, TransportParams};
use rand::Rng;

pub const INF: f64 = f64::INFINITY;

pub fn model(rows: usize, cols: usize, cell_km: f64, v_local: f64) -> TransportModel {
    let params = TransportParams {
        v_local,
        ..TransportParams::default()
    };
    TransportModel::new(Grid::new(rows, cols, cell_km), params, 4)
}

/// Random distinct links with random speeds; duplicates are skipped.
pub fn random_network<R: Rng>(rng: &mut R, grid: &Grid, max_links: usize) -> Network {
    let mut net = Network::new();
    let n = grid.len();
    if n < 2 {
        return net;
    }
    let target = rng.random_range(0..=max_links);
    for _ in 0..target * 3 {
        if net.len() >= target {
            break;
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || net.contains(a, b) {
            continue;
        }
        let v = rng.random_range(20.0..200.0);
        let cap = rng.random_range(50.0..2000.0);
        net.add_link(grid, a, b, v, cap).unwrap();
    }
    net
}

/// Independent all-pairs oracle: Floyd-Warshall relaxation over the complete
/// straight-line local graph plus the regional edges. Zero diagonal.
pub fn floyd_warshall(grid: &Grid, v_local: f64, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let n = grid.len();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (ri, ci) = grid.coords(i);
            let (rj, cj) = grid.coords(j);
            let dx = (ci as f64 - cj as f64) * grid.cell_size_km;
            let dy = (ri as f64 - rj as f64) * grid.cell_size_km;
            d[i][j] = if i == j { 0.0 } else { dx.hypot(dy) / v_local };
        }
    }
    for &(a, b, t) in edges {
        d[a][b] = d[a][b].min(t);
        d[b][a] = d[b][a].min(t);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn edges_of(net: &Network, times: &[f64]) -> Vec<(usize, usize, f64)> {
    net.links.iter().zip(times).map(|(l, &t)| (l.a, l.b, t)).collect()
}

/// Metropolis with the given per-cell counts (categories = inner length) and
/// a left/right territory split at `split_col`.
pub fn metropolis(grid: Grid, workers: Vec<Vec<f64>>, jobs: Vec<Vec<f64>>, split_col: usize) -> Metropolis {
    let categories = workers[0].len();
    let cells = workers
        .into_iter()
        .zip(jobs)
        .enumerate()
        .map(|(id, (w, e))| {
            let (row, col) = grid.coords(id);
            Cell {
                id,
                row,
                col,
                workers: w,
                jobs: e,
                territory: usize::from(col >= split_col),
            }
        })
        .collect();
    Metropolis {
        grid,
        categories,
        mayors: 2,
        cells,
    }
}

pub fn random_metropolis<R: Rng>(rng: &mut R, grid: Grid, categories: usize) -> Metropolis {
    let n = grid.len();
    let mut draw = || -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..categories).map(|_| rng.random_range(0.0..100.0)).collect())
            .collect()
    };
    let workers = draw();
    let jobs = draw();
    metropolis(grid, workers, jobs, grid.cols / 2)
}

/// Brute-force `sum_c sum_s A_c^s sum_j E_j^s exp(-nu d_cj)` over `cells`.
pub fn brute_accessibility(m: &Metropolis, d: impl Fn(usize, usize) -> f64, nu: f64, cells: &[usize]) -> f64 {
    let mut total = 0.0;
    for &c in cells {
        for s in 0..m.categories {
            let mut x = 0.0;
            for j in 0..m.cells.len() {
                x += m.cells[j].jobs[s] * (-nu * d(c, j)).exp();
            }
            total += m.cells[c].workers[s] * x;
        }
    }
    total
}

/// Plain iterative proportional fitting of `K_ij = A_i E_j exp(-lambda d_ij)`:
/// scale rows to `A`, then columns to `E`, until both match.
pub fn ipf(a: &[f64], e: &[f64], d: &[Vec<f64>], lambda: f64, sweeps: usize) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i] * e[j] * (-lambda * d[i][j]).exp()).collect())
        .collect();
    for _ in 0..sweeps {
        for i in 0..n {
            let s: f64 = m[i].iter().sum();
            if s > 0.0 {
                let k = a[i] / s;
                m[i].iter_mut().for_each(|v| *v *= k);
            }
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| m[i][j]).sum();
            if s > 0.0 {
                let k = e[j] / s;
                (0..n).for_each(|i| m[i][j] *= k);
            }
        }
    }
    m
}
