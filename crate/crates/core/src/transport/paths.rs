use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::world::{Grid, ScenarioConfig, TransportParams};

/// Zone-to-zone travel times in hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    times: Array2<f64>,
    symmetric: bool,
}

impl TravelTimes {
    pub fn new(times: Array2<f64>) -> Self {
        assert_eq!(times.nrows(), times.ncols(), "travel times must be square");
        let n = times.nrows();
        let symmetric = (0..n).all(|i| (0..i).all(|j| times[[i, j]] == times[[j, i]]));
        Self { times, symmetric }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.times[[i, j]]
    }

    pub fn len(&self) -> usize {
        self.times.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.times
    }
}

/// How a node was reached in a shortest-path tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pred {
    Root,
    Local(usize),
    Link(usize, usize),
}

pub(crate) struct ShortestTree {
    pub dist: Vec<f64>,
    pub pred: Vec<Pred>,
    /// Nodes in the order they were settled.
    pub order: Vec<usize>,
}

/// Road supply: the uncongested local grid (straight-line travel at
/// `v_local`) plus whatever regional network is passed in.
#[derive(Debug, Clone)]
pub struct TransportModel {
    pub grid: Grid,
    pub params: TransportParams,
    pub assignment_iterations: usize,
    /// As-the-crow-flies times between centroids, zero diagonal.
    afc: Array2<f64>,
    intra_cell: f64,
}

impl TransportModel {
    pub fn new(grid: Grid, params: TransportParams, assignment_iterations: usize) -> Self {
        let n = grid.len();
        let afc = Array2::from_shape_fn((n, n), |(i, j)| grid.distance_km(i, j) / params.v_local);
        let intra_cell = 0.5 * grid.cell_size_km / params.v_local;
        Self {
            grid,
            params,
            assignment_iterations,
            afc,
            intra_cell,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self::new(
            Grid::from_config(config),
            config.transport.clone(),
            config.assignment_iterations,
        )
    }

    pub fn cells(&self) -> usize {
        self.grid.len()
    }

    pub fn afc_time(&self, i: usize, j: usize) -> f64 {
        self.afc[[i, j]]
    }

    /// Floor used for `d_ii`.
    pub fn intra_cell_time(&self) -> f64 {
        self.intra_cell
    }

    /// Dense Dijkstra from `source` over the complete local-road graph plus
    /// regional links.
    pub(crate) fn tree(&self, source: usize, adj: &[Vec<(usize, f64, usize)>]) -> ShortestTree {
        let n = self.cells();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![Pred::Root; n];
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        dist[source] = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut du = f64::INFINITY;
            for v in 0..n {
                if !done[v] && dist[v] < du {
                    du = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            order.push(u);
            let row = self.afc.row(u);
            for v in 0..n {
                if !done[v] {
                    let nd = du + row[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        pred[v] = Pred::Local(u);
                    }
                }
            }
            for &(v, t, k) in &adj[u] {
                if !done[v] {
                    let nd = du + t;
                    if nd < dist[v] {
                        dist[v] = nd;
                        pred[v] = Pred::Link(u, k);
                    }
                }
            }
        }
        ShortestTree { dist, pred, order }
    }

    /// All-pairs least times with the given per-link times, zero diagonal.
    pub fn path_matrix(&self, network: &Network, link_times: &[f64]) -> Array2<f64> {
        let n = self.cells();
        let adj = network.adjacency(n, link_times);
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            let tree = self.tree(i, &adj);
            for (j, d) in tree.dist.into_iter().enumerate() {
                out[[i, j]] = d;
            }
        }
        out
    }

    /// Applies the intra-cell floor to a raw path matrix.
    pub fn finalize(&self, mut raw: Array2<f64>) -> TravelTimes {
        for i in 0..raw.nrows() {
            raw[[i, i]] = self.intra_cell;
        }
        TravelTimes::new(raw)
    }

    /// Travel times using each link's current congested time.
    pub fn shortest_times(&self, network: &Network) -> TravelTimes {
        self.finalize(self.path_matrix(network, &network.congested_times()))
    }

    /// Travel times on an unloaded network.
    pub fn free_flow_times(&self, network: &Network) -> TravelTimes {
        self.finalize(self.path_matrix(network, &network.free_flow_times()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: usize, cols: usize) -> TransportModel {
        TransportModel::new(Grid::new(rows, cols, 2.0), TransportParams::default(), 4)
    }

    #[test]
    fn empty_network_is_straight_line() {
        let m = model(4, 4);
        let d = m.shortest_times(&Network::new());
        for i in 0..16 {
            for j in 0..16 {
                if i == j {
                    assert_eq!(d.get(i, i), m.intra_cell_time());
                } else {
                    assert_eq!(d.get(i, j), m.afc_time(i, j));
                }
            }
        }
        assert!(d.is_symmetric());
    }

    #[test]
    fn fast_link_along_segment_is_used() {
        let m = model(3, 3);
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 2, 90.0, 1000.0).unwrap();
        let d = m.shortest_times(&net);
        assert!((d.get(0, 2) - 4.0 / 90.0).abs() < 1e-15);
        assert!((d.get(2, 0) - 4.0 / 90.0).abs() < 1e-15);
        // cell 1 sits on the link but is not a node of it
        assert!((d.get(0, 1) - 2.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn slow_link_is_ignored() {
        let m = model(3, 3);
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 2, 10.0, 1000.0).unwrap();
        let d = m.shortest_times(&net);
        assert_eq!(d.get(0, 2), m.afc_time(0, 2));
    }

    #[test]
    fn chained_links_with_local_transfer() {
        let m = model(1, 6);
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 2, 120.0, 1000.0).unwrap();
        net.add_link(&m.grid, 3, 5, 120.0, 1000.0).unwrap();
        let d = m.shortest_times(&net);
        // 4 km fast, 2 km local, 4 km fast
        let expected = 4.0 / 120.0 + 2.0 / 30.0 + 4.0 / 120.0;
        assert!((d.get(0, 5) - expected).abs() < 1e-15);
    }
}
