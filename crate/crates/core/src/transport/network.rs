use serde::{Deserialize, Serialize};

use crate::error::NetworkError;
use crate::world::Grid;

/// Edge-list entry used for JSON exchange and for pre-seeding scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub v_link: f64,
}

/// A regional road between two cell centroids, traversable both ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    /// Lower cell id.
    pub a: usize,
    /// Higher cell id.
    pub b: usize,
    pub length_km: f64,
    /// km/h
    pub v_link: f64,
    /// vehicles per step
    pub capacity: f64,
    /// vehicles per step
    pub flow: f64,
    /// hours
    pub congested_time: f64,
}

impl Link {
    pub fn free_flow_time(&self) -> f64 {
        self.length_km / self.v_link
    }

    pub fn other(&self, cell: usize) -> usize {
        if cell == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Regional road network. Links are kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub links: Vec<Link>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let (a, b) = (a.min(b), a.max(b));
        self.links.iter().any(|l| l.a == a && l.b == b)
    }

    pub fn add_link(
        &mut self,
        grid: &Grid,
        a: usize,
        b: usize,
        v_link: f64,
        capacity: f64,
    ) -> Result<(), NetworkError> {
        let cells = grid.len();
        for cell in [a, b] {
            if cell >= cells {
                return Err(NetworkError::UnknownCell { cell, cells });
            }
        }
        if a == b {
            return Err(NetworkError::SelfLoop(a));
        }
        if self.contains(a, b) {
            return Err(NetworkError::DuplicateLink(a.min(b), a.max(b)));
        }
        let bad = |reason: &str| NetworkError::BadAttribute {
            a,
            b,
            reason: reason.into(),
        };
        if !(v_link.is_finite() && v_link > 0.0) {
            return Err(bad("speed must be positive"));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(bad("capacity must be positive"));
        }
        let length_km = grid.distance_km(a, b);
        self.links.push(Link {
            a: a.min(b),
            b: a.max(b),
            length_km,
            v_link,
            capacity,
            flow: 0.0,
            congested_time: length_km / v_link,
        });
        Ok(())
    }

    pub fn from_edges(grid: &Grid, edges: &[LinkSpec]) -> Result<Self, NetworkError> {
        let mut network = Network::new();
        for e in edges {
            network.add_link(grid, e.from, e.to, e.v_link, e.capacity)?;
        }
        Ok(network)
    }

    pub fn to_edges(&self) -> Vec<LinkSpec> {
        self.links
            .iter()
            .map(|l| LinkSpec {
                from: l.a,
                to: l.b,
                capacity: l.capacity,
                v_link: l.v_link,
            })
            .collect()
    }

    pub fn from_json(grid: &Grid, text: &str) -> crate::Result<Self> {
        let edges: Vec<LinkSpec> = serde_json::from_str(text)?;
        Ok(Self::from_edges(grid, &edges)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_edges()).expect("edge list serializes")
    }

    /// Whether any link touches `cell`.
    pub fn touches(&self, cell: usize) -> bool {
        self.links.iter().any(|l| l.a == cell || l.b == cell)
    }

    /// Cells touched by at least one link, ascending.
    pub fn nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.links.iter().flat_map(|l| [l.a, l.b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Drops loads and restores free-flow times.
    pub fn reset_flows(&mut self) {
        for link in &mut self.links {
            link.flow = 0.0;
            link.congested_time = link.free_flow_time();
        }
    }

    pub fn free_flow_times(&self) -> Vec<f64> {
        self.links.iter().map(Link::free_flow_time).collect()
    }

    pub fn congested_times(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.congested_time).collect()
    }

    /// Per-cell adjacency `(neighbor, time, link index)` with the given link times.
    pub(crate) fn adjacency(&self, cells: usize, times: &[f64]) -> Vec<Vec<(usize, f64, usize)>> {
        let mut adj = vec![Vec::new(); cells];
        for (k, (link, &t)) in self.links.iter().zip(times).enumerate() {
            adj[link.a].push((link.b, t, k));
            adj[link.b].push((link.a, t, k));
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn links_are_unordered_and_unique() {
        let grid = Grid::new(3, 3, 1.0);
        let mut net = Network::new();
        net.add_link(&grid, 4, 1, 60.0, 100.0).unwrap();
        assert!(net.contains(1, 4));
        assert!(net.contains(4, 1));
        assert!(matches!(
            net.add_link(&grid, 1, 4, 60.0, 100.0),
            Err(NetworkError::DuplicateLink(1, 4))
        ));
        assert!(matches!(
            net.add_link(&grid, 2, 2, 60.0, 100.0),
            Err(NetworkError::SelfLoop(2))
        ));
        assert!(matches!(
            net.add_link(&grid, 2, 9, 60.0, 100.0),
            Err(NetworkError::UnknownCell { cell: 9, .. })
        ));
        assert!(net.add_link(&grid, 0, 1, 60.0, 0.0).is_err());
        let link = &net.links[0];
        assert_eq!((link.a, link.b), (1, 4));
        assert_eq!(link.length_km, 1.0);
        assert_eq!(link.congested_time, link.free_flow_time());
    }

    #[test]
    fn edge_list_json_round_trip() {
        let grid = Grid::new(4, 4, 2.0);
        let mut net = Network::new();
        net.add_link(&grid, 0, 5, 90.0, 1000.0).unwrap();
        net.add_link(&grid, 5, 6, 70.0, 800.0).unwrap();
        let text = net.to_json();
        assert!(text.contains("\"from\""));
        let back = Network::from_json(&grid, &text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.nodes(), vec![0, 5, 6]);
    }
}
