use ndarray::Array2;

use super::network::Network;
use super::paths::{Pred, TransportModel, TravelTimes};

/// BPR volume-delay function: `t0 (1 + alpha (flow / capacity)^beta)`.
pub fn bpr_time(t0: f64, flow: f64, capacity: f64, alpha: f64, beta: f64) -> f64 {
    t0 * (1.0 + alpha * (flow / capacity).powf(beta))
}

/// Loaded network and the travel times it induces.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub network: Network,
    pub times: TravelTimes,
}

impl TransportModel {
    /// All-or-nothing loading of `od` on least-time paths for the given link
    /// times. Flow that follows local roads loads nothing.
    pub fn load(&self, od: &Array2<f64>, network: &Network, link_times: &[f64]) -> Vec<f64> {
        let n = self.cells();
        let adj = network.adjacency(n, link_times);
        let mut loads = vec![0.0; network.len()];
        let mut carry = vec![0.0; n];
        for origin in 0..n {
            let row = od.row(origin);
            if row.iter().enumerate().all(|(j, &f)| j == origin || f == 0.0) {
                continue;
            }
            let tree = self.tree(origin, &adj);
            for (j, c) in carry.iter_mut().enumerate() {
                *c = if j == origin { 0.0 } else { row[j] };
            }
            // children settle after their parents
            for &v in tree.order.iter().rev() {
                let flow = carry[v];
                if flow == 0.0 {
                    continue;
                }
                match tree.pred[v] {
                    Pred::Root => {}
                    Pred::Local(u) => carry[u] += flow,
                    Pred::Link(u, k) => {
                        loads[k] += flow;
                        carry[u] += flow;
                    }
                }
            }
        }
        loads
    }

    /// Capacity-restrained assignment by the method of successive averages.
    ///
    /// Starts from an unloaded copy of `network`; at iteration `k` link flows
    /// move `1/k` of the way toward a fresh all-or-nothing loading, then link
    /// times are refreshed with the BPR function.
    pub fn assign_traffic(&self, od: &Array2<f64>, network: &Network) -> Assignment {
        let mut net = network.clone();
        net.reset_flows();
        let p = &self.params;
        for k in 1..=self.assignment_iterations.max(1) {
            let loads = self.load(od, &net, &net.congested_times());
            let step = 1.0 / k as f64;
            for (link, load) in net.links.iter_mut().zip(loads) {
                link.flow += step * (load - link.flow);
                link.congested_time =
                    bpr_time(link.free_flow_time(), link.flow, link.capacity, p.bpr_alpha, p.bpr_beta);
            }
        }
        let times = self.shortest_times(&net);
        Assignment {
            network: net,
            times,
        }
    }
}
