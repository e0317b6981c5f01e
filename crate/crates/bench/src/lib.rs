//! Fixtures shared by the criterion benchmarks.

use luti_core::world::init_metropolis;
use luti_core::{Metropolis, Network, ScenarioConfig, TransportModel};

/// Default desk-scale scenario with a small hand-placed network.
pub fn fixture() -> (ScenarioConfig, Metropolis, TransportModel, Network) {
    let config = ScenarioConfig::default();
    let metropolis = init_metropolis(&config, config.total_workers, config.total_jobs)
        .expect("default scenario is valid");
    let model = TransportModel::from_config(&config);
    let mut network = Network::new();
    let g = model.grid;
    for (a, b) in [((4, 2), (4, 3)), ((4, 3), (4, 4)), ((4, 6), (4, 7)), ((5, 7), (4, 7))] {
        network
            .add_link(&g, g.id(a.0, a.1), g.id(b.0, b.1), config.transport.v_link, config.transport.capacity)
            .expect("fixture links are distinct");
    }
    (config, metropolis, model, network)
}
