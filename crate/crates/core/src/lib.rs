//! Grid-based simulation of land use and transport network coevolution in a
//! two-city region, where mayors and a metropolitan governor take turns
//! building regional road links that maximize their workers' accessibility.
//!
//! Modules follow the simulation step: [`transport`] distributes and assigns
//! commuting trips, [`landuse`] relocates workers and jobs, [`governance`]
//! grows the network, and [`engine`] runs and replicates whole simulations.

pub mod engine;
pub mod error;
pub mod governance;
pub mod landuse;
pub mod transport;
pub mod world;

pub use engine::{replicate, replicate_runs, run, IndicatorRow, ReplicationStats, RunOutput, Simulation};
pub use error::{ConfigError, Error, Result};
pub use governance::{CandidateLink, DecisionRecord, Stakeholder};
pub use transport::{Network, TransportModel, TravelTimes};
pub use world::{Grid, Metropolis, ScenarioConfig};
