//! Four-stage travel demand (mode choice disabled): generation, gravity
//! distribution, and congested assignment over the regional network with
//! straight-line local roads as an uncongested fallback.

mod assignment;
mod distribution;
mod network;
mod paths;

pub use assignment::{bpr_time, Assignment};
pub use distribution::{
    distribute, furness_distribution, generate_demand, total_travel_time, CategoryDemand,
    GravityFlows, OdMatrix,
};
pub use network::{Link, LinkSpec, Network};
pub use paths::{TransportModel, TravelTimes};
