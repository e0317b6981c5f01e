//! Seeded simulation loop and replication batches.
//!
//! A step runs, in order: demand and gravity distribution on the previous
//! travel times, congested assignment, land-use relocation (when enabled),
//! one governance decision, and the indicator snapshot. The indicator
//! snapshot redistributes trips on the grown network and reassigns them, so
//! each history row reflects the network as it stands after that step's
//! build.

mod export;
mod stats;

pub use export::{write_cells_csv, write_history_csv, FinalState};
pub use stats::{spearman, Ellipse, ReplicationStats, RunFinal};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::governance::{decide_and_build, objective, select_stakeholder, DecisionRecord, EvaluationContext, Stakeholder};
use crate::landuse::{relocate, score_cells, ScoreParams};
use crate::transport::{distribute, total_travel_time, Network, OdMatrix, TransportModel, TravelTimes};
use crate::world::{init_metropolis, mayor_weights, Metropolis, ScenarioConfig};

/// Indicators recorded after every step (row 0 is the initial state).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorRow {
    pub step: usize,
    /// Sum over cells of worker accessibility, on congested times.
    pub total_accessibility: f64,
    /// Sum of flow times travel time, hours.
    pub total_travel_time: f64,
    pub link_count: usize,
    pub mayor_objectives: Vec<f64>,
    /// Largest Furness marginal error of the distribution behind this row.
    pub furness_residual: f64,
}

/// Per-cell worker and job totals at one history row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub workers: Vec<f64>,
    pub jobs: Vec<f64>,
}

impl Snapshot {
    fn of(metropolis: &Metropolis) -> Self {
        Self {
            workers: metropolis.cells.iter().map(|c| c.total_workers()).collect(),
            jobs: metropolis.cells.iter().map(|c| c.total_jobs()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub metropolis: Metropolis,
    /// Network carrying the flows of the latest assignment.
    pub network: Network,
    /// Congested travel times of the latest assignment.
    pub times: TravelTimes,
    pub step: usize,
    rng: ChaCha8Rng,
    pub history: Vec<IndicatorRow>,
    pub decisions: Vec<DecisionRecord>,
    pub snapshots: Vec<Snapshot>,
}

pub struct Simulation {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub model: TransportModel,
    pub state: SimState,
}

impl Simulation {
    /// Builds the initial world, the configured starting network, and the
    /// step-0 indicator row. Consumes no random draws.
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let metropolis = init_metropolis(config, config.total_workers, config.total_jobs)?;
        let model = TransportModel::from_config(config);
        let network = Network::from_edges(&model.grid, &config.initial_links)?;
        let times = model.free_flow_times(&network);
        let state = SimState {
            metropolis,
            network,
            times,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
            decisions: Vec::new(),
            snapshots: Vec::new(),
        };
        let mut sim = Self {
            seed,
            config: config.clone(),
            model,
            state,
        };
        sim.record();
        Ok(sim)
    }

    fn distribute(&self) -> OdMatrix {
        let od = distribute(
            &self.state.metropolis,
            &self.state.times,
            self.config.lambda,
            &self.config.furness,
        );
        if !od.converged() {
            warn!("step {}: distribution residual {:.3e}", self.state.step, od.max_residual());
        }
        od
    }

    /// Distribution on the current times, assignment on the current network,
    /// then one indicator row.
    fn record(&mut self) {
        let od = self.distribute();
        let assignment = self.model.assign_traffic(&od.total(), &self.state.network);
        self.state.network = assignment.network;
        self.state.times = assignment.times;

        let m = &self.state.metropolis;
        let nu = self.config.nu;
        let mayor_objectives: Vec<f64> = (0..m.mayors)
            .map(|i| objective(m, &self.state.times, Stakeholder::Mayor(i), nu))
            .collect();
        let row = IndicatorRow {
            step: self.state.step,
            total_accessibility: objective(m, &self.state.times, Stakeholder::Governor, nu),
            total_travel_time: total_travel_time(&od, &self.state.times),
            link_count: self.state.network.len(),
            mayor_objectives,
            furness_residual: od.max_residual(),
        };
        self.state.snapshots.push(Snapshot::of(m));
        self.state.history.push(row);
    }

    pub fn step(&mut self) {
        let config = &self.config;
        self.state.step += 1;

        let od = self.distribute();
        let assignment = self.model.assign_traffic(&od.total(), &self.state.network);
        self.state.network = assignment.network;
        self.state.times = assignment.times;

        if config.landuse_enabled {
            let params = ScoreParams {
                nu: config.nu,
                gamma: config.gamma,
                mu: config.mu,
                m: &config.m,
                m_prime: &config.m_prime,
            };
            let scores = score_cells(&self.state.metropolis, &self.state.times, &params);
            self.state.metropolis = relocate(
                &self.state.metropolis,
                &scores,
                config.relocation_fraction,
                &mut self.state.rng,
            );
        }

        let weights = match &config.mayor_weights {
            Some(w) => w.clone(),
            None => mayor_weights(&self.state.metropolis),
        };
        let (stakeholder, draws) = select_stakeholder(config.xi, &weights, &mut self.state.rng);
        let ctx = EvaluationContext {
            metropolis: &self.state.metropolis,
            model: &self.model,
            nu: config.nu,
            od: &od,
            congested: config.congestion_in_evaluation,
        };
        let (network, mut record) = decide_and_build(
            &ctx,
            &self.state.network,
            stakeholder,
            config.network_extension_radius,
        );
        record.step = self.state.step;
        record.draws = draws;
        self.state.network = network;
        self.state.decisions.push(record);

        self.record();
    }

    pub fn run_to_end(mut self) -> RunOutput {
        for _ in 0..self.config.steps {
            self.step();
        }
        RunOutput {
            seed: self.seed,
            config: self.config,
            state: self.state,
        }
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub state: SimState,
}

impl RunOutput {
    pub fn history(&self) -> &[IndicatorRow] {
        &self.state.history
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.state.decisions
    }

    pub fn final_row(&self) -> &IndicatorRow {
        self.state.history.last().expect("history holds the initial row")
    }

    pub fn final_state(&self) -> FinalState {
        FinalState::new(self)
    }
}

/// Runs `config.steps` steps from a fresh world.
pub fn run(config: &ScenarioConfig, seed: u64) -> Result<RunOutput> {
    Ok(Simulation::new(config, seed)?.run_to_end())
}

/// Runs seeds `base_seed .. base_seed + n` in parallel, returned in seed order.
pub fn replicate_runs(config: &ScenarioConfig, n: usize, base_seed: u64) -> Result<Vec<RunOutput>> {
    config.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|k| run(config, base_seed + k))
        .collect()
}

/// Mean, covariance and 1-sigma ellipse of the final indicators over `n` seeds.
pub fn replicate(config: &ScenarioConfig, n: usize, base_seed: u64) -> Result<ReplicationStats> {
    let runs = replicate_runs(config, n, base_seed)?;
    let finals: Vec<RunFinal> = runs.iter().map(RunFinal::of).collect();
    Ok(ReplicationStats::from_finals(&finals))
}
