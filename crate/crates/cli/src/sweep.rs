use std::path::PathBuf;

use log::{info, warn};
use luti_core::engine::spearman;
use luti_core::{run, ConfigError, ScenarioConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{ensure_dir, render_sweep_file};
use crate::svg::sweep_means;
use crate::tables::{write_rows, SweepRow, TrendRow, SWEEP_HEADER, TREND_HEADER};
use crate::{load_config, CliError, CliResult, SweepArgs};

/// A named two-city layout: city 1 is `weight_ratio` times as dense as
/// city 0, and the centers sit `center_distance` cells apart on the middle
/// row, mirrored about the middle column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Configuration {
    pub name: String,
    pub weight_ratio: f64,
    pub center_distance: f64,
}

impl Configuration {
    pub fn new(name: &str, weight_ratio: f64, center_distance: f64) -> Self {
        Self {
            name: name.into(),
            weight_ratio,
            center_distance,
        }
    }

    pub fn apply(&self, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
        if base.centers.len() != 2 {
            return Err(ConfigError::invalid(
                "centers",
                format!("configuration `{}` needs exactly two centers", self.name),
            ));
        }
        if !(self.weight_ratio > 0.0 && self.weight_ratio.is_finite()) {
            return Err(ConfigError::invalid("weight_ratio", "must be positive"));
        }
        let mut config = base.clone();
        let row = (config.grid_rows as f64 - 1.0) / 2.0;
        let mid = (config.grid_cols as f64 - 1.0) / 2.0;
        let half = self.center_distance / 2.0;
        config.centers[0].position = [row, mid - half];
        config.centers[1].position = [row, mid + half];
        config.centers[1].amplitude = config.centers[0].amplitude * self.weight_ratio;
        config.validate()?;
        Ok(config)
    }
}

pub fn default_configurations() -> Vec<Configuration> {
    vec![
        Configuration::new("equal_near", 1.0, 3.0),
        Configuration::new("equal_far", 1.0, 5.0),
        Configuration::new("unequal_near", 3.0, 3.0),
        Configuration::new("unequal_far", 3.0, 5.0),
    ]
}

pub const DEFAULT_XI: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Scenario file the configurations start from; defaults when absent.
    pub base_config: Option<PathBuf>,
    pub xi_values: Vec<f64>,
    pub configurations: Vec<Configuration>,
    pub replications: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    #[serde(skip)]
    pub base: ScenarioConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            base_config: None,
            xi_values: DEFAULT_XI.to_vec(),
            configurations: default_configurations(),
            replications: 30,
            base_seed: 0,
            out: PathBuf::from("out"),
            base: ScenarioConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_args(args: &SweepArgs) -> CliResult<Self> {
        let mut spec = match &args.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => SweepSpec::default(),
        };
        if let Some(path) = &args.scenario.config {
            spec.base_config = Some(path.clone());
        }
        if let Some(xi) = &args.xi {
            spec.xi_values = xi.clone();
        }
        if let Some(n) = args.replications {
            spec.replications = n;
        }
        if let Some(seed) = args.seed {
            spec.base_seed = seed;
        }
        if args.spec.is_none() || args.scenario.out != PathBuf::from("out") {
            spec.out = args.scenario.out.clone();
        }
        spec.base = load_config(spec.base_config.as_deref())?;
        args.scenario.apply(&mut spec.base, None);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.xi_values.is_empty() {
            return Err(ConfigError::invalid("xi_values", "list is empty"));
        }
        if let Some(xi) = self.xi_values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(ConfigError::invalid("xi_values", format!("{xi} is outside [0, 1]")));
        }
        if self.configurations.is_empty() {
            return Err(ConfigError::invalid("configurations", "list is empty"));
        }
        if self.replications == 0 {
            return Err(ConfigError::invalid("replications", "must be at least 1"));
        }
        let mut names: Vec<&str> = self.configurations.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::invalid("configurations", "names must be unique"));
        }
        let mut base = self.base.clone();
        base.xi = 0.0;
        base.validate()
    }

    /// Configuration indices by ascending name.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.configurations.len()).collect();
        order.sort_by(|&a, &b| self.configurations[a].name.cmp(&self.configurations[b].name));
        order
    }

    /// Sweep cells in output order: configuration name, then xi, then seed,
    /// all ascending.
    pub fn cells(&self) -> Vec<(usize, f64, u64)> {
        let mut xi = self.xi_values.clone();
        xi.sort_by(f64::total_cmp);
        xi.dedup();
        let mut cells = Vec::new();
        for c in self.order() {
            for &x in &xi {
                for k in 0..self.replications as u64 {
                    cells.push((c, x, self.base_seed + k));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trends: Vec<TrendRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }
}

/// Runs every (configuration, xi, seed) cell; a failing cell becomes a row
/// with an error status rather than aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> SweepResult {
    let variants: Vec<Result<ScenarioConfig, ConfigError>> =
        spec.configurations.iter().map(|c| c.apply(&spec.base)).collect();
    let rows: Vec<SweepRow> = spec
        .cells()
        .into_par_iter()
        .map(|(c, xi, seed)| {
            let outcome = variants[c]
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|config| {
                    let mut config = config.clone();
                    config.xi = xi;
                    run(&config, seed).map_err(|e| e.to_string())
                });
            let (acc, time, status) = match outcome {
                Ok(out) => {
                    let row = out.final_row();
                    (Some(row.total_accessibility), Some(row.total_travel_time), "ok".to_string())
                }
                Err(e) => (None, None, format!("error: {e}")),
            };
            SweepRow {
                configuration: spec.configurations[c].name.clone(),
                xi,
                seed,
                total_accessibility: acc,
                total_travel_time: time,
                status,
            }
        })
        .collect();
    let means = sweep_means(&rows);
    let trends = spec
        .order()
        .into_iter()
        .map(|k| {
            let c = &spec.configurations[k];
            let points = means.get(&c.name).cloned().unwrap_or_default();
            let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
            TrendRow {
                configuration: c.name.clone(),
                weight_ratio: c.weight_ratio,
                center_distance: c.center_distance,
                points: points.len(),
                spearman: if points.len() > 1 { spearman(&xs, &ys) } else { 0.0 },
            }
        })
        .collect();
    SweepResult { rows, trends }
}

/// Writes `sweep.csv`, `trend.csv` and `sweep.svg` once every cell is done.
pub fn cmd_sweep(spec: &SweepSpec, jobs: usize) -> CliResult<()> {
    ensure_dir(&spec.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    info!(
        "sweep: {} cells on {} threads",
        spec.cells().len(),
        pool.current_num_threads()
    );
    let result = pool.install(|| run_sweep(spec));
    write_rows(&spec.out.join("sweep.csv"), SWEEP_HEADER, &result.rows)?;
    write_rows(&spec.out.join("trend.csv"), TREND_HEADER, &result.trends)?;
    render_sweep_file(&spec.out)?;
    match result.failures() {
        0 => Ok(()),
        n => {
            warn!("{n} sweep cells failed");
            Err(CliError::Failed(format!("{n} of {} sweep cells failed", result.rows.len())))
        }
    }
}
