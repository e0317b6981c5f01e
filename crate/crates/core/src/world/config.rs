//! Scenario parameters.
//!
//! A scenario is read from a JSON document whose keys mirror the field names
//! below. Every field has a default, so a minimal document may be `{}`;
//! unknown keys are rejected so that typos in sweep scripts fail loudly.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::transport::LinkSpec;

/// One population center of the polycentric density law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterSpec {
    /// `[row, col]` in cell coordinates; fractional positions are allowed.
    pub position: [f64; 2],
    /// Peak workers per cell.
    pub amplitude: f64,
    /// Density decay per km.
    pub gradient: f64,
    /// Multiplier applied to `amplitude` for the job density of this center.
    #[serde(default = "one")]
    pub job_weight: f64,
    /// Category split of the workers generated by this center.
    pub worker_mix: Vec<f64>,
    /// Category split of the jobs generated by this center.
    pub job_mix: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl CenterSpec {
    pub fn row(&self) -> f64 {
        self.position[0]
    }

    pub fn col(&self) -> f64 {
        self.position[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportParams {
    /// Speed on the uncongested local roads, km/h.
    pub v_local: f64,
    /// Free-flow speed of regional links, km/h.
    pub v_link: f64,
    /// Link capacity, vehicles per step.
    pub capacity: f64,
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            v_local: 30.0,
            v_link: 90.0,
            capacity: 1500.0,
            bpr_alpha: 0.15,
            bpr_beta: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FurnessParams {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FurnessParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cell_size_km: f64,
    /// Number of socio-professional categories.
    pub categories: usize,
    pub centers: Vec<CenterSpec>,
    pub total_workers: f64,
    pub total_jobs: f64,
    /// Distance aversion of the gravity distribution, per hour.
    pub lambda: f64,
    /// Accessibility decay, per hour.
    pub nu: f64,
    /// Accessibility exponent of the Cobb-Douglas utility.
    pub gamma: f64,
    /// Logit sensitivity of relocation.
    pub mu: f64,
    /// Share of infrastructure decisions taken by a mayor.
    pub xi: f64,
    /// Worker-worker proximity exponents, `m[s][s']`.
    pub m: Vec<Vec<f64>>,
    /// Worker-job proximity exponents, `m_prime[s][s']`.
    pub m_prime: Vec<Vec<f64>>,
    pub relocation_fraction: f64,
    pub landuse_enabled: bool,
    /// Number of steps, i.e. infrastructures to build.
    pub steps: usize,
    pub transport: TransportParams,
    pub furness: FurnessParams,
    pub assignment_iterations: usize,
    /// Chebyshev radius (cells) for links joining two existing network nodes.
    pub network_extension_radius: usize,
    /// Run full congested assignment when evaluating each candidate link.
    pub congestion_in_evaluation: bool,
    /// Links present before the first step.
    pub initial_links: Vec<LinkSpec>,
    /// Replaces the job totals used to weight the mayor draw.
    pub mayor_weights: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mix = vec![0.5, 0.5];
        let center = |row: f64, col: f64, amplitude: f64| CenterSpec {
            position: [row, col],
            amplitude,
            gradient: 0.5,
            job_weight: 1.0,
            worker_mix: mix.clone(),
            job_mix: mix.clone(),
        };
        Self {
            grid_rows: 10,
            grid_cols: 10,
            cell_size_km: 2.0,
            categories: 2,
            centers: vec![center(4.5, 2.0, 100.0), center(4.5, 7.0, 300.0)],
            total_workers: 10_000.0,
            total_jobs: 10_000.0,
            lambda: 1.0,
            nu: 2.0,
            gamma: 0.5,
            mu: 0.05,
            xi: 0.5,
            m: vec![vec![-0.1, 0.05], vec![0.05, -0.1]],
            m_prime: vec![vec![0.05, 0.0], vec![0.0, 0.05]],
            relocation_fraction: 0.1,
            landuse_enabled: true,
            steps: 6,
            transport: TransportParams::default(),
            furness: FurnessParams::default(),
            assignment_iterations: 4,
            network_extension_radius: 3,
            congestion_in_evaluation: false,
            initial_links: Vec::new(),
            mayor_weights: None,
        }
    }
}

fn check(ok: bool, field: &str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, reason()))
    }
}

fn unit_interval(value: f64, field: &str) -> Result<(), ConfigError> {
    check((0.0..=1.0).contains(&value), field, || {
        format!("must lie in [0, 1], got {value}")
    })
}

fn nonneg(value: f64, field: &str) -> Result<(), ConfigError> {
    check(value.is_finite() && value >= 0.0, field, || {
        format!("must be finite and >= 0, got {value}")
    })
}

fn positive(value: f64, field: &str) -> Result<(), ConfigError> {
    check(value.is_finite() && value > 0.0, field, || {
        format!("must be finite and > 0, got {value}")
    })
}

fn square(matrix: &[Vec<f64>], size: usize, field: &str) -> Result<(), ConfigError> {
    check(
        matrix.len() == size && matrix.iter().all(|row| row.len() == size),
        field,
        || format!("must be a {size}x{size} matrix"),
    )?;
    check(matrix.iter().flatten().all(|v| v.is_finite()), field, || {
        "entries must be finite".into()
    })
}

fn mix(values: &[f64], size: usize, field: &str) -> Result<(), ConfigError> {
    check(values.len() == size, field, || {
        format!("needs {size} entries, got {}", values.len())
    })?;
    check(values.iter().all(|v| v.is_finite() && *v >= 0.0), field, || {
        "entries must be finite and >= 0".into()
    })?;
    let sum: f64 = values.iter().sum();
    check((sum - 1.0).abs() <= 1e-9, field, || {
        format!("must sum to 1, got {sum}")
    })
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn cell_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn mayor_count(&self) -> usize {
        self.centers.len()
    }

    /// Intra-cell travel time: half a cell crossed on local roads.
    pub fn intra_cell_time(&self) -> f64 {
        0.5 * self.cell_size_km / self.transport.v_local
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.grid_rows > 0, "grid_rows", || "must be positive".into())?;
        check(self.grid_cols > 0, "grid_cols", || "must be positive".into())?;
        positive(self.cell_size_km, "cell_size_km")?;
        check(self.categories > 0, "categories", || "must be positive".into())?;
        check(!self.centers.is_empty(), "centers", || "must not be empty".into())?;
        for (i, center) in self.centers.iter().enumerate() {
            let field = |name: &str| format!("centers[{i}].{name}");
            let [row, col] = center.position;
            check(
                (0.0..=(self.grid_rows - 1) as f64).contains(&row)
                    && (0.0..=(self.grid_cols - 1) as f64).contains(&col),
                &field("position"),
                || format!("[{row}, {col}] lies outside the grid"),
            )?;
            positive(center.amplitude, &field("amplitude"))?;
            positive(center.gradient, &field("gradient"))?;
            nonneg(center.job_weight, &field("job_weight"))?;
            mix(&center.worker_mix, self.categories, &field("worker_mix"))?;
            mix(&center.job_mix, self.categories, &field("job_mix"))?;
        }
        nonneg(self.total_workers, "total_workers")?;
        nonneg(self.total_jobs, "total_jobs")?;
        nonneg(self.lambda, "lambda")?;
        nonneg(self.nu, "nu")?;
        unit_interval(self.gamma, "gamma")?;
        nonneg(self.mu, "mu")?;
        unit_interval(self.xi, "xi")?;
        square(&self.m, self.categories, "m")?;
        square(&self.m_prime, self.categories, "m_prime")?;
        unit_interval(self.relocation_fraction, "relocation_fraction")?;

        let t = &self.transport;
        positive(t.v_local, "transport.v_local")?;
        positive(t.v_link, "transport.v_link")?;
        positive(t.capacity, "transport.capacity")?;
        nonneg(t.bpr_alpha, "transport.bpr_alpha")?;
        nonneg(t.bpr_beta, "transport.bpr_beta")?;
        positive(self.furness.tolerance, "furness.tolerance")?;
        check(self.furness.max_iter > 0, "furness.max_iter", || "must be positive".into())?;
        check(self.assignment_iterations > 0, "assignment_iterations", || {
            "must be positive".into()
        })?;

        for (k, link) in self.initial_links.iter().enumerate() {
            let cells = self.cell_count();
            check(
                link.from < cells && link.to < cells && link.from != link.to,
                &format!("initial_links[{k}]"),
                || format!("endpoints ({}, {}) invalid for {cells} cells", link.from, link.to),
            )?;
            positive(link.capacity, &format!("initial_links[{k}].capacity"))?;
            positive(link.v_link, &format!("initial_links[{k}].v_link"))?;
        }
        if let Some(weights) = &self.mayor_weights {
            check(weights.len() == self.mayor_count(), "mayor_weights", || {
                format!("needs one weight per center ({})", self.mayor_count())
            })?;
            for w in weights {
                nonneg(*w, "mayor_weights")?;
            }
        }
        Ok(())
    }
}
