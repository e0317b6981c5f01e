//! Batch front end: single runs, replication batches and governance sweeps,
//! written out as CSV tables and SVG plots.

pub mod commands;
pub mod svg;
pub mod sweep;
pub mod tables;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use luti_core::{ConfigError, Error, ScenarioConfig};

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "luti", version, about = "Land use / transport coevolution under multi-level governance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One seeded simulation with maps of every step.
    Run(RunArgs),
    /// Replicated runs summarized by their variation ellipse.
    Replicate(ReplicateArgs),
    /// Share-of-local-decisions sweep over several initial configurations.
    Sweep(SweepArgs),
    /// Re-render every SVG in a output directory from its CSV tables.
    Plot {
        #[arg(value_name = "DIR")]
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON; defaults apply to missing keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of infrastructures to build.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Freeze workers and jobs in place.
    #[arg(long)]
    pub disable_landuse: bool,
    /// Run the congested assignment when evaluating candidate links.
    #[arg(long)]
    pub congested_eval: bool,
    #[arg(long, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of local decisions.
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// First seed; replication k uses `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub replications: usize,
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Sweep description (JSON); flags below override its fields.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated shares of local decisions.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub xi: Option<Vec<f64>>,
    /// Worker threads for the sweep (0: all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

/// Failure carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(err) => CliError::Io(err.to_string()),
            Error::Csv(err) if err.is_io_error() => CliError::Io(err.to_string()),
            Error::Config(_) | Error::Network(_) | Error::ZeroDensity => CliError::Config(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a scenario file, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> CliResult<ScenarioConfig> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(ScenarioConfig::from_json(&text)?)
        }
    }
}

impl ScenarioArgs {
    /// Loaded scenario with the command-line overrides applied, validated.
    pub fn resolve(&self, xi: Option<f64>) -> CliResult<ScenarioConfig> {
        let mut config = load_config(self.config.as_deref())?;
        self.apply(&mut config, xi);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&self, config: &mut ScenarioConfig, xi: Option<f64>) {
        if let Some(steps) = self.steps {
            config.steps = steps;
        }
        if self.disable_landuse {
            config.landuse_enabled = false;
        }
        if self.congested_eval {
            config.congestion_in_evaluation = true;
        }
        if let Some(xi) = xi {
            config.xi = xi;
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.scenario.resolve(args.xi)?;
            commands::cmd_run(&config, args.seed, &args.scenario.out)
        }
        Command::Replicate(args) => {
            if args.replications == 0 {
                return Err(CliError::Config("`replications` must be at least 1".into()));
            }
            let config = args.scenario.resolve(args.xi)?;
            commands::cmd_replicate(&config, args.replications, args.seed, &args.scenario.out)
        }
        Command::Sweep(args) => {
            let spec = sweep::SweepSpec::from_args(&args)?;
            sweep::cmd_sweep(&spec, args.jobs)
        }
        Command::Plot { dir } => commands::cmd_plot(&dir),
    }
}
