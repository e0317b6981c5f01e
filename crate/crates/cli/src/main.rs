use std::process::ExitCode;

use clap::Parser;
use luti_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("luti: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
