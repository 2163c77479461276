//! `everting` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod synth;

#[derive(Debug, Parser)]
#[command(name = "everting", version, about = "Model, fit and simulate an everting helical-ring robot")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; recorded in output headers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict a trajectory at one γ.
    Predict(commands::PredictArgs),
    /// Fit parameter curves from marker tracks recorded at several γ.
    Fit(commands::FitArgs),
    /// Run an arena scenario.
    Simulate(commands::SimulateArgs),
    /// Extract motion parameters from one marker track.
    Analyze(commands::AnalyzeArgs),
    /// Serve live steering sessions.
    Serve(commands::ServeArgs),
    /// Write a synthetic marker track with seeded noise.
    Synth(synth::SynthArgs),
}

/// Where motion parameters come from.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Mass distribution angle γ in degrees (with --curves).
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Parameter curves JSON written by `fit`.
    #[arg(long, conflicts_with = "params")]
    pub curves: Option<PathBuf>,
    /// Fixed parameters.
    #[arg(long, value_name = "DPHI_DEG,DX,T,BETA_DEG", allow_hyphen_values = true)]
    pub params: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_error!(
    everting::config::ConfigError,
    everting::ingest::IngestError,
    everting::estimation::EstimationError,
    everting::kinematics::KinematicsError,
    everting::arena::ArenaError,
    everting::model::ModelError,
    everting_steer::SteerError
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::load_config(cli.config.as_deref(), cli.seed).and_then(|cfg| match cli.command {
        Command::Predict(a) => commands::predict(&cfg, a),
        Command::Fit(a) => commands::fit(&cfg, a),
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Analyze(a) => commands::analyze(&cfg, a),
        Command::Serve(a) => commands::serve(&cfg, a),
        Command::Synth(a) => synth::run(&cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
