//! `photonchip` command-line pipelines.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 validation failure,
//! 4 convergence failure, 5 I/O failure.

mod config;
mod error;
mod output;
mod pipelines;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_alpha, ExperimentConfig};
use error::CliError;
use output::RunDir;

#[derive(Parser)]
#[command(name = "photonchip", version, about = "Heralded entangled-state chip simulation pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heralded state, success probability and fidelity per alpha.
    Generate(Common),
    /// Simulated tomography and maximum-likelihood reconstruction per alpha.
    Tomography(Common),
    /// Fit the chip model to single-photon sweep data.
    Calibrate(Common),
    /// Four-photon rate budgets and the separate-click fraction curve.
    Rates(Common),
    /// Transfer-matrix measurement with Sinkhorn-Knopp balancing.
    Characterize(Common),
    /// Check a netlist file and print a summary.
    ValidateNetlist {
        path: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "photonchip-out")]
    out: PathBuf,
    /// Entanglement parameter in radians (`0.3`, `pi/8`, ...); repeatable.
    #[arg(long, value_parser = parse_alpha)]
    alpha: Vec<f64>,
    #[arg(long)]
    shots: Option<u64>,
    /// `ideal`, `reference`, `spam`, or a chip-model JSON file.
    #[arg(long)]
    chip_model: Option<String>,
    /// Generation netlist JSON (generate only).
    #[arg(long)]
    netlist: Option<PathBuf>,
    /// Exact probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
    /// Optimize generation phases on the chip model.
    #[arg(long)]
    optimize: bool,
}

impl Common {
    fn effective_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        if !self.alpha.is_empty() {
            c.alphas = self.alpha.clone();
        }
        if self.shots.is_some() {
            c.shots = self.shots;
        }
        if let Some(m) = &self.chip_model {
            c.chip_model = m.clone();
        }
        if self.netlist.is_some() {
            c.netlist = self.netlist.clone();
        }
        c.exact |= self.exact;
        c.optimize |= self.optimize;
        Ok(c)
    }
}

type Pipeline = fn(&ExperimentConfig, &mut RunDir) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (verb, common, pipeline): (&str, Common, Pipeline) = match cli.command {
        Command::Generate(c) => ("generate", c, pipelines::generate),
        Command::Tomography(c) => ("tomography", c, pipelines::tomography),
        Command::Calibrate(c) => ("calibrate", c, pipelines::calibrate),
        Command::Rates(c) => ("rates", c, pipelines::rates),
        Command::Characterize(c) => ("characterize", c, pipelines::characterize),
        Command::ValidateNetlist { path } => return pipelines::validate_netlist(&path),
    };
    let config = common.effective_config()?;
    let mut dir = RunDir::create(&common.out)?;
    pipeline(&config, &mut dir)?;
    dir.finish(verb, &config)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(error::exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
