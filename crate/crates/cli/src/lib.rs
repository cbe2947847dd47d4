//! Command-line front end for `ris-coverage`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 selftest failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ris_coverage::sinr::IntensityConvention;

pub mod commands;
pub mod config;
pub mod output;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("selftest failed")]
    SelfTest,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::SelfTest => 4,
        }
    }
}

impl From<ris_coverage::Error> for CliError {
    fn from(e: ris_coverage::Error) -> Self {
        match e {
            ris_coverage::Error::InvalidParameter(_) | ris_coverage::Error::LowAcceptance { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ris-coverage", version, about = "RIS street coverage experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON). The built-in reference experiment is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials (also sets the dependent-MC configuration count).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output CSV; stdout when neither this nor the config names one.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use lambda g1/(g1+g2) for the interferers of the independence-model MC.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub use_thinned_intensity: Option<bool>,
    /// Draw a fresh interferer field for every dependent-MC configuration.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub resample_phi: Option<bool>,
    /// Count the free stretch at the origin in the simulated covered length.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub include_gap0: Option<bool>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mean covered length by both analytic routes, the approximation and Monte Carlo.
    MeanLength,
    /// Coverage probability against the SINR threshold.
    SinrSweep,
    /// Dump one sampled obstacle environment.
    EnvSample,
    /// Run the built-in numerical checks.
    Selftest,
}

impl Cli {
    /// Config with command-line overrides applied.
    pub fn effective_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::reference(),
        };
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        if let Some(n) = self.trials {
            cfg.mc.n_trials = n;
            cfg.mc.n_configs = Some(n);
        }
        if let Some(t) = self.use_thinned_intensity {
            cfg.sinr.intensity_convention = if t { IntensityConvention::Thinned } else { IntensityConvention::Raw };
        }
        if let Some(v) = self.resample_phi {
            cfg.sinr.resample_phi = v;
        }
        if let Some(v) = self.include_gap0 {
            cfg.mc.include_gap0 = v;
        }
        Ok(cfg)
    }

    fn execute(&self) -> Result<(), CliError> {
        if self.command == Command::Selftest {
            let (csv, report) = commands::selftest();
            if let Some(out) = &self.out {
                csv.emit(Some(out))?;
            }
            return if report.passed() { Ok(()) } else { Err(CliError::SelfTest) };
        }
        let cfg = self.effective_config()?;
        let resolved = cfg.resolve()?;
        let csv = match self.command {
            Command::MeanLength => commands::mean_length(&resolved)?,
            Command::SinrSweep => commands::sinr_sweep(&resolved)?,
            Command::EnvSample => commands::env_sample(&resolved)?,
            Command::Selftest => unreachable!(),
        };
        csv.emit(self.out.as_deref().or(cfg.output.as_deref()))
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| cli.execute()),
            Err(e) => Err(CliError::Config(format!("cannot start {n} threads: {e}"))),
        },
        None => cli.execute(),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
