//! File formats, reports and the command-line pipeline around `fsc-core`.
//!
//! A run reads a [`ChannelSpecDocument`] (JSON), executes one [`Command`]
//! and produces either a JSON [`RunReport`] or a CSV table.

pub mod document;
pub mod report;
mod run;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use document::{Channel, ChannelSpecDocument};
pub use report::RunReport;
pub use run::{run, simulate_parallel, Output};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl From<fsc_core::Error> for CliError {
    fn from(e: fsc_core::Error) -> Self {
        match e {
            fsc_core::Error::Infeasible(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "fsc", version, about = "Zero-rate error exponents of finite-state channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: Args,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Irreducibility, double irreducibility and the approach state.
    Check,
    /// Bhattacharyya distance matrix over feasible pairs (CSV).
    Distances,
    /// Maximum exponent and its maximizer.
    Optimize,
    /// Time-sharing plan on the anchor's component.
    Uce,
    /// Constant-composition codebook with expurgation.
    BuildCode,
    /// ML decoding simulation of a freshly built codebook.
    Simulate,
    /// Z(rho) on decades from 0.01 up to --rho-max (CSV).
    Zrho,
    /// Spectral bound and quantized-sinusoid bound of an ISI spec.
    IsiBound,
    /// Quantization loss against the number of levels (CSV).
    IsiLoss,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Channel specification (JSON).
    #[arg(long, global = true)]
    pub spec: Option<std::path::PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Block length.
    #[arg(long, global = true, default_value_t = 256)]
    pub n: usize,
    /// Codebook size M.
    #[arg(long, global = true, default_value_t = 4)]
    pub codewords: usize,
    /// Monte Carlo trials per codeword.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, global = true, default_value_t = 1000.0)]
    pub rho_max: f64,
    /// Solver convergence tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Random restarts for non-concave problems.
    #[arg(long, global = true, default_value_t = 32)]
    pub starts: usize,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Anchor state name for `uce` and codebooks.
    #[arg(long, global = true)]
    pub anchor: Option<String>,
    /// Fixed expurgation parameter; swept when absent.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Fixed mass on connecting arcs; swept when absent.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Use the relaxed envelope search with up to L components.
    #[arg(long, global = true)]
    pub relaxed: bool,
    /// Level counts for `isi-loss`.
    #[arg(long, global = true, value_delimiter = ',', default_value = "8,16,32")]
    pub ks: Vec<usize>,
}
