//! Command-line driver: configuration, pipelines, plots and the self-test.

pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;
pub mod svg;

use clap::Parser;

use crate::config::{Command, Overrides, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fracshape", version, about = "Half-Laplacian shape energy toolkit")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Domain file: {"center":[x,y],"a0":..,"cos":[..],"sin":[..]}
    #[arg(long)]
    pub domain: Option<std::path::PathBuf>,
    /// Output directory for artifacts (default `out`).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// JSON file with any of the override keys; flags win over it.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub krad: Option<usize>,
    #[arg(long)]
    pub kang: Option<usize>,
    /// `coarse`, `default`, `fine` or `n_outer_theta,n_outer_rho,n_inner_theta,n_inner_rho[,gamma]`.
    #[arg(long)]
    pub quad: Option<String>,
    /// Finite-difference step (`dshape`) or initial step (`optimize`).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Serrin tolerance (`optimize`) or relative w tolerance (`symmetry`).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of plane directions for `symmetry`.
    #[arg(long)]
    pub directions: Option<usize>,
    /// `dilation`, `translation` or `mode:K` for `dshape`.
    #[arg(long)]
    pub field: Option<String>,
    /// Points per side of the `solve` CSV grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Skip the Richardson step in `dshape`.
    #[arg(long)]
    pub no_richardson: bool,
}

impl Cli {
    pub fn into_config(self) -> CliResult<RunConfig> {
        let flags = Overrides {
            domain: self.domain,
            out: self.out,
            krad: self.krad,
            kang: self.kang,
            quad: self.quad,
            step: self.step,
            iters: self.iters,
            tol: self.tol,
            seed: self.seed,
            directions: self.directions,
            field: self.field,
            grid: self.grid,
            richardson: self.no_richardson.then_some(false),
        };
        let overrides = match &self.config {
            Some(path) => flags.or(Overrides::from_json_file(path)?),
            None => flags,
        };
        Ok(RunConfig { command: self.command, overrides })
    }
}

/// Caps the global pool from `FRACSHAPE_THREADS`; unset or 0 leaves rayon's default.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let n = match value {
        None => return Ok(()),
        Some(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Validation(format!("FRACSHAPE_THREADS must be a non-negative integer, got '{v}'")))?,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Validates everything, then runs the command.
pub fn run(config: &RunConfig) -> CliResult<String> {
    let settings = config.resolve()?;
    commands::run(&settings)
}
