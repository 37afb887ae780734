//! Command-line front end for `rothe-core`: TOML run configs, the `solve`,
//! `verify` and `convergence` commands, CSV and plot-data emission, and run
//! manifests with checksums.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_convergence, cmd_solve, cmd_verify, CliError, CommandOutcome, EXIT_CHECKS_FAILED,
    EXIT_INVALID_CONFIG, EXIT_IO, EXIT_NON_CONVERGENCE, EXIT_OK,
};
pub use config::{ConfigError, RunConfig};
pub use output::{RunManifest, RunStatus};

#[derive(Debug, Parser)]
#[command(name = "rothe", version, about = "Rothe time stepping for fully nonlinear parabolic equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured time-step ladder and write snapshots and telemetry.
    Solve(RunArgs),
    /// Run the diagnostics suite; exit 1 if any check fails.
    Verify(RunArgs),
    /// Write Cauchy and observed-order tables over at least three levels.
    Convergence(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace the ladder by K halvings of its first step.
    #[arg(long, value_name = "K")]
    pub levels: Option<usize>,
}

impl RunArgs {
    pub fn load(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = self.levels {
            cfg = cfg.with_levels(k)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, f): (&RunArgs, fn(&RunConfig) -> Result<CommandOutcome, CliError>) = match &cli.command {
        Command::Solve(a) => (a, cmd_solve),
        Command::Verify(a) => (a, cmd_verify),
        Command::Convergence(a) => (a, cmd_convergence),
    };
    let cfg = match args.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID_CONFIG;
        }
    };
    match f(&cfg) {
        Ok(outcome) => {
            for c in outcome.report.failures() {
                eprintln!("FAIL {}: measured {:.6e}, bound {:.6e}", c.name, c.measured, c.bound);
            }
            if let Some(msg) = &outcome.manifest.partial {
                eprintln!("error: {msg}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
