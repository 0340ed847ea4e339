//! `wassdiff`: a batch harness around the core library.
//!
//! Six subcommands cover the experiment surface: `check` runs the convexity
//! condition checkers, `solve` evolves one density, `contract` co-evolves a
//! pair and watches the transport distance, `sweep` runs the equivalence
//! grid over (d, m), `counterexample` runs the vanishing-width dissipation
//! experiment, and `geodesic` scans entropy along a displacement
//! interpolation. Every command reads a flat key=value config and writes
//! deterministic CSV reports into `--out`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod config;
pub mod data;
pub mod report;

mod commands;

/// Failures, bucketed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unusable invocation or config file. Exit code 1.
    Config(String),
    /// The computation itself failed or an artifact could not be written.
    /// Exit code 2.
    Numerical(String),
    /// An equivalence sweep produced disagreeing verdicts on a row where
    /// the comparison is meaningful. Exit code 3.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Mismatch(m) => write!(f, "verdict mismatch: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "wassdiff", version, about = "Contraction experiments for radial nonlinear diffusion")]
pub struct Cli {
    /// Experiment config file (flat key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for reports and snapshots.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Seed for randomized check samples; nothing else consumes it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run the convexity condition checkers on a nonlinearity.
    Check,
    /// Evolve one initial density and write snapshots.
    Solve,
    /// Co-evolve two densities and track the transport distance.
    Contract,
    /// Equivalence sweep over dimensions and power exponents.
    Sweep,
    /// Vanishing-width dissipation experiment with the dilation pair.
    Counterexample,
    /// Entropy scan along the displacement interpolation of two densities.
    Geodesic,
}

/// Invocation context shared by all commands.
pub struct Ctx {
    pub out: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => config::Config::from_file(path)?,
        None => config::Config::empty(),
    };
    let ctx = Ctx {
        out: cli.out.clone(),
        workers: cli.workers.max(1),
        seed: cli.seed,
    };
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", ctx.out.display())))?;
    match cli.command {
        Command::Check => commands::check::run(&cfg, &ctx),
        Command::Solve => commands::solve::run(&cfg, &ctx),
        Command::Contract => commands::contract::run(&cfg, &ctx),
        Command::Sweep => commands::sweep::run(&cfg, &ctx),
        Command::Counterexample => commands::counterexample::run(&cfg, &ctx),
        Command::Geodesic => commands::geodesic::run(&cfg, &ctx),
    }
}

/// Binary entry: parses args, runs, maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            // Bad flags or subcommand: a config error in the exit contract.
            let _ = e.print();
            return 1;
        }
        Err(e) => {
            // Help and version requests land here.
            let _ = e.print();
            return 0;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
        assert_eq!(CliError::Mismatch("x".into()).exit_code(), 3);
    }

    #[test]
    fn help_is_exit_zero_and_bad_flag_is_config_error() {
        assert_eq!(main_with_args(["wassdiff", "--help"]), 0);
        assert_eq!(main_with_args(["wassdiff", "check", "--bogus"]), 1);
        assert_eq!(main_with_args(["wassdiff", "frobnicate"]), 1);
    }
}
