//! Command-line front end for the pentabend toolkit.

pub mod commands;
pub mod config;
pub mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Output;
pub use config::{CommonArgs, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed input; exit code 2.
    Usage(String),
    /// Valid input outside the domain of the analysis; exit code 1.
    Domain(String),
    /// Failure writing output; exit code 2.
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "pentabend", version, about = "Semitoric transition family on pentagon spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check genericity, nonemptiness and the theorem hypotheses.
    Validate(CommonArgs),
    /// Closed-form transition times with residuals.
    TransitionTimes(CommonArgs),
    /// Classify the transition point over a range of t.
    Sweep(CommonArgs),
    /// Sample the moment images and report the predicted vertices.
    MomentImage(CommonArgs),
    /// Rank and type of a configuration.
    ClassifyPoint {
        #[command(flatten)]
        common: CommonArgs,
        /// `P`, `sample`, or a JSON file {"rho": [[x, y, z], ...]}.
        #[arg(long, default_value = "P")]
        point: String,
    },
    /// Run every acceptance suite.
    Verify(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Validate(c)
            | Command::TransitionTimes(c)
            | Command::Sweep(c)
            | Command::MomentImage(c)
            | Command::Verify(c) => c,
            Command::ClassifyPoint { common, .. } => common,
        }
    }
}

/// Runs a parsed command.
pub fn run(cmd: &Command) -> Result<Output, CliError> {
    let cfg = RunConfig::from_args(cmd.common())?;
    match cmd {
        Command::Validate(_) => commands::cmd_validate(&cfg),
        Command::TransitionTimes(_) => commands::cmd_transition_times(&cfg),
        Command::Sweep(_) => commands::cmd_sweep(&cfg),
        Command::MomentImage(_) => commands::cmd_moment_image(&cfg),
        Command::ClassifyPoint { point, .. } => commands::cmd_classify_point(&cfg, point),
        Command::Verify(_) => commands::cmd_verify(&cfg),
    }
}

/// Writes an output to --out (with suffixed side files) or to stdout and
/// stderr.
pub fn emit(out: &Output, path: Option<&PathBuf>) -> Result<(), CliError> {
    use std::io::Write;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match path {
        Some(p) => {
            std::fs::write(p, &out.primary).map_err(io)?;
            for (suffix, body) in &out.extra {
                let mut name = p.clone().into_os_string();
                name.push(suffix);
                std::fs::write(PathBuf::from(name), body).map_err(io)?;
            }
        }
        None => {
            std::io::stdout().write_all(out.primary.as_bytes()).map_err(io)?;
            for (_, body) in &out.extra {
                std::io::stderr().write_all(body.as_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}
