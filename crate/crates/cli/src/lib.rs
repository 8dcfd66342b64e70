//! Experiment harness. Every subcommand writes one CSV or JSON artifact;
//! stochastic subcommands take a mandatory `--seed` and reproduce their
//! output byte for byte.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` bad arguments,
//! `3` an exact oracle over capacity.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod output;

pub use commands::*;

/// Environment variable giving the default worker count.
pub const THREADS_ENV: &str = "SOFTINFO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "softinfo", version, about = "Decoder soft information experiments")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-shot posteriors of a memory experiment.
    Posteriors(PosteriorsArgs),
    /// Exact minus matching posterior, per class.
    Bias(BiasArgs),
    /// Post-selection improvement against discard rate.
    Postselect(PostselectArgs),
    /// Probabilistic error cancellation on a random Clifford circuit.
    Pec(PecArgs),
    /// Zero-noise extrapolation on a random Clifford circuit.
    Zne(ZneArgs),
    /// Running soft channel estimate against shot count.
    Convergence(ConvergenceArgs),
    /// Characterization/mitigation shot split.
    Tradeoff(TradeoffArgs),
    /// Transversal CNOT with sequential syndrome transfer.
    Tcnot(TcnotArgs),
    /// Effective lattice-surgery CNOT channel.
    LsChannel(LsChannelArgs),
    /// Spacetime volumes of QEC and QEC+QEM stacks.
    Resources(ResourcesArgs),
    /// Expected steps saved by runtime abort.
    AbortSavings(AbortArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] softinfo::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(softinfo::Error::Capacity { .. }) => 3,
            CliError::Core(
                softinfo::Error::InvalidArgument(_)
                | softinfo::Error::LengthMismatch { .. }
                | softinfo::Error::OutOfRange { .. },
            )
            | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf: Vec<u8> = Vec::new();
    let out = &mut buf;
    pool.install(|| match &cli.command {
        Command::Posteriors(a) => posteriors(a, out),
        Command::Bias(a) => bias(a, out),
        Command::Postselect(a) => postselect(a, out),
        Command::Pec(a) => pec(a, out),
        Command::Zne(a) => zne(a, out),
        Command::Convergence(a) => convergence(a, out),
        Command::Tradeoff(a) => tradeoff(a, out),
        Command::Tcnot(a) => tcnot(a, out),
        Command::LsChannel(a) => ls_channel(a, out),
        Command::Resources(a) => resources(a, out),
        Command::AbortSavings(a) => abort_savings(a, out),
    })?;
    stdout.write_all(&buf)?;
    Ok(())
}

/// Parses `argv` (program name first), runs it and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
