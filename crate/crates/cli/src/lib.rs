//! Command-line front end: argument parsing, experiment execution and
//! trace/summary files.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod trace;

use args::Command;
use error::{CliError, CliResult};

/// Sizes the global rayon pool from `VI_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("VI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("VI_THREADS must be a positive integer (got '{v}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}

pub fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Run(a) => commands::cmd_run(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Lyapunov(a) => commands::cmd_lyapunov(a),
        Command::Replay(a) => commands::cmd_replay(a),
        Command::Generate(a) => commands::cmd_generate(a),
    }
}
