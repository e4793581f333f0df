use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vi_core::{Algorithm, Cadence};

use crate::trace::parse_cadence;

#[derive(Debug, Parser)]
#[command(
    name = "vi",
    version,
    about = "Run variational-inequality solvers on matrix games and record convergence traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver and write its trace.
    Run(RunArgs),
    /// Run several solvers (or one solver at several α) on one instance.
    Compare(CompareArgs),
    /// Energy-function diagnostics for a fOGDA-VI run.
    Lyapunov(LyapunovArgs),
    /// Re-run a trace from its header.
    Replay(ReplayArgs),
    /// Write a random game instance file.
    Generate(GenerateArgs),
}

fn algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: vi_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Rows of the payoff matrix (the minimizing player's strategies).
    #[arg(long, required_unless_present = "instance", conflicts_with = "instance")]
    pub m: Option<usize>,
    /// Columns of the payoff matrix.
    #[arg(long, required_unless_present = "instance", conflicts_with = "instance")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0, conflicts_with = "instance")]
    pub seed: u64,
    /// Read the payoff matrix from an instance file instead of generating it.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    /// Step size; must respect the method's bound.
    #[arg(long, conflicts_with = "gamma_frac")]
    pub gamma: Option<f64>,
    /// Step size as a fraction of the method's bound.
    #[arg(long)]
    pub gamma_frac: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Advance the fOGDA counter only every n-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RecordArgs {
    /// Which iterations to record: log, every, or a stride.
    #[arg(long, default_value = "log", value_parser = parse_cadence)]
    pub cadence: Cadence,
    /// Stop once the natural residual is at most this.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Presolve a reference solution for dist_to_ref and δ(z₀).
    #[arg(long)]
    pub reference: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = algorithm)]
    pub algo: Algorithm,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long)]
    pub iters: usize,
    #[command(flatten)]
    pub record: RecordArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated methods, one run each.
    #[arg(long, value_delimiter = ',', value_parser = algorithm, required_unless_present = "alphas")]
    pub algos: Vec<Algorithm>,
    /// Comma-separated α values for an α sweep of `--algo`.
    #[arg(long, value_delimiter = ',', conflicts_with = "algos")]
    pub alphas: Vec<f64>,
    /// Method swept over `--alphas`.
    #[arg(long, value_parser = algorithm, default_value = "fogda-vi")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long)]
    pub iters: usize,
    #[command(flatten)]
    pub record: RecordArgs,
    /// Directory for the per-run traces and summary.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    /// Analyze the run described by this trace's header.
    #[arg(long, conflicts_with_all = ["m", "n", "seed", "instance", "iters", "gamma", "gamma_frac", "alpha"])]
    pub trace: Option<PathBuf>,
    #[arg(long, required_unless_present_any = ["instance", "trace"])]
    pub m: Option<usize>,
    #[arg(long, required_unless_present_any = ["instance", "trace"])]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, conflicts_with_all = ["m", "n"])]
    pub instance: Option<PathBuf>,
    #[arg(long, required_unless_present = "trace")]
    pub iters: Option<usize>,
    #[arg(long, conflicts_with = "gamma_frac")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_frac: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Energy parameter; the midpoint of the admissible range by default.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Write the trace with `lyap_*` columns here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub trace: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
