//! Matrix-game benchmark: `min_{x∈Δ^m} max_{y∈Δ^n} xᵀAy`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};
use crate::metrics::natural_residual;
use crate::problem::VIProblem;
use crate::rng::SplitMix64;
use crate::solvers::{
    run, Algorithm, IterTrace, Outcome, RunOptions, Solver, SolverConfig,
};

/// Iteration counts reported in comparison summaries.
pub const CHECKPOINTS: [usize; 4] = [100, 1_000, 10_000, 100_000];

pub const PRESOLVE_TOL: f64 = 1e-10;
pub const PRESOLVE_ALPHA: f64 = 50.0;
pub const PRESOLVE_MAX_ITERS: usize = 10_000_000;
const PRESOLVE_CHECK_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    pub payoff: Matrix,
    pub seed: u64,
    /// `σ_max(A)`
    pub lipschitz: f64,
}

impl GameInstance {
    /// Wraps a user-supplied payoff matrix; `seed` drives the power
    /// iteration.
    pub fn from_matrix(payoff: Matrix, seed: u64) -> Result<Self> {
        let lipschitz = crate::linalg::spectral_norm(&payoff, seed)?;
        Ok(GameInstance {
            payoff,
            seed,
            lipschitz,
        })
    }

    pub fn m(&self) -> usize {
        self.payoff.rows()
    }

    pub fn n(&self) -> usize {
        self.payoff.cols()
    }

    pub fn dim(&self) -> usize {
        self.m() + self.n()
    }

    pub fn problem(&self) -> VIProblem {
        let op = crate::operator::BilinearGameOperator::with_lipschitz(
            self.payoff.clone(),
            self.lipschitz,
        );
        VIProblem::new(
            std::sync::Arc::new(op),
            crate::sets::FeasibleSet::simplex_product(self.m(), self.n()),
        )
        .expect("game operator and simplex product share the dimension")
    }

    /// Uniform mixed strategies for both players.
    pub fn default_start(&self) -> Point {
        let (m, n) = (self.m(), self.n());
        std::iter::repeat_n(1.0 / m as f64, m)
            .chain(std::iter::repeat_n(1.0 / n as f64, n))
            .collect()
    }

    /// Instance file contents: a header line then `m` rows of `n` values.
    pub fn to_file_string(&self) -> String {
        let mut s = format!(
            "# vi-game {} {} {} {:.16e}\n",
            self.m(),
            self.n(),
            self.seed,
            self.lipschitz
        );
        for i in 0..self.m() {
            let row: Vec<String> = self.payoff.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "#" || fields[1] != "vi-game" {
            return Err(Error::Parse(format!(
                "expected header '# vi-game m n seed L', got '{header}'"
            )));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad {what} '{s}' in header")))
        };
        let m = num(fields[2], "m")? as usize;
        let n = num(fields[3], "n")? as usize;
        let seed = num(fields[4], "seed")?;
        let lipschitz: f64 = fields[5]
            .parse()
            .map_err(|_| Error::Parse(format!("bad L '{}' in header", fields[5])))?;
        if m == 0 || n == 0 {
            return Err(Error::Parse("game dimensions must be positive".into()));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Parse(format!("L must be positive (got {lipschitz})")));
        }
        let mut data = Vec::with_capacity(m * n);
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad entry '{t}' in row {}", i + 1)))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("non-finite entry in row {}", i + 1)));
            }
            data.extend(row);
            rows += 1;
        }
        if rows != m {
            return Err(Error::Parse(format!("found {rows} rows, expected {m}")));
        }
        Ok(GameInstance {
            payoff: Matrix::from_row_major(m, n, data)?,
            seed,
            lipschitz,
        })
    }
}

/// Payoffs drawn row-major from SplitMix64, uniform on `[0, 1)`.
pub fn generate_game(m: usize, n: usize, seed: u64) -> Result<GameInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "game dimensions must be positive (got {m}×{n})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let data = (0..m * n).map(|_| rng.next_f64()).collect();
    GameInstance::from_matrix(Matrix::from_row_major(m, n, data)?, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Presolve {
    pub z: Point,
    pub residual: f64,
    pub iterations: usize,
}

/// Reference solution by fOGDA-VI with `α = 50` and `γ = 0.99/(4L)`, run
/// until the natural residual is at most `tol`.
pub fn presolve_reference(problem: &VIProblem, start: &[f64], tol: f64) -> Result<Presolve> {
    presolve_with_cap(problem, start, tol, PRESOLVE_MAX_ITERS)
}

pub fn presolve_with_cap(
    problem: &VIProblem,
    start: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Presolve> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "presolve tolerance must be positive (got {tol})"
        )));
    }
    let cfg = SolverConfig::new(Algorithm::FogdaVi).with_alpha(PRESOLVE_ALPHA);
    let mut solver = Solver::init(&cfg, problem, start)?;
    let (op, set) = (problem.operator(), problem.set());
    let mut best = (f64::INFINITY, solver.state().z.clone());
    let mut it = 0;
    loop {
        let res = natural_residual(problem, &solver.state().z);
        if res < best.0 {
            best = (res, solver.state().z.clone());
        }
        if res <= tol {
            return Ok(Presolve {
                z: solver.state().z.clone(),
                residual: res,
                iterations: it,
            });
        }
        if it >= max_iters || !solver.state().is_finite() {
            return Err(Error::ToleranceNotReached {
                tol,
                best: best.0,
                iterations: it,
            });
        }
        let chunk = PRESOLVE_CHECK_EVERY.min(max_iters - it);
        for _ in 0..chunk {
            solver.step(op, set);
        }
        it += chunk;
    }
}

/// Presolves the instance from its default start and attaches the result as
/// the problem's reference solution.
pub fn problem_with_reference(instance: &GameInstance, tol: f64) -> Result<(VIProblem, Presolve)> {
    let problem = instance.problem();
    let pre = presolve_reference(&problem, &instance.default_start(), tol)?;
    let problem = problem.with_reference(pre.z.clone())?;
    Ok((problem, pre))
}

/// A labeled solver configuration within a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub label: String,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub entries: Vec<RunEntry>,
    /// Start point; the uniform strategies when absent.
    pub start: Option<Point>,
    pub options: RunOptions,
}

impl RunSpec {
    /// One entry per algorithm, labeled by its command-line name.
    pub fn for_algorithms(algorithms: &[Algorithm], base: &SolverConfig) -> Self {
        let entries = algorithms
            .iter()
            .map(|&a| RunEntry {
                label: a.name().to_string(),
                config: SolverConfig {
                    algorithm: a,
                    ..base.clone()
                },
            })
            .collect();
        RunSpec {
            entries,
            start: None,
            options: RunOptions::default(),
        }
    }

    /// One entry per `α`, labeled `<algo>-a<α>`.
    pub fn for_alphas(alphas: &[f64], base: &SolverConfig) -> Self {
        let entries = alphas
            .iter()
            .map(|&a| RunEntry {
                label: format!("{}-a{}", base.algorithm.name(), a),
                config: base.clone().with_alpha(a),
            })
            .collect();
        RunSpec {
            entries,
            start: None,
            options: RunOptions::default(),
        }
    }

    /// Checks every configuration against `L` and rejects duplicate labels.
    pub fn validate(&self, lipschitz: f64) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Empty("run list"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|o| o.label == e.label) {
                return Err(Error::InvalidParameter(format!("duplicate run '{}'", e.label)));
            }
            e.config.resolve_gamma(lipschitz)?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub entry: RunEntry,
    pub trace: Result<IterTrace>,
}

/// Executes every entry, in parallel on the current rayon pool. Results keep
/// the entry order; a failing run does not stop the others.
pub fn run_comparison(problem: &VIProblem, spec: &RunSpec) -> Result<Vec<RunResult>> {
    spec.validate(problem.lipschitz())?;
    let default_start;
    let start: &[f64] = match &spec.start {
        Some(s) => s,
        None => {
            default_start = uniform_start(problem)?;
            &default_start
        }
    };
    Ok(spec
        .entries
        .par_iter()
        .map(|e| RunResult {
            entry: e.clone(),
            trace: run(&e.config, problem, start, &spec.options, &mut |_| {}),
        })
        .collect())
}

/// Uniform strategies for a game problem.
pub fn uniform_start(problem: &VIProblem) -> Result<Point> {
    let a = problem
        .operator()
        .bilinear_payoff()
        .ok_or_else(|| Error::InvalidParameter("uniform start needs a matrix game".into()))?;
    let (m, n) = (a.rows(), a.cols());
    Ok(std::iter::repeat_n(1.0 / m as f64, m)
        .chain(std::iter::repeat_n(1.0 / n as f64, n))
        .collect())
}

/// One line of a comparison summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub initial_res: f64,
    pub final_res: f64,
    pub final_gap: Option<f64>,
    /// Natural residual at each of [`CHECKPOINTS`], when reached.
    pub res_at: [Option<f64>; 4],
    pub gap_at: [Option<f64>; 4],
    pub wall_ns: u64,
    pub op_evals: u64,
    pub projections: u64,
    pub status: String,
}

pub fn summarize(results: &[RunResult]) -> Vec<std::result::Result<SummaryRow, (String, Error)>> {
    results
        .iter()
        .map(|r| match &r.trace {
            Ok(t) => Ok(summary_row(&r.entry.label, t)),
            Err(e) => Err((r.entry.label.clone(), e.clone())),
        })
        .collect()
}

pub fn summary_row(label: &str, t: &IterTrace) -> SummaryRow {
    let at = |f: &dyn Fn(&crate::metrics::MetricRecord) -> Option<f64>| {
        CHECKPOINTS.map(|k| t.at(k).and_then(f))
    };
    let last = t.last();
    SummaryRow {
        label: label.to_string(),
        algorithm: t.algorithm,
        gamma: t.gamma,
        alpha: t.alpha,
        iterations: t.iterations(),
        initial_res: t.records[0].res_natural,
        final_res: last.res_natural,
        final_gap: last.gap,
        res_at: at(&|r| Some(r.res_natural)),
        gap_at: at(&|r| r.gap),
        wall_ns: last.wall_ns,
        op_evals: t.op_evals,
        projections: t.projections,
        status: match &t.outcome {
            Outcome::MaxIters => "ok".into(),
            Outcome::Converged { .. } => "converged".into(),
            Outcome::Diverged { .. } => "diverged".into(),
        },
    }
}
