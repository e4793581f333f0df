use std::time::Instant;

use crate::error::Result;
use crate::linalg::Point;
use crate::metrics::{self, MetricRecord};
use crate::operator::CountingOperator;
use crate::problem::VIProblem;
use crate::sets::CountingSet;

use super::{Algorithm, Solver, SolverConfig, SolverState};

/// Runs abort once `‖z_k‖` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Which iterations get a metric record. The initial and final iterates are
/// always recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cadence {
    Every,
    /// `k = round(10^{j/12})`, `j = 0, 1, …`
    #[default]
    Log,
    /// Every `n`-th iteration.
    Stride(usize),
}

impl Cadence {
    pub fn records(self, k: usize) -> bool {
        match self {
            Cadence::Every => true,
            Cadence::Log => is_log_checkpoint(k),
            Cadence::Stride(n) => k.is_multiple_of(n.max(1)),
        }
    }
}

/// True when `k` is 0 or the nearest integer to `10^{j/12}` for some `j`.
pub fn is_log_checkpoint(k: usize) -> bool {
    if k <= 1 {
        return true;
    }
    let j0 = (12.0 * (k as f64).log10()).floor() as i64;
    (j0 - 1..=j0 + 1)
        .filter(|&j| j >= 0)
        .any(|j| 10f64.powf(j as f64 / 12.0).round() as usize == k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub cadence: Cadence,
    /// Stop once the natural residual drops to this value. `None` skips the
    /// check and always runs `max_iters` steps.
    pub stop_tol: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            cadence: Cadence::Log,
            stop_tol: Some(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    MaxIters,
    Converged { residual: f64 },
    Diverged { iterations: usize, reason: String },
}

impl Outcome {
    pub fn is_diverged(&self) -> bool {
        matches!(self, Outcome::Diverged { .. })
    }
}

#[derive(Debug, Clone)]
pub struct IterTrace {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub alpha: f64,
    pub stride: usize,
    pub records: Vec<MetricRecord>,
    pub outcome: Outcome,
    /// Operator evaluations and projections spent by the method itself,
    /// including initialization. Metric evaluations are not counted.
    pub op_evals: u64,
    pub projections: u64,
    pub final_state: SolverState,
    /// `‖z* − z₀‖` when the problem has a reference solution.
    pub delta0: Option<f64>,
}

impl IterTrace {
    pub fn last(&self) -> &MetricRecord {
        self.records.last().expect("trace holds the initial record")
    }

    pub fn iterations(&self) -> usize {
        self.final_state.iterations
    }

    /// Record with the given iteration count, if it was recorded.
    pub fn at(&self, k: usize) -> Option<&MetricRecord> {
        self.records
            .binary_search_by_key(&k, |r| r.k)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Runs a method from `start` for `config.max_iters` steps.
///
/// `observer` sees the state after initialization and after every step.
/// Step accounting goes through counting wrappers; metrics and the stopping
/// test evaluate the raw problem and are excluded from the counts and from
/// `wall_ns`.
pub fn run(
    config: &SolverConfig,
    problem: &VIProblem,
    start: &[f64],
    opts: &RunOptions,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<IterTrace> {
    let op = CountingOperator::new(problem.operator());
    let set = CountingSet::new(problem.set());

    let t0 = Instant::now();
    let mut solver = Solver::init(config, problem, start)?;
    let mut busy_ns = t0.elapsed().as_nanos() as u64;
    // init evaluates on the raw problem; charge it explicitly
    let (init_evals, init_projs) = init_cost(config.algorithm);

    let track_zeta = config.algorithm == Algorithm::FogdaVi;
    let record = |s: &SolverState, ns: u64| {
        metrics::evaluate(
            problem,
            s.iterations,
            &s.z,
            &s.z_prev,
            track_zeta.then_some(&s.zeta[..]),
            ns,
        )
    };

    let z_start = Point::from(start);
    let mut records = vec![record(solver.state(), busy_ns)];
    observer(solver.state());

    let mut outcome = Outcome::MaxIters;
    for _ in 0..config.max_iters {
        let t = Instant::now();
        solver.step(&op, &set);
        busy_ns += t.elapsed().as_nanos() as u64;
        let s = solver.state();

        if !s.is_finite() || solver.iterate_norm() > DIVERGENCE_NORM {
            let reason = if s.is_finite() {
                format!("‖z‖ = {:e} exceeds {DIVERGENCE_NORM:e}", solver.iterate_norm())
            } else {
                "non-finite iterate".to_string()
            };
            records.push(record(s, busy_ns));
            outcome = Outcome::Diverged {
                iterations: s.iterations,
                reason,
            };
            observer(s);
            break;
        }
        observer(s);

        if let Some(tol) = opts.stop_tol {
            let res = metrics::natural_residual(problem, &s.z);
            if res <= tol {
                records.push(record(s, busy_ns));
                outcome = Outcome::Converged { residual: res };
                break;
            }
        }
        if opts.cadence.records(s.iterations) {
            records.push(record(s, busy_ns));
        }
    }
    let s = solver.state();
    if records.last().map(|r| r.k) != Some(s.iterations) {
        records.push(record(s, busy_ns));
    }

    Ok(IterTrace {
        algorithm: config.algorithm,
        gamma: solver.gamma(),
        alpha: config.alpha,
        stride: solver.stride(),
        records,
        outcome,
        op_evals: init_evals + op.count(),
        projections: init_projs + set.count(),
        final_state: solver.into_state(),
        delta0: metrics::initial_distance(problem, &z_start),
    })
}

/// Operator evaluations and projections spent by [`Solver::init`].
pub fn init_cost(algorithm: Algorithm) -> (u64, u64) {
    match algorithm {
        Algorithm::Fogda | Algorithm::FogdaVi | Algorithm::Popov | Algorithm::Frb => (1, 1),
        _ => (0, 1),
    }
}
