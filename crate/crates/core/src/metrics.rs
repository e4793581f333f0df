//! Convergence measures evaluated along a run.
//!
//! The restricted gap of a bilinear game uses a closed form. For the skew
//! operator `F(w) = Mw`, `Mᵀ = −M`, one has `⟨F(w), w⟩ = 0` and
//! `⟨F(w), z⟩ = −⟨w, F(z)⟩`, hence
//!
//! ```text
//! sup_{w∈C} ⟨F(w), z − w⟩ = sup_{w∈C} ⟨−F(z), w⟩ = max_j (Aᵀx)_j − min_i (Ay)_i
//! ```
//!
//! on `C = Δ^m × Δ^n`. The supremum is taken over all of `C`, so it bounds
//! the ball-restricted gap from above and equals it once the ball covers `C`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm, Matrix, Point};
use crate::operator::evaluate_game_operator;
use crate::problem::VIProblem;
use crate::sets::{ConvexSet, FeasibleSet, MEMBERSHIP_TOL};

/// Metrics of one recorded iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    /// Completed iterations.
    pub k: usize,
    pub res_natural: f64,
    pub gap: Option<f64>,
    /// `‖F(z_k) + ζ_k‖`, present for methods carrying a normal-cone element.
    pub tangent_ub: Option<f64>,
    pub dist_to_ref: Option<f64>,
    /// `‖z_k − z_{k−1}‖`
    pub step_norm: f64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    ResNatural,
    Gap,
    TangentUb,
    DistToRef,
    StepNorm,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::ResNatural,
        MetricKind::Gap,
        MetricKind::TangentUb,
        MetricKind::DistToRef,
        MetricKind::StepNorm,
    ];

    /// Column name in trace files.
    pub fn column(self) -> &'static str {
        match self {
            MetricKind::ResNatural => "res_natural",
            MetricKind::Gap => "gap",
            MetricKind::TangentUb => "tangent_ub",
            MetricKind::DistToRef => "dist_to_ref",
            MetricKind::StepNorm => "step_norm",
        }
    }

    pub fn value(self, r: &MetricRecord) -> Option<f64> {
        match self {
            MetricKind::ResNatural => Some(r.res_natural),
            MetricKind::Gap => r.gap,
            MetricKind::TangentUb => r.tangent_ub,
            MetricKind::DistToRef => r.dist_to_ref,
            MetricKind::StepNorm => Some(r.step_norm),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.column() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric '{s}'")))
    }
}

/// `Res(z) = ‖z − P_C[z − F(z)]‖`.
pub fn natural_residual(problem: &VIProblem, z: &[f64]) -> f64 {
    let f = problem.operator().apply(z);
    natural_residual_with(problem.set(), z, &f)
}

/// Natural residual from a precomputed `F(z)`.
pub fn natural_residual_with(set: &dyn ConvexSet, z: &[f64], f_z: &[f64]) -> f64 {
    let shifted: Vec<f64> = z.iter().zip(f_z).map(|(a, b)| a - b).collect();
    let p = set.project(&shifted);
    dist(z, &p)
}

/// `max_j (Aᵀx)_j − min_i (Ay)_i` for `(x, y) ∈ Δ^m × Δ^n`.
pub fn restricted_gap_bilinear(a: &Matrix, x: &[f64], y: &[f64]) -> Result<f64> {
    let f = evaluate_game_operator(a, x, y)?;
    let set = FeasibleSet::simplex_product(a.rows(), a.cols());
    let z: Vec<f64> = x.iter().chain(y).copied().collect();
    let violation = set.violation(&z);
    if violation > MEMBERSHIP_TOL {
        return Err(Error::NotInSet { violation });
    }
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    let (value, _) = set.linear_maximize(&neg)?;
    Ok(value.max(0.0))
}

/// Closed-form gap when the operator is a bilinear game field and `C` is
/// bounded. `None` when the closed form does not apply or `z ∉ C`.
pub fn problem_gap(problem: &VIProblem, z: &[f64], f_z: &[f64]) -> Option<f64> {
    problem.operator().bilinear_payoff()?;
    let set = problem.set();
    if !set.is_bounded() || !set.contains(z) {
        return None;
    }
    let neg: Vec<f64> = f_z.iter().map(|v| -v).collect();
    set.linear_maximize(&neg).ok().map(|(v, _)| v.max(0.0))
}

/// `‖F(z) + ζ‖`, an upper bound on the tangent residual when `ζ ∈ N_C(z)`.
pub fn tangent_residual_upper(f_z: &[f64], zeta: &[f64]) -> f64 {
    f_z.iter()
        .zip(zeta)
        .map(|(a, b)| (a + b) * (a + b))
        .sum::<f64>()
        .sqrt()
}

/// Coordinatewise mean.
pub fn ergodic_average(points: &[Point]) -> Result<Point> {
    let first = points.first().ok_or(Error::Empty("point list"))?;
    let d = first.dim();
    let mut acc = vec![0.0; d];
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        for (a, v) in acc.iter_mut().zip(p.iter()) {
            *a += v;
        }
    }
    let n = points.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Minimum number of points accepted by [`rate_slope`].
pub const MIN_SLOPE_POINTS: usize = 10;

/// Least-squares slope of `log(metric)` against `log(k)` over the records
/// with `k ≥ k_min`.
pub fn rate_slope(records: &[MetricRecord], metric: MetricKind, k_min: usize) -> Result<f64> {
    let mut ks = Vec::new();
    let mut vals = Vec::new();
    for r in records.iter().filter(|r| r.k >= k_min.max(1)) {
        let v = metric.value(r).ok_or_else(|| {
            Error::InsufficientData(format!("metric {metric} missing at k = {}", r.k))
        })?;
        ks.push(r.k as f64);
        vals.push(v);
    }
    log_log_slope(&ks, &vals)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < MIN_SLOPE_POINTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_SLOPE_POINTS} points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InsufficientData(
            "log-log fit needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all k values coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Evaluates every metric at `z`. `zeta` enables the tangent bound.
pub fn evaluate(
    problem: &VIProblem,
    k: usize,
    z: &[f64],
    z_prev: &[f64],
    zeta: Option<&[f64]>,
    wall_ns: u64,
) -> MetricRecord {
    let f_z = problem.operator().apply(z);
    MetricRecord {
        k,
        res_natural: natural_residual_with(problem.set(), z, &f_z),
        gap: problem_gap(problem, z, &f_z),
        tangent_ub: zeta.map(|zeta| tangent_residual_upper(&f_z, zeta)),
        dist_to_ref: problem.reference().map(|r| dist(z, r)),
        step_norm: dist(z, z_prev),
        wall_ns,
    }
}

/// `δ(z₀) = ‖z* − z₀‖` when a reference solution is attached.
pub fn initial_distance(problem: &VIProblem, z0: &[f64]) -> Option<f64> {
    problem.reference().map(|r| dist(r, z0))
}

/// `‖F(z)‖`, the residual of the unconstrained problem.
pub fn operator_norm_at(problem: &VIProblem, z: &[f64]) -> f64 {
    norm(&problem.operator().apply(z))
}
