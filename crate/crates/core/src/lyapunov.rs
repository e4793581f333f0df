//! Energy functions of the fOGDA-VI convergence analysis, evaluated
//! numerically along a run.
//!
//! With `v_k = F(w_{k−1}) + ζ_k` and `ε = 1 − 4γL` the module evaluates
//!
//! ```text
//! u_{λ,k} = 2λ(z_k − z*) + 2k(z_k − z_{k−1}) + (3α−2)/(α−1)·γk·v_k
//! E_{λ,k} = ½‖u‖² + 2λ(α−1−λ)‖z_k − z*‖² + 2(α−2)λγk/(α−1)·⟨z_k − z*, v_k⟩
//!           + (α−2)γ²k/(α−1)·((3α−2)k/(2(α−1)) + α)‖v_k‖²
//! G_{λ,k} = E − 2(α−2)γk²/(α−1)·⟨z_k − z_{k−1}, F(z_k) − F(w_{k−1})⟩
//!           + (α−2)γ²k√k/(α−1)·((1−ε)√k + α)‖v_k − v_{k−1}‖²
//! ```
//!
//! and checks the lower bound on `G`, the one-step descent inequality, the
//! sign of the quadratic form `R_k` and the summability of the step series.
//! At `k = 1` the lagged value `v₀` is taken to be `v₁`.

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, norm_sq, Point};
use crate::problem::VIProblem;
use crate::solvers::{self, Algorithm, IterTrace, RunOptions, SolverConfig, SolverState};

/// Cap for the threshold scans.
pub const SCAN_CAP: usize = 1_000_000;

/// `ε = 1 − 4γL`, defined for `0 < γ < 1/(4L)`.
pub fn epsilon_of(gamma: f64, lipschitz: f64) -> Result<f64> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz constant must be positive (got {lipschitz})"
        )));
    }
    let eps = 1.0 - 4.0 * gamma * lipschitz;
    if !(gamma > 0.0 && eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "γ must lie in (0, 1/(4L)) = (0, {}) (got {gamma})",
            0.25 / lipschitz
        )));
    }
    Ok(eps)
}

/// `v_k = F(w_{k−1}) + ζ_k`.
pub fn v_of(f_w_prev: &[f64], zeta: &[f64]) -> Result<Point> {
    if f_w_prev.len() != zeta.len() {
        return Err(Error::DimensionMismatch {
            expected: f_w_prev.len(),
            got: zeta.len(),
        });
    }
    Ok(f_w_prev.iter().zip(zeta).map(|(a, b)| a + b).collect())
}

/// Roots `ξ₁ ≤ ξ₂` of `16(α−1)²ξ² + 4(α−1)(α−2)(3α−2)ξ + α²(α−2)²`.
pub fn xi_roots(alpha: f64) -> (f64, f64) {
    let disc = ((alpha - 2.0) * (5.0 * alpha - 2.0)).sqrt();
    let den = 8.0 * (alpha - 1.0);
    let a = 3.0 * alpha - 2.0;
    (-(alpha - 2.0) * (a + disc) / den, -(alpha - 2.0) * (a - disc) / den)
}

/// Open interval `(λ̲, λ̄)` of admissible energy parameters.
pub fn lambda_range(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("α must exceed 2 (got {alpha})")));
    }
    let (xi1, xi2) = xi_roots(alpha);
    let lower = alpha - 1.0 + xi1;
    let upper = (0.75 * alpha - 0.5).min(alpha - 1.0 + xi2);
    Ok((lower, upper))
}

/// Midpoint of [`lambda_range`].
pub fn default_lambda(alpha: f64) -> Result<f64> {
    let (lo, hi) = lambda_range(alpha)?;
    Ok(0.5 * (lo + hi))
}

/// `16(α−1)²ξ² + 4(α−1)(α−2)(3α−2)ξ + α²(α−2)²` at `ξ = λ + 1 − α`.
/// Negative exactly on `(α−1+ξ₁, α−1+ξ₂)`.
pub fn lambda_quadratic(alpha: f64, lambda: f64) -> f64 {
    let xi = lambda + 1.0 - alpha;
    let a1 = alpha - 1.0;
    let a2 = alpha - 2.0;
    16.0 * a1 * a1 * xi * xi + 4.0 * a1 * a2 * (3.0 * alpha - 2.0) * xi + alpha * alpha * a2 * a2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub alpha: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

impl EnergyParams {
    /// Checks `α > 2`, `0 < γ < 1/(4L)` and `0 ≤ λ ≤ α − 1`, the domain on
    /// which the energies are defined. Whether `λ` lies in the admissible
    /// range is reported by [`EnergyParams::lambda_in_range`].
    pub fn new(alpha: f64, gamma: f64, lipschitz: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("α must exceed 2 (got {alpha})")));
        }
        let epsilon = epsilon_of(gamma, lipschitz)?;
        if !(0.0..=alpha - 1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "λ must lie in [0, α − 1] = [0, {}] (got {lambda})",
                alpha - 1.0
            )));
        }
        Ok(EnergyParams {
            alpha,
            gamma,
            lipschitz,
            epsilon,
            lambda,
        })
    }

    /// Parameters with `λ` at the midpoint of the admissible range.
    pub fn with_default_lambda(alpha: f64, gamma: f64, lipschitz: f64) -> Result<Self> {
        EnergyParams::new(alpha, gamma, lipschitz, default_lambda(alpha)?)
    }

    pub fn lambda_in_range(&self) -> bool {
        lambda_range(self.alpha)
            .map(|(lo, hi)| lo < self.lambda && self.lambda < hi)
            .unwrap_or(false)
    }

    pub fn constants(&self, k: usize) -> Constants {
        constants_of(self.alpha, self.lambda, k, self.epsilon)
    }
}

/// Coefficients of the descent inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub mu_k: f64,
}

pub fn constants_of(alpha: f64, lambda: f64, k: usize, epsilon: f64) -> Constants {
    let a1 = alpha - 1.0;
    let a2 = alpha - 2.0;
    let l = lambda + 1.0 - alpha;
    let k1 = k as f64 + 1.0;
    Constants {
        eta0: (4.0 * a1 * l - alpha * a2) / (2.0 * a1),
        eta1: (2.0 * alpha * a1 * l + alpha - 2.0 * a1 * a1) / (2.0 * a1),
        eta2: 4.0 * l,
        eta3: -a2 * (3.0 * alpha - 2.0) / (2.0 * a1),
        kappa0: a2 * a2.sqrt() / a1,
        kappa1: a2 * alpha / (4.0 * a1),
        mu_k: k1 * (epsilon * k1 + alpha * alpha * k1.sqrt() + alpha - 4.0) - a2,
    }
}

/// `u_{λ,k}`.
pub fn u_lambda_of(
    p: &EnergyParams,
    k: usize,
    z: &[f64],
    z_prev: &[f64],
    v: &[f64],
    z_ref: &[f64],
) -> Point {
    let kf = k as f64;
    let cv = (3.0 * p.alpha - 2.0) / (p.alpha - 1.0) * p.gamma * kf;
    (0..z.len())
        .map(|i| 2.0 * p.lambda * (z[i] - z_ref[i]) + 2.0 * kf * (z[i] - z_prev[i]) + cv * v[i])
        .collect()
}

/// `E_{λ,k}`.
pub fn energy_e(
    p: &EnergyParams,
    k: usize,
    z: &[f64],
    z_prev: &[f64],
    v: &[f64],
    z_ref: &[f64],
) -> f64 {
    let (a, g, l, kf) = (p.alpha, p.gamma, p.lambda, k as f64);
    let u = u_lambda_of(p, k, z, z_prev, v, z_ref);
    let dz: Vec<f64> = z.iter().zip(z_ref).map(|(a, b)| a - b).collect();
    0.5 * norm_sq(&u)
        + 2.0 * l * (a - 1.0 - l) * norm_sq(&dz)
        + 2.0 * (a - 2.0) * l * g * kf / (a - 1.0) * dot(&dz, v)
        + (a - 2.0) * g * g * kf / (a - 1.0)
            * ((3.0 * a - 2.0) * kf / (2.0 * (a - 1.0)) + a)
            * norm_sq(v)
}

/// Iterate data needed by the energies at one index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub k: usize,
    pub z: Point,
    pub z_prev: Point,
    /// `w_{k−1}`
    pub w_prev: Point,
    pub zeta: Point,
    /// `F(w_{k−1})`
    pub f_w_prev: Point,
    /// `F(z_k)`, evaluated outside the solver's accounting.
    pub f_z: Point,
}

impl Snapshot {
    pub fn from_state(problem: &VIProblem, s: &SolverState) -> Snapshot {
        Snapshot {
            k: s.k,
            z: s.z.clone(),
            z_prev: s.z_prev.clone(),
            w_prev: s.w.clone(),
            zeta: s.zeta.clone(),
            f_w_prev: s.f_w.clone(),
            f_z: problem.operator().apply(&s.z),
        }
    }

    pub fn v(&self) -> Point {
        self.f_w_prev
            .iter()
            .zip(self.zeta.iter())
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// `G_{λ,k}`.
#[allow(clippy::too_many_arguments)]
pub fn energy_g(
    p: &EnergyParams,
    k: usize,
    z: &[f64],
    z_prev: &[f64],
    v: &[f64],
    v_prev: &[f64],
    f_z: &[f64],
    f_w_prev: &[f64],
    z_ref: &[f64],
) -> f64 {
    let (a, g, kf) = (p.alpha, p.gamma, k as f64);
    let e = energy_e(p, k, z, z_prev, v, z_ref);
    let dz: Vec<f64> = z.iter().zip(z_prev).map(|(a, b)| a - b).collect();
    let df: Vec<f64> = f_z.iter().zip(f_w_prev).map(|(a, b)| a - b).collect();
    let dv = dist(v, v_prev);
    let one_minus_eps = 1.0 - p.epsilon;
    debug_assert!((one_minus_eps - 4.0 * g * p.lipschitz).abs() <= 1e-12);
    e - 2.0 * (a - 2.0) * g * kf * kf / (a - 1.0) * dot(&dz, &df)
        + (a - 2.0) * g * g * kf * kf.sqrt() / (a - 1.0) * (one_minus_eps * kf.sqrt() + a) * dv * dv
}

/// Lower bound on `G_{λ,k}`; nonnegative for `λ ≤ (3α−2)/4`.
pub fn lower_bound_g(
    p: &EnergyParams,
    k: usize,
    z: &[f64],
    z_prev: &[f64],
    v: &[f64],
    z_ref: &[f64],
) -> f64 {
    let (a, g, l, kf) = (p.alpha, p.gamma, p.lambda, k as f64);
    let cv = 2.0 * (3.0 * a - 2.0) / (a - 1.0) * g * kf;
    let w: Vec<f64> = (0..z.len())
        .map(|i| 4.0 * l * (z[i] - z_ref[i]) + 2.0 * kf * (z[i] - z_prev[i]) + cv * v[i])
        .collect();
    let step = dist(z, z_prev);
    let to_ref = dist(z, z_ref);
    (a - 2.0) / (4.0 * (3.0 * a - 2.0)) * norm_sq(&w)
        + (a - 2.0) * (a - 2.0) * kf * kf / (4.0 * (3.0 * a - 2.0) * (a - 1.0)) * step * step
        + 2.0 * (a - 1.0) * l * (1.0 - 4.0 * l / (3.0 * a - 2.0)) * to_ref * to_ref
}

/// `√((5α−2)/(2(3α−2)))`
fn rk_scale(alpha: f64) -> f64 {
    ((5.0 * alpha - 2.0) / (2.0 * (3.0 * alpha - 2.0))).sqrt()
}

/// Coefficients `(a, b, c)` of `R_k = a‖x‖² + 2b⟨x, y⟩ + c‖y‖²` with
/// `x = z_{k+1} − z_k` and `y = v_{k+1}`.
pub fn rk_coefficients(p: &EnergyParams, k: usize) -> (f64, f64, f64) {
    let c = p.constants(k);
    let s = rk_scale(p.alpha);
    let kf = k as f64;
    let sk = kf.sqrt();
    (
        s * (c.eta2 * kf + c.kappa0 * sk),
        2.0 * p.gamma * (c.eta0 * kf + c.eta1),
        4.0 * s * p.gamma * p.gamma * (c.eta3 * kf + c.kappa1 * sk),
    )
}

/// `b² − ac` for the quadratic form `R_k`. A nonpositive value together with
/// `a < 0` certifies `R_k ≤ 0` for every `x`, `y`.
pub fn check_rk(p: &EnergyParams, k: usize) -> f64 {
    let (a, b, c) = rk_coefficients(p, k);
    b * b - a * c
}

/// `R_k` evaluated at concrete vectors.
pub fn rk_value(p: &EnergyParams, k: usize, dz: &[f64], v_next: &[f64]) -> f64 {
    let (a, b, c) = rk_coefficients(p, k);
    a * norm_sq(dz) + 2.0 * b * dot(dz, v_next) + c * norm_sq(v_next)
}

/// Coefficient of `k²` in `(b² − ac)/(4γ²)`:
/// `η₀² − (5α−2)/(2(3α−2))·η₂η₃`.
pub fn rk_leading_coefficient(alpha: f64, lambda: f64) -> f64 {
    let c = constants_of(alpha, lambda, 1, 0.5);
    let s2 = (5.0 * alpha - 2.0) / (2.0 * (3.0 * alpha - 2.0));
    c.eta0 * c.eta0 - s2 * c.eta2 * c.eta3
}

fn rk_certified(p: &EnergyParams, k: usize) -> bool {
    let (a, _, _) = rk_coefficients(p, k);
    a < 0.0 && check_rk(p, k) <= 0.0
}

/// `k₀ = max{2, ⌈1/(α−2)⌉}`.
pub fn k0(alpha: f64) -> usize {
    ((1.0 / (alpha - 2.0)).ceil() as usize).max(2)
}

/// Smallest `k` such that `pred` holds on all of `[k, cap]`, if any.
fn scan_from(cap: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
    let mut k = cap;
    if !pred(k) {
        return None;
    }
    while k > 1 && pred(k - 1) {
        k -= 1;
    }
    Some(k)
}

/// Smallest `k_λ` from which the `R_k` certificate holds up to `cap`.
pub fn scan_k_lambda(p: &EnergyParams, cap: usize) -> Option<usize> {
    scan_from(cap, |k| rk_certified(p, k))
}

/// Smallest `k_ε` from which `μ_k ≥ (ε/2)(k+1)²` holds up to `cap`.
pub fn scan_k_epsilon(alpha: f64, epsilon: f64, cap: usize) -> Option<usize> {
    scan_from(cap, |k| {
        let mu = constants_of(alpha, 0.0, k, epsilon).mu_k;
        let k1 = k as f64 + 1.0;
        mu >= 0.5 * epsilon * k1 * k1
    })
}

/// Energies at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    pub k: usize,
    pub v: Point,
    pub v_prev: Point,
    pub u_lambda: Point,
    pub e: f64,
    pub g: f64,
    pub lower_bound: f64,
    pub constants: Constants,
    /// `b² − ac` of `R_k`.
    pub rk_certificate: f64,
}

/// Energy records for consecutive snapshots.
pub fn energy_records(
    p: &EnergyParams,
    snaps: &[Snapshot],
    z_ref: &[f64],
) -> Result<Vec<EnergyRecord>> {
    check_consecutive(snaps)?;
    let mut out = Vec::with_capacity(snaps.len());
    let mut v_prev: Option<Point> = None;
    for s in snaps {
        let v = s.v();
        let vp = v_prev.take().unwrap_or_else(|| v.clone());
        out.push(EnergyRecord {
            k: s.k,
            u_lambda: u_lambda_of(p, s.k, &s.z, &s.z_prev, &v, z_ref),
            e: energy_e(p, s.k, &s.z, &s.z_prev, &v, z_ref),
            g: energy_g(p, s.k, &s.z, &s.z_prev, &v, &vp, &s.f_z, &s.f_w_prev, z_ref),
            lower_bound: lower_bound_g(p, s.k, &s.z, &s.z_prev, &v, z_ref),
            constants: p.constants(s.k),
            rk_certificate: check_rk(p, s.k),
            v_prev: vp,
            v: v.clone(),
        });
        v_prev = Some(v);
    }
    Ok(out)
}

fn check_consecutive(snaps: &[Snapshot]) -> Result<()> {
    if snaps.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    if snaps.windows(2).any(|w| w[1].k != w[0].k + 1) {
        return Err(Error::InsufficientData(
            "snapshots must have consecutive indices".into(),
        ));
    }
    if snaps[0].k == 0 {
        return Err(Error::InsufficientData("energies start at k = 1".into()));
    }
    Ok(())
}

/// One evaluation of the descent inequality `G_{k+1} − G_k ≤ RHS_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; nonnegative when the inequality holds.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub checks: Vec<DescentCheck>,
    pub worst_slack: f64,
    pub violations: usize,
    /// First `k` from which every later check holds.
    pub first_valid_k: Option<usize>,
}

/// Relative tolerance of the inequality checks.
pub const CHECK_TOL: f64 = 1e-9;

/// Right-hand side of the descent inequality at index `k`, from the
/// snapshots at `k` and `k + 1`.
pub fn descent_rhs(p: &EnergyParams, now: &Snapshot, next: &Snapshot, z_ref: &[f64]) -> f64 {
    let (a, g, l) = (p.alpha, p.gamma, p.lambda);
    let k = now.k;
    let kf = k as f64;
    let sk = kf.sqrt();
    let c = p.constants(k);
    let v_now = now.v();
    let v_next = next.v();
    let d_ref: Vec<f64> = next.z.iter().zip(z_ref).map(|(a, b)| a - b).collect();
    let dz: Vec<f64> = next.z.iter().zip(now.z.iter()).map(|(a, b)| a - b).collect();
    let tangent: Vec<f64> = next.zeta.iter().zip(next.f_z.iter()).map(|(a, b)| a + b).collect();
    let dv = dist(&v_next, &v_now);
    (a - 1.0) * (a - 2.0) / (p.epsilon * (kf + 1.0).powi(2)) * l * l * norm_sq(&d_ref)
        - 4.0 * (a - 2.0) * l * g * dot(&d_ref, &tangent)
        + 4.0 * (c.eta0 * kf + c.eta1) * g * dot(&dz, &v_next)
        + (c.eta2 * kf + c.kappa0 * sk) * norm_sq(&dz)
        + 4.0 * (c.eta3 * kf + c.kappa1 * sk) * g * g * norm_sq(&v_next)
        - (a - 2.0) / (a - 1.0) * c.mu_k * g * g * dv * dv
}

/// Evaluates the descent inequality for every `k ≥ k_start` covered by the
/// snapshots.
pub fn check_descent(
    p: &EnergyParams,
    snaps: &[Snapshot],
    records: &[EnergyRecord],
    z_ref: &[f64],
    k_start: usize,
) -> Result<DescentReport> {
    check_consecutive(snaps)?;
    if records.len() != snaps.len() {
        return Err(Error::DimensionMismatch {
            expected: snaps.len(),
            got: records.len(),
        });
    }
    let mut checks = Vec::new();
    for i in 0..snaps.len() - 1 {
        let k = snaps[i].k;
        if k < k_start {
            continue;
        }
        let lhs = records[i + 1].g - records[i].g;
        let rhs = descent_rhs(p, &snaps[i], &snaps[i + 1], z_ref);
        let scale = 1.0 + records[i].g.abs() + records[i + 1].g.abs();
        let slack = rhs - lhs;
        checks.push(DescentCheck {
            k,
            lhs,
            rhs,
            slack,
            holds: slack >= -CHECK_TOL * scale,
        });
    }
    let worst_slack = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    let violations = checks.iter().filter(|c| !c.holds).count();
    let first_valid_k = match checks.iter().rposition(|c| !c.holds) {
        None => checks.first().map(|c| c.k),
        Some(i) => checks.get(i + 1).map(|c| c.k),
    };
    Ok(DescentReport {
        checks,
        worst_slack,
        violations,
        first_valid_k,
    })
}

/// One step of the Lipschitz chain
/// `‖ζ_{k+1} + F(z_{k+1}) − v_{k+1}‖ = ‖F(z_{k+1}) − F(w_k)‖ ≤ L‖z_{k+1} − w_k‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzStep {
    pub k: usize,
    /// `‖F(z_{k+1}) − F(w_k)‖`
    pub lhs: f64,
    /// `L‖z_{k+1} − w_k‖`
    pub lipschitz_rhs: f64,
    /// `γL‖v_{k+1} − v_k‖`
    pub stated_rhs: f64,
    /// `2γL‖v_{k+1} − v_k‖`, which dominates `L‖z_{k+1} − w_k‖` because
    /// `z_{k+1} − w_k = −γ(2k+α)/(k+α)·(v_{k+1} − v_k)`.
    pub doubled_rhs: f64,
}

impl LipschitzStep {
    pub fn stated_slack(&self) -> f64 {
        self.stated_rhs + 1e-10 - self.lhs
    }

    pub fn doubled_slack(&self) -> f64 {
        self.doubled_rhs + 1e-10 - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub steps: Vec<LipschitzStep>,
    pub worst_stated_slack: f64,
    pub worst_doubled_slack: f64,
    pub stated_violations: usize,
    pub doubled_violations: usize,
    /// Largest `lhs / (γL‖v_{k+1} − v_k‖)` observed.
    pub max_ratio: f64,
}

pub fn check_lipschitz_chain(p: &EnergyParams, snaps: &[Snapshot]) -> Result<LipschitzReport> {
    check_consecutive(snaps)?;
    let gl = p.gamma * p.lipschitz;
    let mut steps = Vec::new();
    for w in snaps.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        let v_next = next.v();
        let chain: Vec<f64> = (0..v_next.len())
            .map(|i| next.zeta[i] + next.f_z[i] - v_next[i])
            .collect();
        let dv = dist(&v_next, &now.v());
        steps.push(LipschitzStep {
            k: now.k,
            lhs: norm(&chain),
            lipschitz_rhs: p.lipschitz * dist(&next.z, &next.w_prev),
            stated_rhs: gl * dv,
            doubled_rhs: 2.0 * gl * dv,
        });
    }
    let min = |f: &dyn Fn(&LipschitzStep) -> f64| steps.iter().map(f).fold(f64::INFINITY, f64::min);
    let worst_stated_slack = min(&|s| s.stated_slack());
    let worst_doubled_slack = min(&|s| s.doubled_slack());
    let max_ratio = steps
        .iter()
        .filter(|s| s.stated_rhs > 0.0)
        .map(|s| s.lhs / s.stated_rhs)
        .fold(0.0, f64::max);
    Ok(LipschitzReport {
        stated_violations: steps.iter().filter(|s| s.stated_slack() < 0.0).count(),
        doubled_violations: steps.iter().filter(|s| s.doubled_slack() < 0.0).count(),
        steps,
        worst_stated_slack,
        worst_doubled_slack,
        max_ratio,
    })
}

/// `(max − min)/max(|max|, |min|)` over the values with index `≥ k_from`.
/// Zero for an identically zero window.
pub fn relative_variation(values: &[(usize, f64)], k_from: usize) -> Result<f64> {
    let window: Vec<f64> = values
        .iter()
        .filter(|(k, _)| *k >= k_from)
        .map(|&(_, v)| v)
        .collect();
    if window.is_empty() {
        return Err(Error::InsufficientData(format!("no values with k ≥ {k_from}")));
    }
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = hi.abs().max(lo.abs());
    Ok(if scale == 0.0 { 0.0 } else { (hi - lo) / scale })
}

/// Partial sums of the three summable series and the scaled step lengths,
/// accumulated on the fly from successive fOGDA-VI states.
#[derive(Debug, Clone, Default)]
pub struct SummabilityTracker {
    prev: Option<(usize, Point, Point)>,
    /// Index `k` of each term, paired with the partial sums through `k`:
    /// `Σ j²‖v_{j+1} − v_j‖²`, `Σ j‖z_{j+1} − z_j‖²`, `Σ j‖v_{j+1}‖²`.
    pub sums: Vec<(usize, [f64; 3])>,
    /// `(k, k‖z_k − z_{k−1}‖)` for `k ≥ 2`.
    pub scaled_steps: Vec<(usize, f64)>,
}

impl SummabilityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, s: &SolverState) {
        let v = s.v();
        if let Some((kp, zp, vp)) = self.prev.take() {
            if s.k == kp + 1 {
                let j = kp as f64;
                let last = self.sums.last().map(|(_, t)| *t).unwrap_or([0.0; 3]);
                let dz = dist(&s.z, &zp);
                let dv = dist(&v, &vp);
                let terms = [j * j * dv * dv, j * dz * dz, j * norm_sq(&v)];
                self.sums.push((
                    kp,
                    [last[0] + terms[0], last[1] + terms[1], last[2] + terms[2]],
                ));
                self.scaled_steps.push((s.k, s.k as f64 * dz));
            }
        }
        self.prev = Some((s.k, s.z.clone(), v));
    }

    pub fn report(&self) -> Result<SummabilityReport> {
        let &(k_last, finals) = self
            .sums
            .last()
            .ok_or_else(|| Error::InsufficientData("no summability terms".into()))?;
        let k_first = self.sums[0].0;
        let k_half = k_first + (k_last - k_first) / 2;
        let half = self
            .sums
            .iter()
            .take_while(|(k, _)| *k <= k_half)
            .last()
            .map(|(_, s)| *s)
            .unwrap_or([0.0; 3]);
        let growth = std::array::from_fn(|i| {
            if finals[i] == 0.0 {
                0.0
            } else {
                (finals[i] - half[i]) / finals[i]
            }
        });
        let k_max = self.scaled_steps.last().map(|s| s.0).unwrap_or(0);
        let global_max = self.scaled_steps.iter().map(|s| s.1).fold(0.0, f64::max);
        let last_decade_max = self
            .scaled_steps
            .iter()
            .filter(|(k, _)| *k * 10 >= k_max)
            .map(|s| s.1)
            .fold(0.0, f64::max);
        Ok(SummabilityReport {
            k_last,
            partial_sums: finals,
            growth_final_half: growth,
            scaled_step_global_max: global_max,
            scaled_step_last_decade_max: last_decade_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub k_last: usize,
    pub partial_sums: [f64; 3],
    /// Share of each partial sum accumulated over the second half of the
    /// index range.
    pub growth_final_half: [f64; 3],
    pub scaled_step_global_max: f64,
    /// Maximum of `k‖z_k − z_{k−1}‖` over `k ∈ [K/10, K]`.
    pub scaled_step_last_decade_max: f64,
}

impl SummabilityReport {
    pub const SERIES: [&'static str; 3] = [
        "Σk²‖v_{k+1}−v_k‖²",
        "Σk‖z_{k+1}−z_k‖²",
        "Σk‖F(w_k)+ζ_{k+1}‖²",
    ];

    /// Ratio of the last-decade maximum of `k‖z_k − z_{k−1}‖` to its global
    /// maximum.
    pub fn scaled_step_ratio(&self) -> f64 {
        if self.scaled_step_global_max == 0.0 {
            0.0
        } else {
            self.scaled_step_last_decade_max / self.scaled_step_global_max
        }
    }
}

/// Runs fOGDA-VI and keeps a snapshot of every iterate.
pub fn collect_snapshots(
    config: &SolverConfig,
    problem: &VIProblem,
    start: &[f64],
) -> Result<(IterTrace, Vec<Snapshot>)> {
    require_fogda_vi(config)?;
    let mut snaps = Vec::with_capacity(config.max_iters + 1);
    let opts = RunOptions {
        stop_tol: None,
        ..RunOptions::default()
    };
    let trace = solvers::run(config, problem, start, &opts, &mut |s| {
        snaps.push(Snapshot::from_state(problem, s))
    })?;
    Ok((trace, snaps))
}

fn require_fogda_vi(config: &SolverConfig) -> Result<()> {
    if config.algorithm != Algorithm::FogdaVi {
        return Err(Error::InvalidParameter(format!(
            "energy diagnostics need a fogda-vi run (got {})",
            config.algorithm
        )));
    }
    if config.stride != 1 {
        return Err(Error::InvalidParameter(
            "energy diagnostics need counter stride 1".into(),
        ));
    }
    Ok(())
}

/// Full diagnostic bundle for one fOGDA-VI run.
#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub params: EnergyParams,
    pub lambda_range: (f64, f64),
    pub k0: usize,
    pub k_lambda: Option<usize>,
    pub k_epsilon: Option<usize>,
    pub records: Vec<EnergyRecord>,
    pub descent: DescentReport,
    pub lipschitz: LipschitzReport,
    /// Records where `G ≥ lower_bound ≥ 0` fails.
    pub lower_bound_violations: Vec<usize>,
    /// Scanned `k ≥ k_λ` (up to the run length) whose `R_k` certificate is
    /// positive.
    pub rk_violations: Vec<usize>,
    pub e_variation: f64,
    pub g_variation: f64,
    /// Start of the window used for the variations.
    pub variation_from: usize,
}

impl LyapunovReport {
    pub fn lower_bound_holds(&self) -> bool {
        self.lower_bound_violations.is_empty()
    }
}

/// `G ≥ lower_bound ≥ 0` within [`CHECK_TOL`] relative.
pub fn lower_bound_ok(r: &EnergyRecord) -> bool {
    let tol = CHECK_TOL * (1.0 + r.g.abs());
    r.g >= r.lower_bound - tol && r.lower_bound >= -tol
}

/// Evaluates every energy diagnostic on precomputed snapshots. The
/// variations use the final decade `k ∈ [K/10, K]`.
pub fn analyze(p: &EnergyParams, snaps: &[Snapshot], z_ref: &[f64]) -> Result<LyapunovReport> {
    let records = energy_records(p, snaps, z_ref)?;
    let k0 = k0(p.alpha);
    let descent = check_descent(p, snaps, &records, z_ref, k0)?;
    let lipschitz = check_lipschitz_chain(p, snaps)?;
    let lower_bound_violations = records
        .iter()
        .filter(|r| !lower_bound_ok(r))
        .map(|r| r.k)
        .collect();
    let k_lambda = scan_k_lambda(p, SCAN_CAP);
    let k_last = snaps.last().map(|s| s.k).unwrap_or(0);
    let rk_violations = match k_lambda {
        Some(kl) => (kl..=k_last.max(kl)).filter(|&k| !rk_certified(p, k)).collect(),
        None => vec![k_last],
    };
    let variation_from = (k_last / 10).max(1);
    let e: Vec<(usize, f64)> = records.iter().map(|r| (r.k, r.e)).collect();
    let g: Vec<(usize, f64)> = records.iter().map(|r| (r.k, r.g)).collect();
    Ok(LyapunovReport {
        params: *p,
        lambda_range: lambda_range(p.alpha)?,
        k0,
        k_lambda,
        k_epsilon: scan_k_epsilon(p.alpha, p.epsilon, SCAN_CAP),
        descent,
        lipschitz,
        lower_bound_violations,
        rk_violations,
        e_variation: relative_variation(&e, variation_from)?,
        g_variation: relative_variation(&g, variation_from)?,
        variation_from,
        records,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::operator::zero_operator;
    use crate::sets::FeasibleSet;

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_of(0.125, 1.0).unwrap(), 0.5);
        assert!((epsilon_of(0.99 / 4.0, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(epsilon_of(0.25, 1.0).is_err());
        assert!(epsilon_of(0.0, 1.0).is_err());
        let (g, l) = (0.0371, 3.3);
        let e = epsilon_of(g, l).unwrap();
        assert!(((1.0 - e) / (4.0 * l) - g).abs() <= 1e-15 * g);
    }

    #[test]
    fn v_examples() {
        assert_eq!(&*v_of(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), &[1.0, 2.0]);
        assert!((v_of(&[0.925], &[-0.525]).unwrap()[0] - 0.4).abs() < 1e-15);
        assert!(v_of(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn lambda_range_alpha_four() {
        let (lo, hi) = lambda_range(4.0).unwrap();
        assert!((lo - 5.0 / 3.0).abs() < 1e-15);
        assert!((hi - 2.5).abs() < 1e-15);
        assert!((default_lambda(4.0).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        let (x1, x2) = xi_roots(4.0);
        assert!((x1 + 4.0 / 3.0).abs() < 1e-15 && (x2 + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_range_alpha_three() {
        let (lo, hi) = lambda_range(3.0).unwrap();
        let expected = 2.0 - (7.0 + 13f64.sqrt()) / 16.0;
        assert!((lo - expected).abs() < 1e-15);
        assert!((lo - 1.33715).abs() < 1e-5);
        assert_eq!(hi, 1.75);
        for t in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let l = lo + t * (hi - lo);
            assert!(lambda_quadratic(3.0, l) < 0.0);
        }
        assert!(lambda_range(2.0).is_err());
    }

    #[test]
    fn midpoint_satisfies_leading_condition() {
        for alpha in [2.1, 2.5, 3.0, 4.0, 10.0, 50.0, 100.0] {
            let l = default_lambda(alpha).unwrap();
            assert!(rk_leading_coefficient(alpha, l) < 0.0, "α = {alpha}");
            let (lo, hi) = lambda_range(alpha).unwrap();
            assert!(0.0 <= lo && lo < hi && hi <= (3.0 * alpha - 2.0) / 4.0);
        }
    }

    #[test]
    fn constants_examples() {
        let c = constants_of(4.0, 2.0, 1, 0.5);
        assert_eq!(c.eta2, -4.0);
        assert!((c.kappa0 - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((c.kappa1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(c.eta0 < 0.0 && c.eta1 < 0.0 && c.eta3 < 0.0);
        let k_eps = scan_k_epsilon(3.0, 0.5, SCAN_CAP).unwrap();
        assert_eq!(k_eps, 1);
        // a small ε pushes the threshold up
        assert!(scan_k_epsilon(2.05, 1e-3, SCAN_CAP).unwrap() >= 1);
    }

    fn params(alpha: f64, gamma: f64, lambda: f64) -> EnergyParams {
        EnergyParams::new(alpha, gamma, 1.0, lambda).unwrap()
    }

    #[test]
    fn u_and_e_examples() {
        let p = params(4.0, 0.1, 0.0);
        let u = u_lambda_of(&p, 1, &[1.0], &[1.0], &[1.0], &[0.0]);
        assert!((u[0] - 1.0 / 3.0).abs() < 1e-15);
        let e = energy_e(&p, 1, &[1.0], &[1.0], &[1.0], &[0.0]);
        let expected = 1.0 / 18.0 + (2.0 / 3.0) * 0.01 * (10.0 / 6.0 + 4.0);
        assert!((e - expected).abs() < 1e-15);
        assert!((e - 0.0933333).abs() < 1e-7);
        let p = params(4.0, 0.1, 2.0);
        assert_eq!(energy_e(&p, 3, &[0.5], &[0.5], &[0.0], &[0.5]), 0.0);
        assert!(u_lambda_of(&p, 3, &[0.5], &[0.5], &[0.0], &[0.5])[0] == 0.0);
    }

    #[test]
    fn lower_bound_examples() {
        let p = params(4.0, 0.1, 2.0);
        assert_eq!(lower_bound_g(&p, 5, &[0.3], &[0.3], &[0.0], &[0.3]), 0.0);
        // at λ = (3α−2)/4 the distance term vanishes
        let p = params(4.0, 0.1, 2.5);
        assert!(lower_bound_g(&p, 1, &[1.0], &[1.0], &[0.0], &[0.0]) > 0.0);
        let only_dist = lower_bound_g(&p, 0, &[1.0], &[1.0], &[0.0], &[0.0]);
        let w_part = (4.0 - 2.0) / (4.0 * 10.0) * (4.0 * 2.5f64).powi(2);
        assert!((only_dist - w_part).abs() < 1e-12);
    }

    #[test]
    fn rk_example() {
        // Independent evaluation of (b² − ac) with η₀ = −10/3, η₁ = −19/3,
        // η₂ = −4, η₃ = −10/3, κ₀ = 2√2/3, κ₁ = 2/3, s² = 9/10: the
        // certificate is still positive at k = 100 and negative from 200 on.
        let p = EnergyParams::new(4.0, 0.2, 1.0, 2.0).unwrap();
        let oracle = |k: f64| {
            let s = 0.9f64.sqrt();
            let a = s * (-4.0 * k + 2.0 * 2f64.sqrt() / 3.0 * k.sqrt());
            let b = 0.4 * (-10.0 / 3.0 * k - 19.0 / 3.0);
            let c = 4.0 * s * 0.04 * (-10.0 / 3.0 * k + 2.0 / 3.0 * k.sqrt());
            b * b - a * c
        };
        for k in [1, 10, 100, 200, 1000] {
            let v = check_rk(&p, k);
            assert!((v - oracle(k as f64)).abs() <= 1e-9 * v.abs().max(1.0));
        }
        assert!((check_rk(&p, 100) - 87.248484271).abs() < 1e-6);
        assert!(check_rk(&p, 200) < 0.0);
        let p = EnergyParams::with_default_lambda(4.0, 0.2, 1.0).unwrap();
        assert!(check_rk(&p, 1_000_000) < 0.0);
        let kl = scan_k_lambda(&p, SCAN_CAP).unwrap();
        for k in [kl, 2 * kl, 10 * kl, SCAN_CAP] {
            assert!(rk_certified(&p, k));
        }
    }

    #[test]
    fn rk_at_upper_boundary_and_outside() {
        let (_, hi) = lambda_range(4.0).unwrap();
        // the cap binds at α = 4, so λ̄ is not a root of the quadratic
        assert!(rk_leading_coefficient(4.0, hi) < 0.0);
        // at α = 3 the cap also binds; at α = 2.5 the root binds
        let (_, hi) = lambda_range(2.5).unwrap();
        assert!(rk_leading_coefficient(2.5, hi).abs() < 1e-12);
        // below the range the leading coefficient turns positive
        let (lo, _) = lambda_range(4.0).unwrap();
        let p = EnergyParams::new(4.0, 0.2, 1.0, lo - 0.5).unwrap();
        assert!(!p.lambda_in_range());
        assert!(rk_leading_coefficient(4.0, lo - 0.5) > 0.0);
        assert!(check_rk(&p, 1_000_000) > 0.0);
        assert!(scan_k_lambda(&p, SCAN_CAP).is_none());
    }

    #[test]
    fn rk_certificate_bounds_quadratic_form() {
        let p = EnergyParams::with_default_lambda(4.0, 0.2, 1.0).unwrap();
        let kl = scan_k_lambda(&p, SCAN_CAP).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        for k in [kl, kl + 7, 10 * kl] {
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| rng.next_f64() - 0.5).collect();
                let y: Vec<f64> = (0..3).map(|_| rng.next_f64() - 0.5).collect();
                assert!(rk_value(&p, k, &x, &y) <= 1e-12);
            }
        }
    }

    fn stationary_snaps(n: usize) -> (VIProblem, Vec<Snapshot>) {
        let p = VIProblem::new(zero_operator(3), FeasibleSet::simplex(3)).unwrap();
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_max_iters(n);
        let (_, snaps) = collect_snapshots(&cfg, &p, &[0.2, 0.3, 0.5]).unwrap();
        (p, snaps)
    }

    #[test]
    fn stationary_trace_everything_vanishes() {
        let (_, snaps) = stationary_snaps(30);
        let z_ref = [0.2, 0.3, 0.5];
        let p = EnergyParams::with_default_lambda(4.0, 0.2, 1.0).unwrap();
        let recs = energy_records(&p, &snaps, &z_ref).unwrap();
        assert!(recs.iter().all(|r| r.e == 0.0 && r.g == 0.0 && r.lower_bound == 0.0));
        let d = check_descent(&p, &snaps, &recs, &z_ref, 2).unwrap();
        assert!(d.checks.iter().all(|c| c.lhs == 0.0 && c.rhs == 0.0 && c.holds));
        let mut t = SummabilityTracker::new();
        let p0 = VIProblem::new(zero_operator(3), FeasibleSet::simplex(3)).unwrap();
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_max_iters(30);
        let opts = RunOptions {
            stop_tol: None,
            ..RunOptions::default()
        };
        solvers::run(&cfg, &p0, &z_ref, &opts, &mut |s| t.observe(s)).unwrap();
        let r = t.report().unwrap();
        assert_eq!(r.partial_sums, [0.0; 3]);
        assert_eq!(r.scaled_step_ratio(), 0.0);
    }

    #[test]
    fn rejects_other_methods_and_strides() {
        let p = VIProblem::new(zero_operator(2), FeasibleSet::whole_space(2)).unwrap();
        let cfg = SolverConfig::new(Algorithm::Eg);
        assert!(collect_snapshots(&cfg, &p, &[0.0, 0.0]).is_err());
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_stride(2);
        assert!(collect_snapshots(&cfg, &p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn unconstrained_v_is_operator_value() {
        let m = crate::linalg::Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let op = crate::operator::LinearOperator::new(m, 0).unwrap();
        let p = VIProblem::new(Arc::new(op), FeasibleSet::whole_space(2)).unwrap();
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_max_iters(20);
        let (_, snaps) = collect_snapshots(&cfg, &p, &[1.0, 0.5]).unwrap();
        for s in &snaps {
            assert!(dist(&s.v(), &s.f_w_prev) < 1e-12);
        }
    }

    #[test]
    fn relative_variation_examples() {
        let v = [(1, 5.0), (2, 4.0), (3, 2.0), (4, 2.02)];
        assert!((relative_variation(&v, 3).unwrap() - 0.02 / 2.02).abs() < 1e-15);
        assert_eq!(relative_variation(&[(1, 0.0)], 1).unwrap(), 0.0);
        assert!(relative_variation(&v, 9).is_err());
    }
}
