//! Monotone operators.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, Point};

/// A Lipschitz continuous monotone operator `F: R^d → R^d`.
///
/// Evaluation must be deterministic. Implementations write into a
/// caller-provided buffer so solvers control allocation.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `F(z)` into `out`.
    fn apply_into(&self, z: &[f64], out: &mut [f64]);

    fn lipschitz(&self) -> f64;

    /// Payoff matrix when the operator is the gradient field of a bilinear
    /// game `xᵀAy`. Enables the closed-form gap.
    fn bilinear_payoff(&self) -> Option<&Matrix> {
        None
    }

    fn apply(&self, z: &[f64]) -> Point {
        let mut out = Point::zeros(self.dim());
        self.apply_into(z, &mut out);
        out
    }
}

/// `F(x, y) = (A y, −Aᵀ x)` for the saddle function `Φ(x, y) = xᵀ A y`.
#[derive(Debug, Clone)]
pub struct BilinearGameOperator {
    payoff: Matrix,
    lipschitz: f64,
}

impl BilinearGameOperator {
    /// Computes `L = σ_max(A)` by power iteration seeded with `seed`.
    pub fn new(payoff: Matrix, seed: u64) -> Result<Self> {
        let lipschitz = spectral_norm(&payoff, seed)?;
        Ok(BilinearGameOperator { payoff, lipschitz })
    }

    pub fn with_lipschitz(payoff: Matrix, lipschitz: f64) -> Self {
        BilinearGameOperator { payoff, lipschitz }
    }

    pub fn payoff(&self) -> &Matrix {
        &self.payoff
    }

    pub fn m(&self) -> usize {
        self.payoff.rows()
    }

    pub fn n(&self) -> usize {
        self.payoff.cols()
    }
}

impl Operator for BilinearGameOperator {
    fn dim(&self) -> usize {
        self.payoff.rows() + self.payoff.cols()
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        let m = self.payoff.rows();
        let (x, y) = z.split_at(m);
        let (gx, gy) = out.split_at_mut(m);
        self.payoff.mul_vec_into(y, gx);
        self.payoff.mul_t_vec_into(x, gy);
        gy.iter_mut().for_each(|v| *v = -*v);
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn bilinear_payoff(&self) -> Option<&Matrix> {
        Some(&self.payoff)
    }
}

/// Evaluates the game operator `(A y, −Aᵀ x)`.
pub fn evaluate_game_operator(a: &Matrix, x: &[f64], y: &[f64]) -> Result<Point> {
    if x.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: x.len(),
        });
    }
    if y.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: y.len(),
        });
    }
    let m = a.rows();
    let mut out = Point::zeros(m + a.cols());
    let (gx, gy) = out.split_at_mut(m);
    a.mul_vec_into(y, gx);
    a.mul_t_vec_into(x, gy);
    gy.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

/// Largest singular value of the payoff matrix, which is the Lipschitz
/// constant of the game operator.
pub fn lipschitz_bilinear(a: &Matrix, seed: u64) -> Result<f64> {
    spectral_norm(a, seed)
}

/// `F(z) = M z` for a square matrix `M` with positive semidefinite
/// symmetric part. The Lipschitz constant is `σ_max(M)`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    matrix: Matrix,
    lipschitz: f64,
}

impl LinearOperator {
    pub fn new(matrix: Matrix, seed: u64) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        let lipschitz = spectral_norm(&matrix, seed)?;
        Ok(LinearOperator { matrix, lipschitz })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl Operator for LinearOperator {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec_into(z, out);
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Operator backed by a closure, for tests and small experiments.
pub struct FnOperator<F> {
    dim: usize,
    lipschitz: f64,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, lipschitz: f64, f: F) -> Self {
        FnOperator { dim, lipschitz, f }
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        (self.f)(z, out)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl<F> fmt::Debug for FnOperator<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOperator")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// The zero operator on `R^d`.
pub fn zero_operator(dim: usize) -> Arc<dyn Operator> {
    Arc::new(FnOperator::new(dim, 1.0, |_, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0)
    }))
}

/// Wraps an operator and counts evaluations.
pub struct CountingOperator<'a> {
    inner: &'a dyn Operator,
    count: AtomicU64,
}

impl<'a> CountingOperator<'a> {
    pub fn new(inner: &'a dyn Operator) -> Self {
        CountingOperator {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl Operator for CountingOperator<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(z, out);
    }

    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    fn bilinear_payoff(&self) -> Option<&Matrix> {
        self.inner.bilinear_payoff()
    }
}
