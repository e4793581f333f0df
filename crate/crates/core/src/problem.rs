use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};
use crate::operator::{BilinearGameOperator, Operator};
use crate::sets::{ConvexSet, FeasibleSet};

/// A variational inequality: find `z* ∈ C` with `⟨F(z*), z − z*⟩ ≥ 0` for
/// every `z ∈ C`.
#[derive(Clone)]
pub struct VIProblem {
    operator: Arc<dyn Operator>,
    set: Arc<FeasibleSet>,
    reference: Option<Point>,
}

impl VIProblem {
    pub fn new(operator: Arc<dyn Operator>, set: FeasibleSet) -> Result<Self> {
        if operator.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: operator.dim(),
                got: set.dim(),
            });
        }
        Ok(VIProblem {
            operator,
            set: Arc::new(set),
            reference: None,
        })
    }

    /// The matrix game `min_x max_y xᵀAy` over `Δ^m × Δ^n`.
    pub fn bilinear_game(payoff: Matrix, seed: u64) -> Result<Self> {
        let (m, n) = (payoff.rows(), payoff.cols());
        let op = BilinearGameOperator::new(payoff, seed)?;
        VIProblem::new(Arc::new(op), FeasibleSet::simplex_product(m, n))
    }

    /// Attaches a known solution `z*`. The point must lie in `C`.
    pub fn with_reference(mut self, z_star: Point) -> Result<Self> {
        if z_star.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z_star.dim(),
            });
        }
        if !self.set.contains(&z_star) {
            return Err(Error::NotInSet {
                violation: self.set.violation(&z_star),
            });
        }
        self.reference = Some(z_star);
        Ok(self)
    }

    pub fn operator(&self) -> &dyn Operator {
        self.operator.as_ref()
    }

    pub fn operator_arc(&self) -> Arc<dyn Operator> {
        Arc::clone(&self.operator)
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.operator.lipschitz()
    }

    pub fn reference(&self) -> Option<&Point> {
        self.reference.as_ref()
    }
}

impl std::fmt::Debug for VIProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VIProblem")
            .field("dim", &self.dim())
            .field("lipschitz", &self.lipschitz())
            .field("set", &self.set)
            .field("reference", &self.reference.is_some())
            .finish()
    }
}
