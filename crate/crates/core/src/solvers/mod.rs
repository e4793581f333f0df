//! Iteration engine for fOGDA-VI and the reference methods.
//!
//! Every method is a state machine behind [`Solver::step`]. Operator values
//! are cached in [`SolverState`], so the number of operator evaluations and
//! projections per step is fixed by construction:
//!
//! | method   | F evals | projections |
//! |----------|---------|-------------|
//! | EG       | 2       | 2           |
//! | Popov    | 1       | 2           |
//! | FBF      | 2       | 1           |
//! | FRB      | 1       | 1           |
//! | RG       | 1       | 1           |
//! | EAG      | 2       | 2           |
//! | ARG      | 1       | 1           |
//! | fOGDA    | 1       | 0           |
//! | fOGDA-VI | 1       | 1           |

mod run;
mod step;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use run::{
    init_cost, is_log_checkpoint, run, Cadence, IterTrace, Outcome, RunOptions, DIVERGENCE_NORM,
};
pub use step::{Solver, SolverState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Eg,
    Popov,
    Fbf,
    Frb,
    Rg,
    Eag,
    Arg,
    Fogda,
    FogdaVi,
}

/// Admissible step sizes `γ < factor / L` (or `≤` when inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBound {
    pub factor: f64,
    pub inclusive: bool,
    /// Human-readable form, e.g. `1/(2L)`.
    pub label: &'static str,
}

impl StepBound {
    pub fn limit(&self, lipschitz: f64) -> f64 {
        self.factor / lipschitz
    }

    pub fn admits(&self, gamma: f64, lipschitz: f64) -> bool {
        let limit = self.limit(lipschitz);
        gamma > 0.0 && if self.inclusive { gamma <= limit } else { gamma < limit }
    }

    pub fn relation(&self) -> &'static str {
        if self.inclusive {
            "≤"
        } else {
            "<"
        }
    }
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Eg,
        Algorithm::Popov,
        Algorithm::Fbf,
        Algorithm::Frb,
        Algorithm::Rg,
        Algorithm::Eag,
        Algorithm::Arg,
        Algorithm::Fogda,
        Algorithm::FogdaVi,
    ];

    /// Methods that handle a constraint set (all but plain fOGDA).
    pub const CONSTRAINED: [Algorithm; 8] = [
        Algorithm::Eg,
        Algorithm::Popov,
        Algorithm::Fbf,
        Algorithm::Frb,
        Algorithm::Rg,
        Algorithm::Eag,
        Algorithm::Arg,
        Algorithm::FogdaVi,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Eg => "eg",
            Algorithm::Popov => "popov",
            Algorithm::Fbf => "fbf",
            Algorithm::Frb => "frb",
            Algorithm::Rg => "rg",
            Algorithm::Eag => "eag",
            Algorithm::Arg => "arg",
            Algorithm::Fogda => "fogda",
            Algorithm::FogdaVi => "fogda-vi",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Eg => "EG",
            Algorithm::Popov => "Popov",
            Algorithm::Fbf => "FBF",
            Algorithm::Frb => "FRB",
            Algorithm::Rg => "RG",
            Algorithm::Eag => "EAG",
            Algorithm::Arg => "ARG",
            Algorithm::Fogda => "fOGDA",
            Algorithm::FogdaVi => "fOGDA-VI",
        }
    }

    pub fn step_bound(self) -> StepBound {
        let (factor, inclusive, label) = match self {
            Algorithm::Eg | Algorithm::Fbf => (1.0, false, "1/L"),
            Algorithm::Popov | Algorithm::Frb => (0.5, false, "1/(2L)"),
            Algorithm::Rg => (std::f64::consts::SQRT_2 - 1.0, false, "(√2−1)/L"),
            Algorithm::Eag => (1.0 / 3f64.sqrt(), false, "1/(√3·L)"),
            Algorithm::Arg => (1.0 / 12.0, true, "1/(12L)"),
            Algorithm::Fogda | Algorithm::FogdaVi => (0.25, false, "1/(4L)"),
        };
        StepBound {
            factor,
            inclusive,
            label,
        }
    }

    /// Fraction of the bound used when no step size is given.
    pub fn default_safety_fraction(self) -> f64 {
        if self.step_bound().inclusive {
            1.0
        } else {
            0.99
        }
    }

    pub fn evals_per_step(self) -> u64 {
        match self {
            Algorithm::Eg | Algorithm::Fbf | Algorithm::Eag => 2,
            _ => 1,
        }
    }

    pub fn projections_per_step(self) -> u64 {
        match self {
            Algorithm::Eg | Algorithm::Popov | Algorithm::Eag => 2,
            Algorithm::Fogda => 0,
            _ => 1,
        }
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Algorithm::Fogda | Algorithm::FogdaVi)
    }

    /// Index of the first iterate, matching each scheme's stated range.
    pub fn first_index(self) -> usize {
        match self {
            Algorithm::Eg | Algorithm::Fbf | Algorithm::Eag => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

/// Solver configuration. `gamma = None` derives the step size as
/// `safety_fraction × bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub safety_fraction: Option<f64>,
    /// Counter stride `n`: fOGDA coefficients use `1 + ⌊(k−1)/n⌋` in place
    /// of `k`.
    pub stride: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            gamma: None,
            alpha: 3.0,
            safety_fraction: None,
            stride: 1,
            max_iters: 1000,
            seed: 0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_safety_fraction(mut self, fraction: f64) -> Self {
        self.safety_fraction = Some(fraction);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Validates the configuration against `L` and returns the step size.
    pub fn resolve_gamma(&self, lipschitz: f64) -> Result<f64> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive and finite (got {lipschitz})"
            )));
        }
        if self.algorithm.uses_alpha() && !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{} requires α > 2 (got {})",
                self.algorithm.display_name(),
                self.alpha
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("counter stride must be ≥ 1".into()));
        }
        let bound = self.algorithm.step_bound();
        let gamma = match self.gamma {
            Some(g) => g,
            None => {
                let frac = self
                    .safety_fraction
                    .unwrap_or_else(|| self.algorithm.default_safety_fraction());
                if !(frac > 0.0 && frac <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "safety fraction must lie in (0, 1] (got {frac})"
                    )));
                }
                frac * bound.limit(lipschitz)
            }
        };
        if !gamma.is_finite() || !bound.admits(gamma, lipschitz) {
            return Err(Error::StepSize {
                algorithm: self.algorithm.display_name(),
                relation: bound.relation(),
                bound: bound.label,
                gamma,
                limit: bound.limit(lipschitz),
            });
        }
        Ok(gamma)
    }
}
