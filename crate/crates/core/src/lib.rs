//! Solvers for constrained monotone variational inequalities.
//!
//! The crate implements the fast optimistic gradient method with normal-cone
//! correction (fOGDA-VI) and eight reference methods, the convergence
//! measures used to compare them, numerical checks of the energy functions
//! behind the fOGDA-VI convergence analysis, and a bilinear matrix-game
//! benchmark.
//!
//! ```
//! use vi_core::{gamebench, Algorithm, RunOptions, SolverConfig};
//!
//! let game = gamebench::generate_game(5, 5, 7).unwrap();
//! let problem = game.problem();
//! let config = SolverConfig::new(Algorithm::FogdaVi).with_max_iters(500);
//! let trace = vi_core::run(&config, &problem, &game.default_start(), &RunOptions::default(), &mut |_| {})
//!     .unwrap();
//! assert!(trace.last().res_natural < trace.records[0].res_natural);
//! ```

pub mod error;
pub mod gamebench;
pub mod linalg;
pub mod lyapunov;
pub mod metrics;
pub mod operator;
pub mod problem;
pub mod rng;
pub mod sets;
pub mod solvers;

pub use error::{Error, Result};
pub use gamebench::GameInstance;
pub use linalg::{inner, Matrix, Point};
pub use lyapunov::EnergyParams;
pub use metrics::{MetricKind, MetricRecord};
pub use operator::{evaluate_game_operator, lipschitz_bilinear, BilinearGameOperator, Operator};
pub use problem::VIProblem;
pub use sets::{project_simplex, ConvexSet, FeasibleSet};
pub use solvers::{
    run, Algorithm, Cadence, IterTrace, Outcome, RunOptions, Solver, SolverConfig, SolverState,
};
