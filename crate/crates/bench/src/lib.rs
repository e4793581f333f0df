//! Benchmark workloads shared by the criterion harness.

use vi_core::gamebench::{generate_game, GameInstance};

/// Square game sizes measured by the per-step benches.
pub const SIZES: [usize; 3] = [10, 50, 200];

pub fn game(size: usize) -> GameInstance {
    generate_game(size, size, 42).expect("valid dimensions")
}

/// Deterministic vector with mixed signs for projection benches.
pub fn spread(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect()
}
