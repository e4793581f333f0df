//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vi_core::Matrix;

/// Projection onto the simplex by enumerating every support set and solving
/// the equality-constrained least-squares problem on it.
pub fn simplex_projection_by_supports(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    assert!((1..=12).contains(&d));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let tau = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; d];
        let mut feasible = true;
        for &i in &support {
            x[i] = v[i] - tau;
            if x[i] < -1e-15 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let cost: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, x));
        }
    }
    best.expect("some support is feasible").1
}

/// `max_{x', y'} xᵀAy' − x'ᵀAy`, maximized over vertex pairs.
pub fn gap_by_vertices(a: &Matrix, x: &[f64], y: &[f64]) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    let mut best = f64::NEG_INFINITY;
    for i in 0..m {
        for j in 0..n {
            let col: f64 = (0..m).map(|r| x[r] * a.get(r, j)).sum();
            let row: f64 = (0..n).map(|c| a.get(i, c) * y[c]).sum();
            best = best.max(col - row);
        }
    }
    best
}

pub fn spectral_norm_svd(a: &Matrix) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    m.singular_values().max()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_row_major(m, n, data).unwrap()
}

/// `S − Sᵀ` for a random `S`.
pub fn random_skew(seed: u64, d: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_matrix(&mut rng, d, d);
    let data = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            s.get(i, j) - s.get(j, i)
        })
        .collect();
    Matrix::from_row_major(d, d, data).unwrap()
}

pub fn random_simplex_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
