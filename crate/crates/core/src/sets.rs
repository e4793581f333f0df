//! Closed convex feasible sets: projection, membership, linear maximization
//! and normal-cone testing.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Point};

/// Absolute per-constraint tolerance used for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Capabilities of a nonempty closed convex set `C ⊆ R^d`.
pub trait ConvexSet: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes the Euclidean projection `P_C(v)` into `out`.
    fn project_into(&self, v: &[f64], out: &mut [f64]);

    /// Largest absolute constraint violation of `z` (0 inside `C`).
    fn violation(&self, z: &[f64]) -> f64;

    /// `max_{w∈C} ⟨c, w⟩` and a maximizer.
    fn linear_maximize(&self, c: &[f64]) -> Result<(f64, Point)>;

    /// Draws a point of `C` uniformly. Bounded sets sample the whole set;
    /// unbounded coordinates are sampled in a unit window around `center`,
    /// which is enough for normal-cone tests since `ζ ∈ N_C(z)` is a local
    /// property of `C` near `z`.
    fn sample_into(&self, rng: &mut ChaCha8Rng, center: &[f64], out: &mut [f64]);

    fn project(&self, v: &[f64]) -> Point {
        let mut out = Point::zeros(self.dim());
        self.project_into(v, &mut out);
        out
    }

    fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim() && self.violation(z) <= MEMBERSHIP_TOL
    }
}

/// The concrete set kinds used by the toolkit.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace { dim: usize },
    /// Coordinatewise bounds; infinite bounds allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// The standard simplex `Δ^d`.
    Simplex { dim: usize },
    /// Cartesian product over contiguous coordinate blocks.
    Product(Vec<FeasibleSet>),
}

impl FeasibleSet {
    pub fn whole_space(dim: usize) -> Self {
        FeasibleSet::WholeSpace { dim }
    }

    pub fn simplex(dim: usize) -> Self {
        FeasibleSet::Simplex { dim }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("box requires lower ≤ upper".into()));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    /// `Δ^m × Δ^n`, the strategy space of a two-player matrix game.
    pub fn simplex_product(m: usize, n: usize) -> Self {
        FeasibleSet::Product(vec![FeasibleSet::simplex(m), FeasibleSet::simplex(n)])
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            FeasibleSet::WholeSpace { dim } => *dim == 0,
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .chain(upper)
                .all(|b| b.is_finite()),
            FeasibleSet::Ball { .. } | FeasibleSet::Simplex { .. } => true,
            FeasibleSet::Product(blocks) => blocks.iter().all(FeasibleSet::is_bounded),
        }
    }
}

impl ConvexSet for FeasibleSet {
    fn dim(&self) -> usize {
        match self {
            FeasibleSet::WholeSpace { dim } | FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Product(blocks) => blocks.iter().map(ConvexSet::dim).sum(),
        }
    }

    fn project_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            FeasibleSet::WholeSpace { .. } => out.copy_from_slice(v),
            FeasibleSet::Box { lower, upper } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = v[i].max(lower[i]).min(upper[i]);
                }
            }
            FeasibleSet::Ball { center, radius } => {
                let d: f64 = v
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if d <= *radius {
                    out.copy_from_slice(v);
                } else {
                    let s = radius / d;
                    for ((o, a), c) in out.iter_mut().zip(v).zip(center) {
                        *o = c + s * (a - c);
                    }
                }
            }
            FeasibleSet::Simplex { .. } => simplex_projection_into(v, out),
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    b.project_into(&v[offset..offset + d], &mut out[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }

    fn violation(&self, z: &[f64]) -> f64 {
        match self {
            FeasibleSet::WholeSpace { .. } => 0.0,
            FeasibleSet::Box { lower, upper } => z
                .iter()
                .enumerate()
                .map(|(i, &x)| (lower[i] - x).max(x - upper[i]).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Ball { center, radius } => {
                let d: f64 = z
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                (d - radius).max(0.0)
            }
            FeasibleSet::Simplex { .. } => {
                let neg = z.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
                let sum: f64 = z.iter().sum();
                neg.max((sum - 1.0).abs())
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                let mut worst = 0.0_f64;
                for b in blocks {
                    let d = b.dim();
                    worst = worst.max(b.violation(&z[offset..offset + d]));
                    offset += d;
                }
                worst
            }
        }
    }

    fn linear_maximize(&self, c: &[f64]) -> Result<(f64, Point)> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        match self {
            FeasibleSet::WholeSpace { .. } => Err(Error::UnboundedSet),
            FeasibleSet::Box { lower, upper } => {
                if !self.is_bounded() {
                    return Err(Error::UnboundedSet);
                }
                let arg: Point = c
                    .iter()
                    .enumerate()
                    .map(|(i, &ci)| if ci > 0.0 { upper[i] } else { lower[i] })
                    .collect();
                Ok((dot(c, &arg), arg))
            }
            FeasibleSet::Ball { center, radius } => {
                let nc = norm(c);
                let arg: Point = if nc > 0.0 {
                    center
                        .iter()
                        .zip(c)
                        .map(|(x, ci)| x + radius * ci / nc)
                        .collect()
                } else {
                    Point::from(center.as_slice())
                };
                Ok((dot(c, center) + radius * nc, arg))
            }
            FeasibleSet::Simplex { dim } => {
                if *dim == 0 {
                    return Err(Error::Empty("simplex of dimension 0"));
                }
                // First index attaining the maximum.
                let (best, val) = c
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                        if v > bv {
                            (i, v)
                        } else {
                            (bi, bv)
                        }
                    });
                let mut arg = Point::zeros(*dim);
                arg[best] = 1.0;
                Ok((val, arg))
            }
            FeasibleSet::Product(blocks) => {
                let mut total = 0.0;
                let mut arg = Vec::with_capacity(c.len());
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    let (v, a) = b.linear_maximize(&c[offset..offset + d])?;
                    total += v;
                    arg.extend_from_slice(&a);
                    offset += d;
                }
                Ok((total, Point::new(arg)))
            }
        }
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, center: &[f64], out: &mut [f64]) {
        match self {
            FeasibleSet::WholeSpace { .. } => {
                for (o, c) in out.iter_mut().zip(center) {
                    *o = c + rng.random_range(-1.0..=1.0);
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let lo = if lower[i].is_finite() { lower[i] } else { center[i] - 1.0 };
                    let hi = if upper[i].is_finite() { upper[i] } else { center[i] + 1.0 };
                    let (lo, hi) = (lo.min(hi), hi.max(lo));
                    *o = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                }
            }
            FeasibleSet::Ball { center: c, radius } => {
                let d = c.len();
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
                let n = norm(out);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                for (o, ci) in out.iter_mut().zip(c) {
                    *o = ci + if n > 0.0 { r * *o / n } else { 0.0 };
                }
            }
            FeasibleSet::Simplex { .. } => {
                // Normalized exponential spacings are uniform on the simplex.
                let mut sum = 0.0;
                for o in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *o = e;
                    sum += e;
                }
                out.iter_mut().for_each(|o| *o /= sum);
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    b.sample_into(rng, &center[offset..offset + d], &mut out[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }
}

/// Euclidean projection onto the standard simplex `Δ^d`.
pub fn project_simplex(v: &[f64]) -> Result<Point> {
    if v.is_empty() {
        return Err(Error::Empty("simplex projection of an empty vector"));
    }
    let mut out = Point::zeros(v.len());
    simplex_projection_into(v, &mut out);
    Ok(out)
}

/// Sort-and-threshold projection. Ties keep original index order, so the
/// output is deterministic across platforms.
fn simplex_projection_into(v: &[f64], out: &mut [f64]) {
    let d = v.len();
    if d == 0 {
        return;
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| v[j].total_cmp(&v[i]));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        cumsum += v[i];
        let t = (cumsum - 1.0) / (rank + 1) as f64;
        if v[i] - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
}

/// Largest observed `⟨v − z, ζ⟩` over `n_samples` uniformly drawn `v ∈ C`
/// (and `v = z` itself). A value `≤ tol` is empirical evidence that
/// `ζ ∈ N_C(z)`.
pub fn normal_cone_violation(
    set: &dyn ConvexSet,
    z: &[f64],
    zeta: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let d = set.dim();
    for len in [z.len(), zeta.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let violation = set.violation(z);
    if violation > MEMBERSHIP_TOL {
        return Err(Error::NotInSet { violation });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; d];
    let mut worst = 0.0_f64;
    for _ in 0..n_samples {
        set.sample_into(&mut rng, z, &mut v);
        let s: f64 = v.iter().zip(z).zip(zeta).map(|((a, b), c)| (a - b) * c).sum();
        worst = worst.max(s);
    }
    Ok(worst)
}

/// Wraps a set and counts projections.
pub struct CountingSet<'a> {
    inner: &'a dyn ConvexSet,
    count: AtomicU64,
}

impl<'a> CountingSet<'a> {
    pub fn new(inner: &'a dyn ConvexSet) -> Self {
        CountingSet {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl ConvexSet for CountingSet<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn project_into(&self, v: &[f64], out: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.project_into(v, out)
    }

    fn violation(&self, z: &[f64]) -> f64 {
        self.inner.violation(z)
    }

    fn linear_maximize(&self, c: &[f64]) -> Result<(f64, Point)> {
        self.inner.linear_maximize(c)
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, center: &[f64], out: &mut [f64]) {
        self.inner.sample_into(rng, center, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn whole_space_is_identity() {
        let c = FeasibleSet::whole_space(3);
        assert_eq!(&*c.project(&[1.0, -2.0, 3.5]), &[1.0, -2.0, 3.5]);
    }

    #[test]
    fn simplex_examples() {
        assert!(close(&project_simplex(&[0.5, 0.5]).unwrap(), &[0.5, 0.5], 0.0));
        assert!(close(&project_simplex(&[2.0, 0.0]).unwrap(), &[1.0, 0.0], 0.0));
        assert!(close(&project_simplex(&[1.0, 1.0]).unwrap(), &[0.5, 0.5], 0.0));
        assert!(close(
            &project_simplex(&[0.2, 0.3, 0.5]).unwrap(),
            &[0.2, 0.3, 0.5],
            1e-15
        ));
        assert_eq!(project_simplex(&[]), Err(Error::Empty("simplex projection of an empty vector")));
    }

    #[test]
    fn box_and_ball() {
        let b = FeasibleSet::boxed(vec![0.0, -1.0], vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(&*b.project(&[2.0, -3.0]), &[1.0, -1.0]);
        assert!(!b.is_bounded());
        let ball = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(close(&ball.project(&[3.0, 4.0]), &[0.6, 0.8], 1e-15));
        assert_eq!(&*ball.project(&[0.1, 0.2]), &[0.1, 0.2]);
    }

    #[test]
    fn product_projects_blockwise() {
        let c = FeasibleSet::simplex_product(2, 2);
        assert!(close(&c.project(&[2.0, 0.0, 1.0, 1.0]), &[1.0, 0.0, 0.5, 0.5], 0.0));
    }

    #[test]
    fn linear_maximize_examples() {
        let (v, a) = FeasibleSet::simplex(3).linear_maximize(&[1.0, 5.0, 2.0]).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(&*a, &[0.0, 1.0, 0.0]);

        let ball = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let (v, a) = ball.linear_maximize(&[3.0, 4.0]).unwrap();
        assert!((v - 5.0).abs() < 1e-15);
        assert!(close(&a, &[0.6, 0.8], 1e-15));

        let prod = FeasibleSet::simplex_product(2, 2);
        let (v, a) = prod.linear_maximize(&[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(&*a, &[1.0, 0.0, 0.0, 1.0]);

        assert_eq!(
            FeasibleSet::whole_space(2).linear_maximize(&[1.0, 0.0]),
            Err(Error::UnboundedSet)
        );
        let half_line = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]).unwrap();
        assert_eq!(half_line.linear_maximize(&[1.0]), Err(Error::UnboundedSet));
    }

    #[test]
    fn normal_cone_examples() {
        let simplex = FeasibleSet::simplex(2);
        assert_eq!(
            normal_cone_violation(&simplex, &[0.3, 0.7], &[0.0, 0.0], 100, 1).unwrap(),
            0.0
        );
        let half_line = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]).unwrap();
        assert!(normal_cone_violation(&half_line, &[0.0], &[-1.0], 100, 1).unwrap() <= 0.0);
        assert!(normal_cone_violation(&half_line, &[0.0], &[1.0], 100, 1).unwrap() > 0.0);
        assert_eq!(
            normal_cone_violation(&simplex, &[1.0, 0.0], &[1.0, 0.0], 100, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn normal_cone_rejects_infeasible_point() {
        let simplex = FeasibleSet::simplex(2);
        assert!(matches!(
            normal_cone_violation(&simplex, &[1.0, 1.0], &[0.0, 0.0], 10, 0),
            Err(Error::NotInSet { .. })
        ));
    }

    #[test]
    fn samples_are_members() {
        let sets = [
            FeasibleSet::simplex_product(3, 4),
            FeasibleSet::ball(vec![1.0, -1.0, 0.5], 2.0).unwrap(),
            FeasibleSet::boxed(vec![0.0, -2.0], vec![1.0, f64::INFINITY]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in &sets {
            let center = s.project(&vec![0.0; s.dim()]);
            let mut v = vec![0.0; s.dim()];
            for _ in 0..200 {
                s.sample_into(&mut rng, &center, &mut v);
                assert!(s.contains(&v), "{s:?} sample {v:?}");
            }
        }
    }

    #[test]
    fn counting_set_counts() {
        let s = FeasibleSet::simplex(3);
        let c = CountingSet::new(&s);
        c.project(&[1.0, 2.0, 3.0]);
        assert_eq!(c.count(), 1);
    }
}
