use crate::error::{Error, Result};
use crate::linalg::{norm, Point};
use crate::operator::Operator;
use crate::problem::VIProblem;
use crate::sets::ConvexSet;

use super::{Algorithm, SolverConfig};

/// Iteration state shared by all methods. Fields a method does not use stay
/// at their initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Index of the current iterate `z_k` in the method's own numbering.
    pub k: usize,
    /// Steps taken since initialization.
    pub iterations: usize,
    /// `z_k`
    pub z: Point,
    /// `z_{k−1}`
    pub z_prev: Point,
    /// Most recent intermediate point `w_{k−1}`.
    pub w: Point,
    /// Normal-cone element `ζ_k ∈ N_C(z_k)` (fOGDA-VI).
    pub zeta: Point,
    /// Anchor `z₀` (EAG, ARG).
    pub anchor: Point,
    /// Cached `F(w_{k−1})` (Popov, fOGDA, fOGDA-VI).
    pub f_w: Point,
    /// Cached `F(z_{k−1})` (FRB).
    pub f_z_prev: Point,
}

impl SolverState {
    /// Counter used inside the fOGDA coefficient ratios.
    pub fn effective_k(&self, stride: usize) -> usize {
        1 + (self.k.saturating_sub(1)) / stride.max(1)
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.z,
            &self.z_prev,
            &self.w,
            &self.zeta,
            &self.f_w,
            &self.f_z_prev,
        ]
        .iter()
        .all(|p| p.is_finite())
    }

    /// `v_k = F(w_{k−1}) + ζ_k`.
    pub fn v(&self) -> Point {
        self.f_w.iter().zip(self.zeta.iter()).map(|(a, b)| a + b).collect()
    }
}

/// A configured method together with its iteration state.
#[derive(Debug, Clone)]
pub struct Solver {
    algorithm: Algorithm,
    gamma: f64,
    alpha: f64,
    stride: usize,
    state: SolverState,
    // scratch
    buf: Point,
    buf2: Point,
}

impl Solver {
    /// Initializes a method from `start`.
    ///
    /// fOGDA and fOGDA-VI take `z₀ = w₀ = start`, `z₁ = P_C(start)` and
    /// `ζ₁ = start − z₁`. All other methods start from `P_C(start)`, which
    /// is also the anchor of EAG and ARG. Operator values needed by the
    /// first step are evaluated here.
    pub fn init(config: &SolverConfig, problem: &VIProblem, start: &[f64]) -> Result<Solver> {
        let d = problem.dim();
        if start.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: start.len(),
            });
        }
        if !start.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("start point must be finite".into()));
        }
        let gamma = config.resolve_gamma(problem.lipschitz())?;
        let op = problem.operator();
        let set = problem.set();
        let start = Point::from(start);
        let p = set.project(&start);
        let algorithm = config.algorithm;

        let mut state = SolverState {
            k: algorithm.first_index(),
            iterations: 0,
            z: p.clone(),
            z_prev: p.clone(),
            w: p.clone(),
            zeta: Point::zeros(d),
            anchor: p.clone(),
            f_w: Point::zeros(d),
            f_z_prev: Point::zeros(d),
        };
        match algorithm {
            Algorithm::Fogda | Algorithm::FogdaVi => {
                state.z_prev = start.clone();
                state.w = start.clone();
                state.f_w = op.apply(&start);
                if algorithm == Algorithm::FogdaVi {
                    state.zeta = start.iter().zip(p.iter()).map(|(s, q)| s - q).collect();
                }
            }
            Algorithm::Popov => state.f_w = op.apply(&p),
            Algorithm::Frb => state.f_z_prev = op.apply(&p),
            _ => {}
        }
        Ok(Solver::with_state(algorithm, gamma, config.alpha, config.stride, state))
    }

    /// Wraps an explicit state, bypassing initialization and step-size
    /// validation.
    pub fn with_state(
        algorithm: Algorithm,
        gamma: f64,
        alpha: f64,
        stride: usize,
        state: SolverState,
    ) -> Solver {
        let d = state.z.dim();
        Solver {
            algorithm,
            gamma,
            alpha,
            stride: stride.max(1),
            state,
            buf: Point::zeros(d),
            buf2: Point::zeros(d),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    /// Performs one iteration.
    pub fn step(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        match self.algorithm {
            Algorithm::Eg => self.step_eg(op, set),
            Algorithm::Popov => self.step_popov(op, set),
            Algorithm::Fbf => self.step_fbf(op, set),
            Algorithm::Frb => self.step_frb(op, set),
            Algorithm::Rg => self.step_rg(op, set),
            Algorithm::Eag => self.step_eag(op, set),
            Algorithm::Arg => self.step_arg(op, set),
            Algorithm::Fogda => self.step_fogda(op),
            Algorithm::FogdaVi => self.step_fogda_vi(op, set),
        }
        self.state.k += 1;
        self.state.iterations += 1;
    }

    fn advance(&mut self, z_next: Point) {
        let s = &mut self.state;
        s.z_prev = std::mem::replace(&mut s.z, z_next);
    }

    /// `w_k = P_C[z_k − γF(z_k)]`, `z_{k+1} = P_C[z_k − γF(w_k)]`.
    fn step_eg(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let z = &self.state.z;
        op.apply_into(z, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = z[i] - g * self.buf[i];
        }
        let mut w = Point::zeros(d);
        set.project_into(&self.buf2, &mut w);
        op.apply_into(&w, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = z[i] - g * self.buf[i];
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.w = w;
        self.advance(z_next);
    }

    /// `w_k = P_C[z_k − γF(w_{k−1})]`, `z_{k+1} = P_C[z_k − γF(w_k)]`.
    fn step_popov(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let s = &self.state;
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * s.f_w[i];
        }
        let mut w = Point::zeros(d);
        set.project_into(&self.buf2, &mut w);
        let mut f_w = Point::zeros(d);
        op.apply_into(&w, &mut f_w);
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * f_w[i];
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.w = w;
        self.state.f_w = f_w;
        self.advance(z_next);
    }

    /// `w_k = P_C[z_k − γF(z_k)]`, `z_{k+1} = w_k − γF(w_k) + γF(z_k)`.
    fn step_fbf(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let z = &self.state.z;
        let mut f_z = Point::zeros(d);
        op.apply_into(z, &mut f_z);
        for i in 0..d {
            self.buf2[i] = z[i] - g * f_z[i];
        }
        let mut w = Point::zeros(d);
        set.project_into(&self.buf2, &mut w);
        op.apply_into(&w, &mut self.buf);
        let z_next: Point = (0..d)
            .map(|i| w[i] - g * self.buf[i] + g * f_z[i])
            .collect();
        self.state.w = w;
        self.advance(z_next);
    }

    /// `z_{k+1} = P_C[z_k − 2γF(z_k) + γF(z_{k−1})]`.
    fn step_frb(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let s = &self.state;
        let mut f_z = Point::zeros(d);
        op.apply_into(&s.z, &mut f_z);
        for i in 0..d {
            self.buf2[i] = s.z[i] - 2.0 * g * f_z[i] + g * s.f_z_prev[i];
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.f_z_prev = f_z;
        self.advance(z_next);
    }

    /// `w_k = 2z_k − z_{k−1}`, `z_{k+1} = P_C[z_k − γF(w_k)]`.
    fn step_rg(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let s = &self.state;
        let w: Point = (0..d).map(|i| 2.0 * s.z[i] - s.z_prev[i]).collect();
        op.apply_into(&w, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * self.buf[i];
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.w = w;
        self.advance(z_next);
    }

    /// EG with the anchor pull `(z₀ − z_k)/(k+1)` inside both projections.
    fn step_eag(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let s = &self.state;
        let beta = 1.0 / (s.k as f64 + 1.0);
        op.apply_into(&s.z, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * self.buf[i] + beta * (s.anchor[i] - s.z[i]);
        }
        let mut w = Point::zeros(d);
        set.project_into(&self.buf2, &mut w);
        op.apply_into(&w, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * self.buf[i] + beta * (s.anchor[i] - s.z[i]);
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.w = w;
        self.advance(z_next);
    }

    /// `w_k = 2z_k − z_{k−1} + (z₀ − z_k)/(k+1) − (z₀ − z_{k−1})/k`,
    /// `z_{k+1} = P_C[z_k − γF(w_k) + (z₀ − z_k)/(k+1)]`.
    fn step_arg(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let d = self.state.z.dim();
        let s = &self.state;
        let k = s.k as f64;
        let (b_now, b_prev) = (1.0 / (k + 1.0), 1.0 / k);
        let w: Point = (0..d)
            .map(|i| {
                2.0 * s.z[i] - s.z_prev[i] + b_now * (s.anchor[i] - s.z[i])
                    - b_prev * (s.anchor[i] - s.z_prev[i])
            })
            .collect();
        op.apply_into(&w, &mut self.buf);
        for i in 0..d {
            self.buf2[i] = s.z[i] - g * self.buf[i] + b_now * (s.anchor[i] - s.z[i]);
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        self.state.w = w;
        self.advance(z_next);
    }

    /// Explicit fast OGDA for monotone equations; performs no projection.
    fn step_fogda(&mut self, op: &dyn Operator) {
        let g = self.gamma;
        let a = self.alpha;
        let d = self.state.z.dim();
        let s = &self.state;
        let kappa = s.effective_k(self.stride) as f64;
        let mom = kappa / (kappa + a);
        let c0 = g * a / (kappa + a);
        let c1 = g * (2.0 * kappa + a) / (kappa + a);
        let w: Point = (0..d)
            .map(|i| s.z[i] + mom * (s.z[i] - s.z_prev[i]) - c0 * s.f_w[i])
            .collect();
        let mut f_w = Point::zeros(d);
        op.apply_into(&w, &mut f_w);
        let z_next: Point = (0..d).map(|i| w[i] - c1 * (f_w[i] - s.f_w[i])).collect();
        self.state.w = w;
        self.state.f_w = f_w;
        self.advance(z_next);
    }

    /// One pass of the three fOGDA-VI update lines:
    ///
    /// ```text
    /// w_k     = z_k + κ/(κ+α)(z_k − z_{k−1}) − γα/(κ+α)(F(w_{k−1}) + ζ_k)
    /// z_{k+1} = P_C[w_k − γ(2κ+α)/(κ+α)(F(w_k) − F(w_{k−1}) − ζ_k)]
    /// ζ_{k+1} = (κ+α)/(γ(2κ+α))(w_k − z_{k+1}) − (F(w_k) − F(w_{k−1}) − ζ_k)
    /// ```
    fn step_fogda_vi(&mut self, op: &dyn Operator, set: &dyn ConvexSet) {
        let g = self.gamma;
        let a = self.alpha;
        let d = self.state.z.dim();
        let s = &self.state;
        let kappa = s.effective_k(self.stride) as f64;
        let mom = kappa / (kappa + a);
        let c0 = g * a / (kappa + a);
        let c1 = g * (2.0 * kappa + a) / (kappa + a);
        let inv_c1 = (kappa + a) / (g * (2.0 * kappa + a));

        let w: Point = (0..d)
            .map(|i| s.z[i] + mom * (s.z[i] - s.z_prev[i]) - c0 * (s.f_w[i] + s.zeta[i]))
            .collect();
        let mut f_w = Point::zeros(d);
        op.apply_into(&w, &mut f_w);
        // buf = F(w_k) − F(w_{k−1}) − ζ_k
        for i in 0..d {
            self.buf[i] = f_w[i] - s.f_w[i] - s.zeta[i];
            self.buf2[i] = w[i] - c1 * self.buf[i];
        }
        let mut z_next = Point::zeros(d);
        set.project_into(&self.buf2, &mut z_next);
        let zeta: Point = (0..d)
            .map(|i| inv_c1 * (w[i] - z_next[i]) - self.buf[i])
            .collect();
        self.state.w = w;
        self.state.f_w = f_w;
        self.state.zeta = zeta;
        self.advance(z_next);
    }

    /// `‖z_k‖`, used by the divergence guard.
    pub fn iterate_norm(&self) -> f64 {
        norm(&self.state.z)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::operator::{zero_operator, FnOperator};
    use crate::sets::FeasibleSet;

    fn scalar_problem(f: fn(f64) -> f64, set: FeasibleSet) -> VIProblem {
        let op = FnOperator::new(1, 1.0, move |z: &[f64], out: &mut [f64]| out[0] = f(z[0]));
        VIProblem::new(Arc::new(op), set).unwrap()
    }

    fn identity_problem() -> VIProblem {
        scalar_problem(|z| z, FeasibleSet::whole_space(1))
    }

    fn solver(alg: Algorithm, gamma: f64, problem: &VIProblem, start: f64) -> Solver {
        let cfg = SolverConfig::new(alg).with_gamma(gamma);
        Solver::init(&cfg, problem, &[start]).unwrap()
    }

    fn one_step(s: &mut Solver, p: &VIProblem) {
        s.step(p.operator(), p.set());
    }

    const TOL: f64 = 1e-15;

    #[test]
    fn fogda_vi_unconstrained_hand_example() {
        let p = identity_problem();
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_gamma(0.1).with_alpha(3.0);
        let mut s = Solver::init(&cfg, &p, &[1.0]).unwrap();
        assert_eq!(s.state().zeta[0], 0.0);
        one_step(&mut s, &p);
        let st = s.state();
        assert!((st.w[0] - 0.925).abs() < TOL);
        assert!((st.z[0] - 0.934375).abs() < TOL);
        assert!(st.zeta[0].abs() < 1e-14);
    }

    #[test]
    fn fogda_vi_constrained_hand_example() {
        let half_line = FeasibleSet::boxed(vec![0.0], vec![f64::INFINITY]).unwrap();
        let p = scalar_problem(|z| z + 1.0, half_line);
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_gamma(0.1).with_alpha(3.0);
        let mut s = Solver::init(&cfg, &p, &[0.0]).unwrap();
        one_step(&mut s, &p);
        let st = s.state();
        assert!((st.w[0] + 0.075).abs() < TOL);
        assert_eq!(st.z[0], 0.0);
        assert!((st.zeta[0] + 0.525).abs() < 1e-14);
    }

    #[test]
    fn fogda_vi_init_from_infeasible_start() {
        let p = VIProblem::new(zero_operator(2), FeasibleSet::simplex(2)).unwrap();
        let cfg = SolverConfig::new(Algorithm::FogdaVi).with_gamma(0.1);
        let s = Solver::init(&cfg, &p, &[2.0, 0.0]).unwrap();
        assert_eq!(&*s.state().z, &[1.0, 0.0]);
        assert_eq!(&*s.state().zeta, &[1.0, 0.0]);
        assert_eq!(&*s.state().z_prev, &[2.0, 0.0]);
        assert_eq!(s.state().k, 1);
    }

    #[test]
    fn fogda_matches_hand_example() {
        let p = identity_problem();
        let cfg = SolverConfig::new(Algorithm::Fogda).with_gamma(0.1).with_alpha(3.0);
        let mut s = Solver::init(&cfg, &p, &[1.0]).unwrap();
        one_step(&mut s, &p);
        assert!((s.state().w[0] - 0.925).abs() < TOL);
        assert!((s.state().z[0] - 0.934375).abs() < TOL);
    }

    #[test]
    fn eg_hand_example() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Eg, 0.5, &p, 1.0);
        assert_eq!(s.state().k, 0);
        one_step(&mut s, &p);
        assert!((s.state().w[0] - 0.5).abs() < TOL);
        assert!((s.state().z[0] - 0.75).abs() < TOL);
    }

    #[test]
    fn popov_hand_example() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Popov, 0.25, &p, 1.0);
        one_step(&mut s, &p);
        assert!((s.state().w[0] - 0.75).abs() < TOL);
        assert!((s.state().z[0] - 0.8125).abs() < TOL);
    }

    #[test]
    fn fbf_hand_examples() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Fbf, 0.5, &p, 1.0);
        one_step(&mut s, &p);
        assert!((s.state().w[0] - 0.5).abs() < TOL);
        assert!((s.state().z[0] - 0.75).abs() < TOL);

        let ray = FeasibleSet::boxed(vec![2.0], vec![f64::INFINITY]).unwrap();
        let p = scalar_problem(|z| z, ray);
        let mut s = solver(Algorithm::Fbf, 0.5, &p, 2.0);
        one_step(&mut s, &p);
        assert_eq!(s.state().w[0], 2.0);
        assert_eq!(s.state().z[0], 2.0);
    }

    #[test]
    fn frb_hand_example() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Frb, 0.2, &p, 1.0);
        one_step(&mut s, &p);
        assert!((s.state().z[0] - 0.8).abs() < TOL);
    }

    #[test]
    fn rg_hand_example() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Rg, 0.2, &p, 1.0);
        one_step(&mut s, &p);
        assert_eq!(s.state().w[0], 1.0);
        assert!((s.state().z[0] - 0.8).abs() < TOL);
    }

    #[test]
    fn eag_first_step_matches_eg() {
        let p = identity_problem();
        let mut eag = solver(Algorithm::Eag, 0.25, &p, 1.0);
        let mut eg = solver(Algorithm::Eg, 0.25, &p, 1.0);
        one_step(&mut eag, &p);
        one_step(&mut eg, &p);
        assert!((eag.state().w[0] - 0.75).abs() < TOL);
        assert!((eag.state().z[0] - 0.8125).abs() < TOL);
        assert_eq!(eag.state().z, eg.state().z);
    }

    #[test]
    fn arg_hand_example() {
        let p = identity_problem();
        let mut s = solver(Algorithm::Arg, 1.0 / 12.0, &p, 1.0);
        one_step(&mut s, &p);
        assert_eq!(s.state().w[0], 1.0);
        assert!((s.state().z[0] - 11.0 / 12.0).abs() < TOL);
    }

    #[test]
    fn arg_anchor_pull_with_zero_operator() {
        let p = VIProblem::new(zero_operator(1), FeasibleSet::whole_space(1)).unwrap();
        let state = SolverState {
            k: 1,
            iterations: 0,
            z: Point::new(vec![1.0]),
            z_prev: Point::new(vec![0.0]),
            w: Point::new(vec![0.0]),
            zeta: Point::zeros(1),
            anchor: Point::new(vec![0.0]),
            f_w: Point::zeros(1),
            f_z_prev: Point::zeros(1),
        };
        let mut s = Solver::with_state(Algorithm::Arg, 0.05, 3.0, 1, state);
        // With F ≡ 0 the update is z_{k+1} = z_k + (z₀ − z_k)/(k+1),
        // i.e. z_{k+1} = k/(k+1) z_k, so z_k = 1/k when z₁ = 1, z₀ = 0.
        for k in 1..50 {
            let z_k = s.state().z[0];
            assert!((z_k - 1.0 / k as f64).abs() < 1e-14, "k={k} z={z_k}");
            one_step(&mut s, &p);
        }
    }

    #[test]
    fn zero_operator_keeps_every_method_still() {
        let set = FeasibleSet::simplex_product(2, 3);
        let p = VIProblem::new(zero_operator(5), set).unwrap();
        let start = [0.3, 0.7, 0.2, 0.2, 0.6];
        for alg in Algorithm::ALL {
            let cfg = SolverConfig::new(alg).with_alpha(3.0);
            let mut s = Solver::init(&cfg, &p, &start).unwrap();
            for _ in 0..20 {
                one_step(&mut s, &p);
            }
            for (a, b) in s.state().z.iter().zip(&start) {
                assert!((a - b).abs() < 1e-15, "{alg}");
            }
            assert!(s.state().zeta.iter().all(|&v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn effective_counter() {
        let mut st = SolverState {
            k: 1,
            iterations: 0,
            z: Point::zeros(1),
            z_prev: Point::zeros(1),
            w: Point::zeros(1),
            zeta: Point::zeros(1),
            anchor: Point::zeros(1),
            f_w: Point::zeros(1),
            f_z_prev: Point::zeros(1),
        };
        let expect = [(1, 1), (2, 1), (3, 1), (4, 2), (6, 2), (7, 3)];
        for (k, e) in expect {
            st.k = k;
            assert_eq!(st.effective_k(3), e);
            assert_eq!(st.effective_k(1), k);
        }
    }
}
