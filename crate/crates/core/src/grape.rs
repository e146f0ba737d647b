//! Objective assembly, exact gradients of the terminal objective with
//! respect to piecewise-constant controls, and the gradient-descent loop.
//!
//! The objective is the squared Hilbert–Schmidt distance to the target
//! state, expressed in real coordinates as the convex quadratic
//! `J(x) = <x, Z x> + <b, x> + d` with `Z = diag(β)`, `b = -2 β ⊙ x_target`
//! and `d = <β ⊙ x_target, x_target>`.
//!
//! The derivative of `x(T)` with respect to the controls of interval j
//! sandwiches the directional derivative of that interval's propagator
//! between the suffix propagator product and the prefix state. The
//! incoherent channels are differentiated through the substitution
//! `n = w²`, which contributes the chain factor `2 w_j` and makes `w = 0`
//! a stationary plane of every incoherent component.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GeneratorSet, RealState, COMPONENT_WEIGHTS};
use crate::numerics::{expm, expm_frechet_exact, QuadratureConfig, SquareMatrix};
use crate::propagate::{
    prefix_suffix_products, propagate, step_matrix, ControlGrid, Trajectory,
};

/// The terminal objective `J(x) = <x, Zx> + <b, x> + d` with `Z = diag(β)`.
///
/// Evaluation and the terminal gradient share one accumulation scheme so
/// that `value(x_target)` is exactly zero in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    x_target: RealState,
    b: [f64; 16],
    d: f64,
}

impl ObjectiveSpec {
    pub fn assemble(x_target: &RealState) -> Result<Self> {
        x_target.validate()?;
        let mut b = [0.0; 16];
        let mut d = 0.0;
        for i in 0..16 {
            let weighted = COMPONENT_WEIGHTS[i] * x_target[i];
            b[i] = -2.0 * weighted;
            d += weighted * x_target[i];
        }
        Ok(Self {
            x_target: *x_target,
            b,
            d,
        })
    }

    /// The fixed weight vector β on the main diagonal of Z.
    pub fn beta(&self) -> &'static [f64; 16] {
        &COMPONENT_WEIGHTS
    }

    pub fn z_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_diagonal(&DVector::from_row_slice(&COMPONENT_WEIGHTS))
    }

    pub fn linear_term(&self) -> &[f64; 16] {
        &self.b
    }

    pub fn constant_term(&self) -> f64 {
        self.d
    }

    pub fn x_target(&self) -> &RealState {
        &self.x_target
    }

    /// J(x); zero exactly at the target state.
    pub fn value(&self, x: &RealState) -> f64 {
        let mut quadratic = 0.0;
        let mut linear = 0.0;
        for i in 0..16 {
            quadratic += (COMPONENT_WEIGHTS[i] * x[i]) * x[i];
            linear += self.b[i] * x[i];
        }
        quadratic + linear + self.d
    }

    /// dJ/dx = 2 Z x + b.
    pub fn terminal_gradient(&self, x: &RealState) -> [f64; 16] {
        let mut g = [0.0; 16];
        for i in 0..16 {
            g[i] = 2.0 * (COMPONENT_WEIGHTS[i] * x[i]) + self.b[i];
        }
        g
    }
}

/// How the directional derivative of the step propagators is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum GradientMethod {
    /// Trapezoidal quadrature of the integral representation (production
    /// path).
    Trapezoid(QuadratureConfig),
    /// Augmented-block exact derivative (reference path).
    Exact,
}

/// Gradient of J with respect to (u¹..uᴺ, w₁¹..w₁ᴺ, w₂¹..w₂ᴺ), using the
/// trapezoidal quadrature.
pub fn gradient(
    gen: &GeneratorSet,
    grid: &ControlGrid,
    x0: &RealState,
    spec: &ObjectiveSpec,
    quadrature: QuadratureConfig,
) -> Result<Vec<f64>> {
    gradient_with(gen, grid, x0, spec, GradientMethod::Trapezoid(quadrature))
}

pub fn gradient_with(
    gen: &GeneratorSet,
    grid: &ControlGrid,
    x0: &RealState,
    spec: &ObjectiveSpec,
    method: GradientMethod,
) -> Result<Vec<f64>> {
    let traj = propagate(gen, grid, x0, 1)?;
    gradient_from_trajectory(gen, grid, &traj, spec, method)
}

/// Gradient assembly reusing a trajectory's cached step propagators: one
/// set of prefix states and suffix products, then per interval either a
/// quadrature over sub-step powers or three exact directional derivatives.
pub fn gradient_from_trajectory(
    gen: &GeneratorSet,
    grid: &ControlGrid,
    traj: &Trajectory,
    spec: &ObjectiveSpec,
    method: GradientMethod,
) -> Result<Vec<f64>> {
    let n = grid.n_intervals();
    if traj.n_intervals() != n {
        return Err(Error::DimensionMismatch(format!(
            "trajectory has {} intervals, grid has {n}",
            traj.n_intervals()
        )));
    }

    let products = prefix_suffix_products(traj);
    let g_term = DVector::from_row_slice(&spec.terminal_gradient(traj.final_state()));

    let per_interval: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|j| interval_gradient(gen, grid, &products, &g_term, j, method))
        .collect::<Result<_>>()?;

    let mut grad = vec![0.0; 3 * n];
    for (j, channels) in per_interval.iter().enumerate() {
        grad[j] = channels[0];
        grad[n + j] = channels[1];
        grad[2 * n + j] = channels[2];
    }
    Ok(grad)
}

fn interval_gradient(
    gen: &GeneratorSet,
    grid: &ControlGrid,
    products: &crate::propagate::PrefixSuffix,
    g_term: &DVector<f64>,
    j: usize,
    method: GradientMethod,
) -> Result<[f64; 3]> {
    let lambda = products.suffix(j).tr_mul(g_term);
    let x_left = products.prefix(j);
    let l = step_matrix(gen, grid, j)?;
    let dt = grid.dt(j);

    // chain factors: 1 for u, 2 w_i for the squared reparametrization
    let channels: [(&SquareMatrix, f64); 3] = [
        (&gen.b_u, 1.0),
        (&gen.b_n1, 2.0 * grid.w1(j)),
        (&gen.b_n2, 2.0 * grid.w2(j)),
    ];

    let mut out = [0.0; 3];
    match method {
        GradientMethod::Trapezoid(q) => {
            let m = q.n_points();
            let sub = expm(&l, dt / (m - 1) as f64)?;

            // forward states exp(α_k dt L) x_left and adjoint states
            // exp(α_k dt L)ᵀ λ; the mirrored index pairs them up so each
            // node is λᵀ exp(α dt L) B exp((1-α) dt L) x_left
            let mut rights = Vec::with_capacity(m);
            rights.push(x_left.clone());
            for k in 1..m {
                let next = &sub * &rights[k - 1];
                rights.push(next);
            }
            let mut lefts = Vec::with_capacity(m);
            lefts.push(lambda);
            for k in 1..m {
                let next = sub.tr_mul(&lefts[k - 1]);
                lefts.push(next);
            }

            for (slot, (bmat, chain)) in channels.iter().enumerate() {
                let applied: Vec<DVector<f64>> = rights.iter().map(|r| *bmat * r).collect();
                let mut sum = 0.0;
                for (k, w) in q.weights().enumerate() {
                    sum += w * lefts[k].dot(&applied[m - 1 - k]);
                }
                out[slot] = chain * (dt * sum);
            }
        }
        GradientMethod::Exact => {
            for (slot, (bmat, chain)) in channels.iter().enumerate() {
                let frechet = expm_frechet_exact(&l, bmat, dt)?;
                out[slot] = chain * lambda.dot(&(frechet * x_left));
            }
        }
    }
    Ok(out)
}

/// Settings of the first-order descent loop: constant step `step`,
/// stopping accuracy `tol` on the objective, and the quadrature used for
/// the per-iteration gradients.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub quadrature: QuadratureConfig,
    pub log_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 20_000,
            tol: 1e-6,
            quadrature: QuadratureConfig::default(),
            log_every: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidArgument("log_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIterations => write!(f, "max_iters"),
        }
    }
}

/// Record of a descent run: the objective at every iterate (length
/// `iterations + 1`), the final controls, and why the loop stopped.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub objective_values: Vec<f64>,
    pub final_grid: ControlGrid,
    pub iterations: usize,
    pub termination: Termination,
}

impl OptimizationTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_values.last().unwrap()
    }
}

/// Constant-step gradient descent `v ← v − h · grad J(v)`, stopping as
/// soon as `J < tol` or after `max_iters` updates. Deterministic for fixed
/// inputs; `on_iteration` receives every (k, J(v⁽ᵏ⁾)) pair.
pub fn gradient_descent(
    gen: &GeneratorSet,
    grid0: &ControlGrid,
    x0: &RealState,
    spec: &ObjectiveSpec,
    cfg: &OptimizerConfig,
    mut on_iteration: impl FnMut(usize, f64),
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    x0.validate()?;

    let mut grid = grid0.clone();
    let mut objective_values = Vec::new();
    let mut k = 0usize;
    loop {
        let traj = propagate(gen, &grid, x0, 1)?;
        let objective = spec.value(traj.final_state());
        if !objective.is_finite() {
            return Err(Error::Diverged {
                iteration: k,
                objective,
            });
        }
        objective_values.push(objective);
        on_iteration(k, objective);

        let termination = if objective < cfg.tol {
            Some(Termination::Converged)
        } else if k >= cfg.max_iters {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(OptimizationTrace {
                objective_values,
                final_grid: grid,
                iterations: k,
                termination,
            });
        }

        let grad = gradient_from_trajectory(
            gen,
            &grid,
            &traj,
            spec,
            GradientMethod::Trapezoid(cfg.quadrature),
        )?;
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::Diverged {
                iteration: k,
                objective,
            });
        }
        grid.apply_gradient_step(&grad, cfg.step)?;
        k += 1;
    }
}

/// Initial guess u_j = cos(0.3 t_j), w1_j = w2_j = exp(-5 (t_j/T - 1/2)²)
/// evaluated at the right endpoints t_j = j·T/N. All w values are strictly
/// positive, so no incoherent channel starts on the w = 0 stationary
/// plane.
pub fn cosine_gaussian_guess(final_time: f64, intervals: usize) -> Result<ControlGrid> {
    let mut u = Vec::with_capacity(intervals);
    let mut w = Vec::with_capacity(intervals);
    for j in 1..=intervals {
        let t = j as f64 * final_time / intervals as f64;
        u.push((0.3 * t).cos());
        let centered = t / final_time - 0.5;
        w.push((-5.0 * centered * centered).exp());
    }
    ControlGrid::uniform(final_time, intervals, u, w.clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_generators, rho_to_x, DensityMatrix, Interaction, ModelParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper_params() -> ModelParams {
        ModelParams {
            coupling: 0.1,
            omega1: 1.0,
            omega2: 0.5,
            lambda1: 0.05,
            lambda2: 0.05,
            decay1: 0.05,
            decay2: 0.05,
        }
    }

    fn x_start() -> RealState {
        rho_to_x(&DensityMatrix::from_diagonal([0.9, 0.1, 0.0, 0.0]).unwrap())
    }

    fn x_target() -> RealState {
        rho_to_x(&DensityMatrix::from_diagonal([0.2, 0.3, 0.2, 0.3]).unwrap())
    }

    #[test]
    fn objective_at_reference_states() {
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        assert_eq!(spec.value(&x_target()), 0.0);
        assert_relative_eq!(spec.constant_term(), 0.26, max_relative = 1e-12);
        assert_relative_eq!(spec.value(&x_start()), 0.66, max_relative = 1e-12);
    }

    #[test]
    fn terminal_gradient_vanishes_at_target() {
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        for g in spec.terminal_gradient(&x_target()) {
            assert_eq!(g, 0.0);
        }
        // at x = 0 the gradient reduces to b
        let zero = RealState::new([0.0; 16]);
        assert_eq!(spec.terminal_gradient(&zero), *spec.linear_term());
    }

    #[test]
    fn terminal_gradient_matches_finite_differences() {
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let mut x = [0.0; 16];
        for v in &mut x {
            *v = rng.gen_range(-0.5..0.5);
        }
        let state = RealState::new(x);
        let grad = spec.terminal_gradient(&state);
        let h = 1e-6;
        for i in 0..16 {
            let mut plus = x;
            plus[i] += h;
            let mut minus = x;
            minus[i] -= h;
            let fd = (spec.value(&RealState::new(plus)) - spec.value(&RealState::new(minus)))
                / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn incoherent_gradient_is_exactly_zero_at_w_zero() {
        let gen = build_generators(&paper_params(), Interaction::V1).unwrap();
        let n = 4;
        let mut w1 = vec![0.3; n];
        let mut w2 = vec![0.4; n];
        w1[1] = 0.0;
        w2[3] = 0.0;
        let grid = ControlGrid::uniform(2.0, n, vec![0.5; n], w1, w2).unwrap();
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        for method in [
            GradientMethod::Trapezoid(QuadratureConfig::default()),
            GradientMethod::Exact,
        ] {
            let grad = gradient_with(&gen, &grid, &x_start(), &spec, method).unwrap();
            assert_eq!(grad[n + 1], 0.0);
            assert_eq!(grad[2 * n + 3], 0.0);
            assert_ne!(grad[n + 0], 0.0);
        }
    }

    #[test]
    fn trapezoid_and_exact_gradients_align() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let gen = build_generators(&paper_params(), Interaction::V2).unwrap();
        let n = 3;
        let grid = ControlGrid::uniform(
            1.5,
            n,
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
            (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
        )
        .unwrap();
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        let trap = gradient(&gen, &grid, &x_start(), &spec, QuadratureConfig::default()).unwrap();
        let exact =
            gradient_with(&gen, &grid, &x_start(), &spec, GradientMethod::Exact).unwrap();
        let dot: f64 = trap.iter().zip(&exact).map(|(a, b)| a * b).sum();
        let na: f64 = trap.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = exact.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(dot / (na * nb) > 1.0 - 1e-6);
    }

    #[test]
    fn descent_returns_immediately_when_tolerance_exceeds_objective() {
        let gen = build_generators(&paper_params(), Interaction::V2).unwrap();
        let grid = cosine_gaussian_guess(5.0, 10).unwrap();
        let spec = ObjectiveSpec::assemble(&x_target()).unwrap();
        let cfg = OptimizerConfig {
            tol: 10.0,
            ..OptimizerConfig::default()
        };
        let trace =
            gradient_descent(&gen, &grid, &x_start(), &spec, &cfg, |_, _| {}).unwrap();
        assert_eq!(trace.iterations, 0);
        assert_eq!(trace.objective_values.len(), 1);
        assert!(trace.converged());
        assert_eq!(trace.final_grid, grid);
    }

    #[test]
    fn initial_guess_values() {
        let grid = cosine_gaussian_guess(5.0, 10).unwrap();
        assert_relative_eq!(grid.u(9), (1.5f64).cos(), max_relative = 1e-15);
        // midpoint of the horizon sits at the Gaussian peak
        assert_eq!(grid.w1(4), 1.0);
        assert!(grid.w1_values().iter().all(|&w| w > 0.0));
        assert!(grid.w2_values().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn optimizer_config_validation() {
        let mut cfg = OptimizerConfig::default();
        cfg.step = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = OptimizerConfig::default();
        cfg.tol = -1.0;
        assert!(cfg.validate().is_err());
    }
}
