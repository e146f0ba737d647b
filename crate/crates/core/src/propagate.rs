//! Piecewise-constant evolution of the real state by composition of
//! matrix exponentials.
//!
//! On each interval the generator `L_j = A + B_u u_j + B_n1 w1_j² +
//! B_n2 w2_j²` is constant, so the exact step propagator is `exp(Δt_j L_j)`.
//! Intra-interval samples are read-only: they are produced by sub-step
//! propagators but never feed back into the node chain, so the final state
//! is independent of the sampling density.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GeneratorSet, RealState};
use crate::numerics::{expm, SquareMatrix};

/// Piecewise-constant control values on a time grid.
///
/// Breakpoints `0 = t_0 < t_1 < … < t_N = T` bound N intervals; on
/// interval j the coherent control takes the value `u[j]` and the
/// incoherent channels the squared values `n_i[j] = w_i[j]²`. The
/// square-root variables `w` are the ones optimization acts on, which
/// keeps the particle densities non-negative by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    times: Vec<f64>,
    u: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl ControlGrid {
    /// Uniform grid with Δt = final_time / intervals.
    pub fn uniform(
        final_time: f64,
        intervals: usize,
        u: Vec<f64>,
        w1: Vec<f64>,
        w2: Vec<f64>,
    ) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if intervals == 0 {
            return Err(Error::InvalidArgument("need at least one interval".into()));
        }
        let times = (0..=intervals)
            .map(|j| j as f64 * final_time / intervals as f64)
            .collect();
        Self::with_breakpoints(times, u, w1, w2)
    }

    /// Grid with explicit breakpoints; `times` must start at 0 and be
    /// strictly increasing.
    pub fn with_breakpoints(
        times: Vec<f64>,
        u: Vec<f64>,
        w1: Vec<f64>,
        w2: Vec<f64>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two breakpoints".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first breakpoint must be 0, got {}",
                times[0]
            )));
        }
        if !times.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("breakpoints".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let n = times.len() - 1;
        for (name, values) in [("u", &u), ("w1", &w1), ("w2", &w2)] {
            if values.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} values for {n} intervals",
                    values.len()
                )));
            }
            if !values.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("control values {name}")));
            }
        }
        Ok(Self { times, u, w1, w2 })
    }

    pub fn n_intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Breakpoint t_j, 0 ≤ j ≤ N.
    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn dt(&self, interval: usize) -> f64 {
        self.times[interval + 1] - self.times[interval]
    }

    pub fn u(&self, interval: usize) -> f64 {
        self.u[interval]
    }

    pub fn w1(&self, interval: usize) -> f64 {
        self.w1[interval]
    }

    pub fn w2(&self, interval: usize) -> f64 {
        self.w2[interval]
    }

    /// Incoherent density n1 on the interval; always the square of w1.
    pub fn n1(&self, interval: usize) -> f64 {
        self.w1[interval] * self.w1[interval]
    }

    pub fn n2(&self, interval: usize) -> f64 {
        self.w2[interval] * self.w2[interval]
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn w1_values(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2_values(&self) -> &[f64] {
        &self.w2
    }

    pub fn n1_values(&self) -> Vec<f64> {
        self.w1.iter().map(|w| w * w).collect()
    }

    pub fn n2_values(&self) -> Vec<f64> {
        self.w2.iter().map(|w| w * w).collect()
    }

    /// Descent variables (u¹..uᴺ, w₁¹..w₁ᴺ, w₂¹..w₂ᴺ) as one flat vector.
    pub fn parameters(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.n_intervals());
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.w2);
        v
    }

    pub fn set_parameters(&mut self, parameters: &[f64]) -> Result<()> {
        let n = self.n_intervals();
        if parameters.len() != 3 * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                3 * n,
                parameters.len()
            )));
        }
        if !parameters.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("control parameters".into()));
        }
        self.u.copy_from_slice(&parameters[..n]);
        self.w1.copy_from_slice(&parameters[n..2 * n]);
        self.w2.copy_from_slice(&parameters[2 * n..]);
        Ok(())
    }

    /// In-place update v ← v − step · gradient, gradient laid out like
    /// [`parameters`].
    pub fn apply_gradient_step(&mut self, gradient: &[f64], step: f64) -> Result<()> {
        let n = self.n_intervals();
        if gradient.len() != 3 * n {
            return Err(Error::DimensionMismatch(format!(
                "gradient has {} components, expected {}",
                gradient.len(),
                3 * n
            )));
        }
        for j in 0..n {
            self.u[j] -= step * gradient[j];
            self.w1[j] -= step * gradient[n + j];
            self.w2[j] -= step * gradient[2 * n + j];
        }
        Ok(())
    }
}

/// Generator of the bilinear system on one interval:
/// `L_j = A + B_u u_j + B_n1 w1_j² + B_n2 w2_j²`.
pub fn step_matrix(gen: &GeneratorSet, grid: &ControlGrid, interval: usize) -> Result<SquareMatrix> {
    if interval >= grid.n_intervals() {
        return Err(Error::InvalidArgument(format!(
            "interval {interval} out of range ({} intervals)",
            grid.n_intervals()
        )));
    }
    Ok(&gen.a
        + &gen.b_u * grid.u(interval)
        + &gen.b_n1 * grid.n1(interval)
        + &gen.b_n2 * grid.n2(interval))
}

/// Sampled evolution together with the cached per-interval propagators.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<RealState>,
    step_propagators: Vec<SquareMatrix>,
    samples_per_interval: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[RealState] {
        &self.states
    }

    pub fn samples_per_interval(&self) -> usize {
        self.samples_per_interval
    }

    pub fn n_intervals(&self) -> usize {
        self.step_propagators.len()
    }

    pub fn final_state(&self) -> &RealState {
        self.states.last().unwrap()
    }

    /// State at breakpoint t_j (0 ≤ j ≤ N), produced by the exact
    /// full-interval propagator chain.
    pub fn node_state(&self, j: usize) -> &RealState {
        &self.states[j * self.samples_per_interval]
    }

    /// Cached exp(Δt_j L_j) for interval j.
    pub fn step_propagator(&self, interval: usize) -> &SquareMatrix {
        &self.step_propagators[interval]
    }
}

fn state_vector(x: &RealState) -> DVector<f64> {
    DVector::from_row_slice(x.components())
}

fn vector_state(v: &DVector<f64>) -> RealState {
    let mut c = [0.0; 16];
    c.copy_from_slice(v.as_slice());
    RealState::new(c)
}

/// Evolve `x0` across the whole grid, sampling each interval at
/// `samples_per_interval` equispaced instants (the last one being the
/// breakpoint itself). Breakpoint states come from the full-interval
/// propagators, so changing the sampling density never changes them.
pub fn propagate(
    gen: &GeneratorSet,
    grid: &ControlGrid,
    x0: &RealState,
    samples_per_interval: usize,
) -> Result<Trajectory> {
    if samples_per_interval == 0 {
        return Err(Error::InvalidArgument(
            "samples_per_interval must be at least 1".into(),
        ));
    }
    x0.validate()?;

    let n = grid.n_intervals();
    let step_matrices: Vec<SquareMatrix> = (0..n)
        .into_par_iter()
        .map(|j| step_matrix(gen, grid, j))
        .collect::<Result<_>>()?;
    let step_propagators: Vec<SquareMatrix> = step_matrices
        .par_iter()
        .enumerate()
        .map(|(j, l)| expm(l, grid.dt(j)))
        .collect::<Result<_>>()?;

    let s = samples_per_interval;
    let mut times = Vec::with_capacity(n * s + 1);
    let mut states = Vec::with_capacity(n * s + 1);
    times.push(grid.time(0));
    states.push(*x0);

    let mut node = state_vector(x0);
    for j in 0..n {
        if s > 1 {
            let sub = expm(&step_matrices[j], grid.dt(j) / s as f64)?;
            let mut cursor = node.clone();
            for m in 1..s {
                cursor = &sub * &cursor;
                times.push(grid.time(j) + grid.dt(j) * m as f64 / s as f64);
                states.push(vector_state(&cursor));
            }
        }
        node = &step_propagators[j] * &node;
        times.push(grid.time(j + 1));
        states.push(vector_state(&node));
    }

    Ok(Trajectory {
        times,
        states,
        step_propagators,
        samples_per_interval: s,
    })
}

/// Cached left states and right propagator products for gradient assembly.
///
/// `prefix(j)` is the state entering interval j; `suffix(j)` is the
/// ordered product of the step propagators of all later intervals
/// (identity for the last one). Reuses the trajectory's cached
/// exponentials, so building this costs N matrix products.
#[derive(Debug, Clone)]
pub struct PrefixSuffix {
    prefixes: Vec<DVector<f64>>,
    suffixes: Vec<SquareMatrix>,
}

impl PrefixSuffix {
    pub fn n_intervals(&self) -> usize {
        self.prefixes.len()
    }

    /// State x(t_j) entering interval j.
    pub fn prefix(&self, interval: usize) -> &DVector<f64> {
        &self.prefixes[interval]
    }

    /// Product exp(Δt_N L_N) ⋯ exp(Δt_{j+2} L_{j+2}) of propagators after
    /// interval j.
    pub fn suffix(&self, interval: usize) -> &SquareMatrix {
        &self.suffixes[interval]
    }
}

pub fn prefix_suffix_products(traj: &Trajectory) -> PrefixSuffix {
    let n = traj.n_intervals();
    let prefixes: Vec<DVector<f64>> =
        (0..n).map(|j| state_vector(traj.node_state(j))).collect();

    let mut suffixes = vec![SquareMatrix::identity(16, 16); n];
    for j in (0..n.saturating_sub(1)).rev() {
        suffixes[j] = &suffixes[j + 1] * traj.step_propagator(j + 1);
    }
    PrefixSuffix { prefixes, suffixes }
}
