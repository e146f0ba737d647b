//! Canonical experiment presets. Every number of the reference
//! state-preparation scenarios is pinned here exactly once so runners and
//! tests refer to presets, not literals.

use num_complex::Complex64;

use crate::error::Result;
use crate::grape::cosine_gaussian_guess;
use crate::model::{DensityMatrix, ModelParams};
use crate::propagate::ControlGrid;

/// Reference model constants: ε = 0.1, ω₁ = 1, ω₂ = 0.5,
/// Λ₁ = Λ₂ = Ω₁ = Ω₂ = 0.05.
pub fn reference_params() -> ModelParams {
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

/// Reference control horizon: T = 5 split into N = 10 uniform intervals.
pub const REFERENCE_FINAL_TIME: f64 = 5.0;
pub const REFERENCE_INTERVALS: usize = 10;

/// Mixed separable start diag(0.9, 0.1, 0, 0).
pub fn scenario_a_initial() -> DensityMatrix {
    DensityMatrix::from_diagonal([0.9, 0.1, 0.0, 0.0]).expect("valid preset state")
}

/// Maximally entangled start (|00> + |11>)/√2.
pub fn bell_phi_initial() -> DensityMatrix {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    DensityMatrix::from_pure([one, zero, zero, one]).expect("valid preset state")
}

/// Mixed separable target diag(0.2, 0.3, 0.2, 0.3) used by both scenarios.
pub fn mixed_target() -> DensityMatrix {
    DensityMatrix::from_diagonal([0.2, 0.3, 0.2, 0.3]).expect("valid preset state")
}

/// Cosine/Gaussian initial guess on the reference grid.
pub fn reference_initial_guess() -> Result<ControlGrid> {
    cosine_gaussian_guess(REFERENCE_FINAL_TIME, REFERENCE_INTERVALS)
}
