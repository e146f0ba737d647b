//! GRAPE optimization of coherent and incoherent piecewise-constant
//! controls for a two-qubit open quantum system.
//!
//! The master equation couples a drift Hamiltonian, a coherent control
//! entering through one of two interaction operators, and incoherent
//! particle densities that drive both a Lamb-shift term and the
//! dissipator. In the real 16-component parametrization the dynamics is
//! the bilinear system `dx/dt = (A + B_u u + B_n1 n1 + B_n2 n2) x`, the
//! evolution under piecewise-constant controls is a product of matrix
//! exponentials, and the squared Hilbert–Schmidt distance to a target
//! state is minimized by plain gradient descent with analytically
//! assembled gradients.
//!
//! Module map:
//! - [`numerics`]: matrix exponentials and their directional derivatives;
//! - [`model`]: operators, the ρ ↔ x parametrization, generator assembly;
//! - [`propagate`]: control grids and exponential-product evolution;
//! - [`grape`]: objective, control gradients, gradient descent;
//! - [`analysis`]: entropy, purity, Bloch vectors, distance dynamics;
//! - [`presets`]: the pinned reference scenarios.

pub mod analysis;
pub mod error;
pub mod grape;
pub mod model;
pub mod numerics;
pub mod presets;
pub mod propagate;

pub use analysis::{
    bloch_vectors, decoupling_check, diagnostics, entropy, entropy_x, hs_distance_sq, purity,
    purity_x, reduced_states, BlochVector, DecouplingReport, DiagnosticsRow,
};
pub use error::{Error, Result};
pub use grape::{
    cosine_gaussian_guess, gradient, gradient_descent, gradient_from_trajectory, gradient_with,
    GradientMethod, ObjectiveSpec, OptimizationTrace, OptimizerConfig, Termination,
};
pub use model::{
    build_generators, dissipator_apply, hamiltonian, pauli_ops, rho_to_x, x_to_rho,
    DensityMatrix, GeneratorSet, Interaction, ModelParams, RealState,
};
pub use numerics::{
    expm, expm_frechet_exact, expm_frechet_trapezoid, quadrature_error_bound, spectral_norm,
    QuadratureConfig, SquareMatrix,
};
pub use propagate::{
    prefix_suffix_products, propagate, step_matrix, ControlGrid, PrefixSuffix, Trajectory,
};
