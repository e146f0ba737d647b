//! Dense matrix-exponential kernels.
//!
//! Everything here operates on real square matrices of runtime dimension
//! (16x16 in production use). Three primitives are provided:
//!
//! * [`expm`] — scaling-and-squaring with a Padé(13) rational approximant,
//!   after Higham (2005), "The Scaling and Squaring Method for the Matrix
//!   Exponential Revisited".
//! * [`expm_frechet_trapezoid`] — the directional derivative of `exp(dt*L)`
//!   in direction `E`, evaluated through the integral representation
//!   `dt * ∫₀¹ exp(α dt L) E exp((1-α) dt L) dα` with the composite
//!   trapezoidal rule on uniform nodes.
//! * [`expm_frechet_exact`] — the same derivative through the augmented
//!   block identity: the top-right block of `exp(dt * [[L, E], [0, L]])`.
//!   Serves as the reference the quadrature is checked against.
//!
//! Norms in [`quadrature_error_bound`] are spectral norms (largest singular
//! value); see [`spectral_norm`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real square matrix of runtime dimension.
pub type SquareMatrix = DMatrix<f64>;

/// Node count for the trapezoidal rule on α ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    n_points: usize,
}

impl QuadratureConfig {
    pub const DEFAULT_POINTS: usize = 20;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "trapezoidal rule needs at least 2 nodes, got {n_points}"
            )));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Trapezoid weights for uniform nodes α_k = k/(n-1), endpoints included.
    pub(crate) fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_points;
        let h = 1.0 / (n - 1) as f64;
        (0..n).map(move |k| if k == 0 || k == n - 1 { 0.5 * h } else { h })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_points: Self::DEFAULT_POINTS,
        }
    }
}

fn ensure_finite(m: &SquareMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} contains NaN or Inf")))
    }
}

fn ensure_square(m: &SquareMatrix, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Padé(13) numerator coefficients (Higham 2005, Table 10.4 family).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// ‖A‖₁ threshold below which the Padé(13) approximant is accurate to
/// double precision without scaling.
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &SquareMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Compute `exp(s * M)`.
///
/// Scaling-and-squaring with the order-13 Padé approximant. Relative
/// accuracy is near machine precision for the operator norms produced by
/// the two-qubit model (‖s·M‖ up to ~10).
pub fn expm(m: &SquareMatrix, s: f64) -> Result<SquareMatrix> {
    ensure_square(m, "expm input")?;
    ensure_finite(m, "expm input")?;
    if !s.is_finite() {
        return Err(Error::NonFinite("expm scale factor".into()));
    }

    let a = m * s;
    let norm = one_norm(&a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings as i32);

    let n = a.nrows();
    let eye = SquareMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * PADE13[13] + &a4 * PADE13[11] + &a2 * PADE13[9])
        + &a6 * PADE13[7]
        + &a4 * PADE13[5]
        + &a2 * PADE13[3]
        + &eye * PADE13[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * PADE13[12] + &a4 * PADE13[10] + &a2 * PADE13[8])
        + &a6 * PADE13[6]
        + &a4 * PADE13[4]
        + &a2 * PADE13[2]
        + &eye * PADE13[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numerical("singular Padé denominator in expm".into()))?;

    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Trapezoidal approximation of the directional derivative of `exp(dt*L)`
/// in direction `E`:
///
/// `dt * Σ_k w_k · exp(α_k dt L) · E · exp((1-α_k) dt L)`
///
/// on uniform nodes `α_k = k/(n-1)` with endpoint weights halved. Node
/// exponentials are powers of the sub-step propagator `exp(dt/(n-1) · L)`.
pub fn expm_frechet_trapezoid(
    l: &SquareMatrix,
    e: &SquareMatrix,
    dt: f64,
    q: &QuadratureConfig,
) -> Result<SquareMatrix> {
    check_frechet_inputs(l, e, dt)?;

    let n = q.n_points();
    let sub = expm(l, dt / (n - 1) as f64)?;

    // nodes[k] = exp(α_k dt L); the mirrored index n-1-k gives the
    // complementary factor exp((1-α_k) dt L).
    let dim = l.nrows();
    let mut nodes = Vec::with_capacity(n);
    nodes.push(SquareMatrix::identity(dim, dim));
    for k in 1..n {
        let next = &sub * &nodes[k - 1];
        nodes.push(next);
    }

    let mut acc = SquareMatrix::zeros(dim, dim);
    for (k, w) in q.weights().enumerate() {
        acc += &nodes[k] * e * &nodes[n - 1 - k] * w;
    }
    Ok(acc * dt)
}

/// Exact directional derivative of `exp(dt*L)` in direction `E`, read off
/// the top-right block of the exponential of the augmented block matrix
/// `[[dt·L, dt·E], [0, dt·L]]`.
pub fn expm_frechet_exact(l: &SquareMatrix, e: &SquareMatrix, dt: f64) -> Result<SquareMatrix> {
    check_frechet_inputs(l, e, dt)?;

    let dim = l.nrows();
    let mut aug = SquareMatrix::zeros(2 * dim, 2 * dim);
    aug.view_mut((0, 0), (dim, dim)).copy_from(l);
    aug.view_mut((dim, dim), (dim, dim)).copy_from(l);
    aug.view_mut((0, dim), (dim, dim)).copy_from(e);
    let full = expm(&aug, dt)?;
    Ok(full.view((0, dim), (dim, dim)).into_owned())
}

fn check_frechet_inputs(l: &SquareMatrix, e: &SquareMatrix, dt: f64) -> Result<()> {
    ensure_square(l, "generator")?;
    ensure_square(e, "direction")?;
    if l.nrows() != e.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "generator is {}x{} but direction is {}x{}",
            l.nrows(),
            l.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    ensure_finite(l, "generator")?;
    ensure_finite(e, "direction")?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be finite and positive, got {dt}"
        )));
    }
    Ok(())
}

/// A priori error bound for [`expm_frechet_trapezoid`]:
///
/// `(1 / (3 n³)) · dt³ · ‖L‖² · ‖E‖ · ‖exp(dt·L)‖`
///
/// with `n` the node count. All norms are spectral norms.
pub fn quadrature_error_bound(
    l: &SquareMatrix,
    e: &SquareMatrix,
    dt: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    check_frechet_inputs(l, e, dt)?;
    let n = q.n_points() as f64;
    let exp_l = expm(l, dt)?;
    Ok(dt.powi(3) / (3.0 * n.powi(3))
        * spectral_norm(l).powi(2)
        * spectral_norm(e)
        * spectral_norm(&exp_l))
}

/// Largest singular value, computed as sqrt(λ_max(MᵀM)).
pub fn spectral_norm(m: &SquareMatrix) -> f64 {
    let gram = m.transpose() * m;
    let eigen = gram.symmetric_eigen();
    eigen.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).max(0.0).sqrt()
}
