//! Two-qubit open-system model: operators, the real 16-component state
//! parametrization, and the assembled bilinear generator matrices.
//!
//! Conventions. The computational basis is |00>, |01>, |10>, |11>. The
//! ladder operators are
//!
//! ```text
//! σ⁺ = [[0, 0], [1, 0]],    σ⁻ = [[0, 1], [0, 0]],
//! ```
//!
//! so the decay channel built from σ⁻ pumps population toward |00>. The
//! drift Hamiltonian is (ω₁/2)(σᶻ⊗I) + (ω₂/2)(I⊗σᶻ); the Lamb-shift term
//! ε(Λ₁n₁ σᶻ⊗I + Λ₂n₂ I⊗σᶻ) and the dissipator both carry the coupling
//! prefactor ε. The dissipator per qubit is
//!
//! ```text
//! Ω (n+1) (2σ⁻ρσ⁺ − σ⁺σ⁻ρ − ρσ⁺σ⁻) + Ω n (2σ⁺ρσ⁻ − σ⁻σ⁺ρ − ρσ⁻σ⁺).
//! ```
//!
//! A Hermitian 4x4 density matrix is stored as 16 real components
//! (diagonal entries plus real/imaginary parts of the upper triangle, row
//! by row), and the master equation becomes the bilinear system
//! `dx/dt = (A + B_u u + B_n1 n1 + B_n2 n2) x`. The four 16x16 matrices
//! are constructed by pushing each of the 16 real basis matrices through
//! the corresponding piece of the complex right-hand side; linearity in ρ
//! and affinity in the controls make this exact.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;

/// Physical constants of the controlled pair of qubits.
///
/// `coupling` is the system-environment coupling strength ε, `omega1`/
/// `omega2` the transition frequencies, `lambda1`/`lambda2` the Lamb-shift
/// constants, and `decay1`/`decay2` the relaxation-rate constants. Units
/// are angular frequencies with ħ = c = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub coupling: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub decay1: f64,
    pub decay2: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("coupling", self.coupling),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("decay1", self.decay1),
            ("decay2", self.decay2),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "model parameter {name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.omega1 == self.omega2 {
            return Err(Error::InvalidArgument(
                "omega1 and omega2 must differ so the qubits can be addressed independently"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The two supported couplings to the coherent field: `V1` drives each
/// qubit independently along x, `V2` drives the joint XX interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interaction {
    V1,
    V2,
}

impl Interaction {
    pub fn matrix(&self) -> Matrix4<Complex64> {
        let ops = pauli_ops();
        match self {
            Interaction::V1 => {
                lift_first(&ops.sigma_x) + lift_second(&ops.sigma_x)
            }
            Interaction::V2 => ops.sigma_x.kronecker(&ops.sigma_x),
        }
    }
}

impl std::fmt::Display for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Interaction::V1 => write!(f, "V1"),
            Interaction::V2 => write!(f, "V2"),
        }
    }
}

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Single-qubit operators plus their two-qubit ladder lifts.
pub struct PauliOps {
    pub sigma_x: Matrix2<Complex64>,
    pub sigma_z: Matrix2<Complex64>,
    pub sigma_plus: Matrix2<Complex64>,
    pub sigma_minus: Matrix2<Complex64>,
    pub identity: Matrix2<Complex64>,
    pub sigma1_plus: Matrix4<Complex64>,
    pub sigma1_minus: Matrix4<Complex64>,
    pub sigma2_plus: Matrix4<Complex64>,
    pub sigma2_minus: Matrix4<Complex64>,
}

pub fn pauli_ops() -> PauliOps {
    let zero = cr(0.0);
    let one = cr(1.0);
    let sigma_x = Matrix2::new(zero, one, one, zero);
    let sigma_z = Matrix2::new(one, zero, zero, -one);
    let sigma_plus = Matrix2::new(zero, zero, one, zero);
    let sigma_minus = Matrix2::new(zero, one, zero, zero);
    let identity = Matrix2::identity();
    PauliOps {
        sigma1_plus: lift_first(&sigma_plus),
        sigma1_minus: lift_first(&sigma_minus),
        sigma2_plus: lift_second(&sigma_plus),
        sigma2_minus: lift_second(&sigma_minus),
        sigma_x,
        sigma_z,
        sigma_plus,
        sigma_minus,
        identity,
    }
}

/// op ⊗ I₂ — the operator acting on the first qubit.
pub fn lift_first(op: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    op.kronecker(&Matrix2::identity())
}

/// I₂ ⊗ op — the operator acting on the second qubit.
pub fn lift_second(op: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix2::<Complex64>::identity().kronecker(op)
}

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Validated two-qubit state: Hermitian, unit trace, positive
/// semi-definite up to numerical tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Matrix4<Complex64>,
}

impl DensityMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let herm_residual = hermiticity_residual(&m);
        if herm_residual > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (residual {herm_residual:.3e})"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace must be 1, got {trace}"
            )));
        }
        let min_eig = min_eigenvalue(&m);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semi-definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { m })
    }

    pub fn from_diagonal(populations: [f64; 4]) -> Result<Self> {
        let mut m = Matrix4::zeros();
        for (i, &p) in populations.iter().enumerate() {
            m[(i, i)] = cr(p);
        }
        Self::new(m)
    }

    /// Pure state |ψ><ψ| from an (automatically normalized) state vector.
    pub fn from_pure(psi: [Complex64; 4]) -> Result<Self> {
        let norm_sq: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj() / norm_sq;
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.m
    }

    /// Eigenvalues in ascending order (real, since the matrix is Hermitian).
    pub fn eigenvalues(&self) -> [f64; 4] {
        sorted_eigenvalues(&self.m)
    }
}

pub(crate) fn hermiticity_residual(m: &Matrix4<Complex64>) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
}

pub(crate) fn sorted_eigenvalues(m: &Matrix4<Complex64>) -> [f64; 4] {
    let sym = (m + m.adjoint()) * cr(0.5);
    let eigen = sym.symmetric_eigen();
    let mut vals = [0.0; 4];
    for (slot, &v) in vals.iter_mut().zip(eigen.eigenvalues.iter()) {
        *slot = v;
    }
    vals.sort_by(f64::total_cmp);
    vals
}

fn min_eigenvalue(m: &Matrix4<Complex64>) -> f64 {
    sorted_eigenvalues(m)[0]
}

/// Weight of each real component in Frobenius-norm expressions over the
/// parametrized matrix: 1 for the four diagonal components, 2 for the
/// off-diagonal ones (each appears twice in the Hermitian matrix).
pub const COMPONENT_WEIGHTS: [f64; 16] = [
    1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 1.0, 2.0, 2.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0,
];

/// Zero-based positions of the diagonal components x1, x8, x13, x16.
pub const DIAGONAL_INDICES: [usize; 4] = [0, 7, 12, 15];

/// Zero-based positions of the components (x2, x3, x4, x5, x11, x12, x14,
/// x15) that evolve autonomously under the `V2` interaction.
pub const XTILDE_INDICES: [usize; 8] = [1, 2, 3, 4, 10, 11, 13, 14];

/// Real 16-component parametrization of a Hermitian 4x4 matrix.
///
/// Component order (one-based, as used throughout the docs): the diagonal
/// occupies x1, x8, x13, x16; each upper-triangle entry (i, j), i < j,
/// contributes its real part then its imaginary part, rows scanned left to
/// right. A state additionally satisfies x1 + x8 + x13 + x16 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealState([f64; 16]);

impl RealState {
    pub fn new(components: [f64; 16]) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[f64; 16] {
        &self.0
    }

    /// x1 + x8 + x13 + x16, the image of the matrix trace.
    pub fn trace_sum(&self) -> f64 {
        DIAGONAL_INDICES.iter().map(|&i| self.0[i]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.0.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("state components".into()));
        }
        let residual = (self.trace_sum() - 1.0).abs();
        if residual > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace condition violated (residual {residual:.3e})"
            )));
        }
        for &i in &DIAGONAL_INDICES {
            if !(-PSD_TOL..=1.0 + PSD_TOL).contains(&self.0[i]) {
                return Err(Error::InvalidState(format!(
                    "diagonal component x{} = {} outside [0, 1]",
                    i + 1,
                    self.0[i]
                )));
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for RealState {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 16]> for RealState {
    fn from(components: [f64; 16]) -> Self {
        Self(components)
    }
}

/// Positions of the upper-triangle entries in component order: the slot of
/// (i, j) holds (component index of the real part, then imag part follows).
const UPPER: [(usize, usize, usize); 6] = [
    (0, 1, 1),
    (0, 2, 3),
    (0, 3, 5),
    (1, 2, 8),
    (1, 3, 10),
    (2, 3, 13),
];

/// Raw linear read-off of the 16 real components; no validation. Works for
/// any matrix whose Hermitian part is intended (lower triangle ignored).
pub(crate) fn matrix_to_x(m: &Matrix4<Complex64>) -> [f64; 16] {
    let mut x = [0.0; 16];
    for (slot, &d) in DIAGONAL_INDICES.iter().enumerate() {
        x[d] = m[(slot, slot)].re;
    }
    for &(i, j, slot) in &UPPER {
        x[slot] = m[(i, j)].re;
        x[slot + 1] = m[(i, j)].im;
    }
    x
}

/// Raw linear rebuild of the Hermitian matrix from components.
pub(crate) fn x_to_matrix(x: &[f64; 16]) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for (slot, &d) in DIAGONAL_INDICES.iter().enumerate() {
        m[(slot, slot)] = cr(x[d]);
    }
    for &(i, j, slot) in &UPPER {
        let v = Complex64::new(x[slot], x[slot + 1]);
        m[(i, j)] = v;
        m[(j, i)] = v.conj();
    }
    m
}

/// Real coordinates of a density matrix. Exact inverse of [`x_to_rho`];
/// the round trip is a pure coordinate shuffle.
pub fn rho_to_x(rho: &DensityMatrix) -> RealState {
    RealState(matrix_to_x(rho.matrix()))
}

/// Density matrix encoded by the coordinates. Fails if the coordinates do
/// not describe a valid state (trace or positivity violated).
pub fn x_to_rho(x: &RealState) -> Result<DensityMatrix> {
    DensityMatrix::new(x_to_matrix(&x.0))
}

/// Full Hamiltonian H_S + ε(Λ₁n₁ σᶻ⊗I + Λ₂n₂ I⊗σᶻ) + u·V.
pub fn hamiltonian(
    params: &ModelParams,
    interaction: Interaction,
    u: f64,
    n1: f64,
    n2: f64,
) -> Result<Matrix4<Complex64>> {
    ensure_nonnegative_densities(n1, n2)?;
    let ops = pauli_ops();
    let z1 = lift_first(&ops.sigma_z);
    let z2 = lift_second(&ops.sigma_z);
    let eps = params.coupling;
    Ok(z1 * cr(params.omega1 / 2.0 + eps * params.lambda1 * n1)
        + z2 * cr(params.omega2 / 2.0 + eps * params.lambda2 * n2)
        + interaction.matrix() * cr(u))
}

fn ensure_nonnegative_densities(n1: f64, n2: f64) -> Result<()> {
    if n1 < 0.0 || n2 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "incoherent densities must be non-negative, got n1 = {n1}, n2 = {n2}"
        )));
    }
    Ok(())
}

/// 2 σ⁻ m σ⁺ − σ⁺σ⁻ m − m σ⁺σ⁻ for one qubit's ladder pair.
fn decay_term(
    minus: &Matrix4<Complex64>,
    plus: &Matrix4<Complex64>,
    m: &Matrix4<Complex64>,
) -> Matrix4<Complex64> {
    let num = plus * minus;
    minus * m * plus * cr(2.0) - num * m - m * num
}

/// 2 σ⁺ m σ⁻ − σ⁻σ⁺ m − m σ⁻σ⁺ for one qubit's ladder pair.
fn pump_term(
    minus: &Matrix4<Complex64>,
    plus: &Matrix4<Complex64>,
    m: &Matrix4<Complex64>,
) -> Matrix4<Complex64> {
    let hole = minus * plus;
    plus * m * minus * cr(2.0) - hole * m - m * hole
}

/// Dissipative superoperator applied to a state, without the overall
/// coupling prefactor ε:
///
/// Σ_j Ω_j [ (n_j + 1)(2σ⁻ρσ⁺ − σ⁺σ⁻ρ − ρσ⁺σ⁻) + n_j(2σ⁺ρσ⁻ − σ⁻σ⁺ρ − ρσ⁻σ⁺) ].
pub fn dissipator_apply(
    params: &ModelParams,
    n1: f64,
    n2: f64,
    rho: &DensityMatrix,
) -> Result<Matrix4<Complex64>> {
    ensure_nonnegative_densities(n1, n2)?;
    let ops = pauli_ops();
    let m = rho.matrix();
    let q1 = decay_term(&ops.sigma1_minus, &ops.sigma1_plus, m) * cr(params.decay1 * (n1 + 1.0))
        + pump_term(&ops.sigma1_minus, &ops.sigma1_plus, m) * cr(params.decay1 * n1);
    let q2 = decay_term(&ops.sigma2_minus, &ops.sigma2_plus, m) * cr(params.decay2 * (n2 + 1.0))
        + pump_term(&ops.sigma2_minus, &ops.sigma2_plus, m) * cr(params.decay2 * n2);
    Ok(q1 + q2)
}

fn minus_i_comm(h: &Matrix4<Complex64>, m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (h * m - m * h) * Complex64::new(0.0, -1.0)
}

/// The four 16x16 generator matrices of the bilinear real-state system
/// `dx/dt = (A + B_u u + B_n1 n1 + B_n2 n2) x`, together with the model
/// they were built from. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    pub interaction: Interaction,
    pub params: ModelParams,
    pub a: SquareMatrix,
    pub b_u: SquareMatrix,
    pub b_n1: SquareMatrix,
    pub b_n2: SquareMatrix,
}

/// Assemble the generator matrices by applying each control-separated
/// piece of the complex right-hand side to the 16 real basis matrices and
/// reading off coordinates. The constant part of the (n+1) decay channels
/// lands in `A`; the n-proportional decay and pump parts land in the
/// `B_n` matrices together with the Lamb-shift commutators.
pub fn build_generators(params: &ModelParams, interaction: Interaction) -> Result<GeneratorSet> {
    params.validate()?;
    let ops = pauli_ops();
    let z1 = lift_first(&ops.sigma_z);
    let z2 = lift_second(&ops.sigma_z);
    let h_s = z1 * cr(params.omega1 / 2.0) + z2 * cr(params.omega2 / 2.0);
    let v = interaction.matrix();
    let eps = params.coupling;

    let mut a = SquareMatrix::zeros(16, 16);
    let mut b_u = SquareMatrix::zeros(16, 16);
    let mut b_n1 = SquareMatrix::zeros(16, 16);
    let mut b_n2 = SquareMatrix::zeros(16, 16);

    for c in 0..16 {
        let mut basis = [0.0; 16];
        basis[c] = 1.0;
        let m = x_to_matrix(&basis);

        let drift = minus_i_comm(&h_s, &m)
            + decay_term(&ops.sigma1_minus, &ops.sigma1_plus, &m) * cr(eps * params.decay1)
            + decay_term(&ops.sigma2_minus, &ops.sigma2_plus, &m) * cr(eps * params.decay2);
        let coherent = minus_i_comm(&v, &m);
        let channel1 = minus_i_comm(&z1, &m) * cr(eps * params.lambda1)
            + (decay_term(&ops.sigma1_minus, &ops.sigma1_plus, &m)
                + pump_term(&ops.sigma1_minus, &ops.sigma1_plus, &m))
                * cr(eps * params.decay1);
        let channel2 = minus_i_comm(&z2, &m) * cr(eps * params.lambda2)
            + (decay_term(&ops.sigma2_minus, &ops.sigma2_plus, &m)
                + pump_term(&ops.sigma2_minus, &ops.sigma2_plus, &m))
                * cr(eps * params.decay2);

        for (matrix, image) in [
            (&mut a, matrix_to_x(&drift)),
            (&mut b_u, matrix_to_x(&coherent)),
            (&mut b_n1, matrix_to_x(&channel1)),
            (&mut b_n2, matrix_to_x(&channel2)),
        ] {
            for r in 0..16 {
                matrix[(r, c)] = image[r];
            }
        }
    }

    Ok(GeneratorSet {
        interaction,
        params: *params,
        a,
        b_u,
        b_n1,
        b_n2,
    })
}

impl GeneratorSet {
    /// Full-precision row-major text dump of the four matrices, for
    /// cross-implementation diffing.
    pub fn dump_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (name, m) in [
            ("A", &self.a),
            ("B_u", &self.b_u),
            ("B_n1", &self.b_n1),
            ("B_n2", &self.b_n2),
        ] {
            writeln!(out, "# {name} ({} interaction)", self.interaction).unwrap();
            for r in 0..16 {
                let row: Vec<String> =
                    (0..16).map(|c| format!("{:.16e}", m[(r, c)])).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_norm(m: &Matrix4<Complex64>) -> f64 {
        m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
    }

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

    #[test]
    fn sigma_z_lift_is_block_diagonal() {
        let ops = pauli_ops();
        let z1 = lift_first(&ops.sigma_z);
        let expected = Matrix4::from_diagonal(&nalgebra::Vector4::new(
            cr(1.0),
            cr(1.0),
            cr(-1.0),
            cr(-1.0),
        ));
        assert_eq!(z1, expected);
    }

    #[test]
    fn ladder_product_follows_convention() {
        let ops = pauli_ops();
        // with σ⁺ = [[0,0],[1,0]] the product σ⁺σ⁻ projects onto the
        // second basis vector
        let prod = ops.sigma_plus * ops.sigma_minus;
        assert_eq!(prod, Matrix2::new(cr(0.0), cr(0.0), cr(0.0), cr(1.0)));
    }

    #[test]
    fn raising_moves_ground_population_up() {
        let ops = pauli_ops();
        // 2 σ₁⁺ |00><00| σ₁⁻ = 2 |10><10|
        let rho = DensityMatrix::from_diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
        let moved = ops.sigma1_plus * rho.matrix() * ops.sigma1_minus * cr(2.0);
        let mut expected = Matrix4::zeros();
        expected[(2, 2)] = cr(2.0);
        assert_eq!(moved, expected);
    }

    #[test]
    fn hamiltonian_free_part_is_diagonal() {
        let p = paper_params();
        let h = hamiltonian(&p, Interaction::V1, 0.0, 0.0, 0.0).unwrap();
        let half_sum = (p.omega1 + p.omega2) / 2.0;
        let half_diff = (p.omega1 - p.omega2) / 2.0;
        let expected = [half_sum, half_diff, -half_diff, -half_sum];
        for (i, &v) in expected.iter().enumerate() {
            assert_relative_eq!(h[(i, i)].re, v, max_relative = 1e-15);
        }
        assert!(h.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn interaction_matrices_match_block_forms() {
        let ops = pauli_ops();
        // V1 = [[σˣ, I₂], [I₂, σˣ]]
        let v1 = Interaction::V1.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(v1[(i, j)], ops.sigma_x[(i, j)]);
                assert_eq!(v1[(i + 2, j + 2)], ops.sigma_x[(i, j)]);
                assert_eq!(v1[(i, j + 2)], ops.identity[(i, j)]);
                assert_eq!(v1[(i + 2, j)], ops.identity[(i, j)]);
            }
        }
        // V2 = antidiagonal blocks of σˣ
        let v2 = Interaction::V2.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(v2[(i, j)], cr(0.0));
                assert_eq!(v2[(i + 2, j + 2)], cr(0.0));
                assert_eq!(v2[(i, j + 2)], ops.sigma_x[(i, j)]);
                assert_eq!(v2[(i + 2, j)], ops.sigma_x[(i, j)]);
            }
        }
    }

    #[test]
    fn hamiltonian_rejects_negative_density() {
        let p = paper_params();
        assert!(matches!(
            hamiltonian(&p, Interaction::V1, 0.0, -0.1, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn dissipator_annihilates_ground_state_at_zero_density() {
        let p = paper_params();
        let ground = DensityMatrix::from_diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = dissipator_apply(&p, 0.0, 0.0, &ground).unwrap();
        assert_eq!(max_norm(&out), 0.0);
    }

    #[test]
    fn dissipator_output_is_traceless_and_hermitian() {
        let p = paper_params();
        let rho = DensityMatrix::new(x_to_matrix(&[
            0.3, 0.05, -0.02, 0.01, 0.03, 0.0, 0.02, 0.25, 0.04, -0.01, 0.02, 0.0, 0.25, 0.01,
            -0.03, 0.2,
        ]))
        .unwrap();
        let out = dissipator_apply(&p, 0.7, 1.3, &rho).unwrap();
        assert!(out.trace().norm() < 1e-13);
        assert!(hermiticity_residual(&out) < 1e-13);
    }

    #[test]
    fn coordinates_of_reference_states() {
        let rho0 = DensityMatrix::from_diagonal([0.9, 0.1, 0.0, 0.0]).unwrap();
        let x0 = rho_to_x(&rho0);
        let mut expected = [0.0; 16];
        expected[0] = 0.9;
        expected[7] = 0.1;
        assert_eq!(x0.components(), &expected);

        let target = DensityMatrix::from_diagonal([0.2, 0.3, 0.2, 0.3]).unwrap();
        let xt = rho_to_x(&target);
        let mut expected = [0.0; 16];
        expected[0] = 0.2;
        expected[7] = 0.3;
        expected[12] = 0.2;
        expected[15] = 0.3;
        assert_eq!(xt.components(), &expected);
    }

    #[test]
    fn coordinates_of_bell_state() {
        let inv = cr(1.0);
        let bell = DensityMatrix::from_pure([inv, cr(0.0), cr(0.0), inv]).unwrap();
        let x = rho_to_x(&bell);
        let mut expected = [0.0; 16];
        expected[0] = 0.5;
        expected[5] = 0.5; // real part of the (1,4) entry
        expected[15] = 0.5;
        assert_eq!(x.components(), &expected);
    }

    #[test]
    fn round_trip_is_exact() {
        let x = RealState::new([
            0.3, 0.05, -0.02, 0.01, 0.03, 0.0, 0.02, 0.25, 0.04, -0.01, 0.02, 0.0, 0.25, 0.01,
            -0.03, 0.2,
        ]);
        let rho = x_to_rho(&x).unwrap();
        let back = rho_to_x(&rho);
        assert_eq!(x.components(), back.components());
    }

    #[test]
    fn non_hermitian_matrix_is_rejected() {
        let mut m = Matrix4::<Complex64>::identity() * cr(0.25);
        m[(0, 1)] = cr(0.2);
        // missing conjugate partner below the diagonal
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn invalid_trace_and_negative_eigenvalues_are_rejected() {
        assert!(DensityMatrix::from_diagonal([0.5, 0.2, 0.1, 0.1]).is_err());
        assert!(DensityMatrix::from_diagonal([1.2, -0.2, 0.0, 0.0]).is_err());
    }

    #[test]
    fn generator_columns_preserve_trace() {
        let gen = build_generators(&paper_params(), Interaction::V1).unwrap();
        for m in [&gen.a, &gen.b_u, &gen.b_n1, &gen.b_n2] {
            for c in 0..16 {
                let sum: f64 = DIAGONAL_INDICES.iter().map(|&r| m[(r, c)]).sum();
                assert_eq!(sum, 0.0, "trace row sum nonzero in column {c}");
            }
        }
    }

    #[test]
    fn drift_couples_populations_through_decay() {
        // dx1/dt picks up 2εΩ₁ x13 and 2εΩ₂ x8 from the decay channels
        let p = paper_params();
        let gen = build_generators(&p, Interaction::V1).unwrap();
        let q = p.coupling * p.decay1;
        assert_relative_eq!(gen.a[(0, 12)], 2.0 * q, max_relative = 1e-15);
        assert_relative_eq!(gen.a[(0, 7)], 2.0 * p.coupling * p.decay2, max_relative = 1e-15);
    }

    #[test]
    fn v2_generators_have_invariant_xtilde_block() {
        let gen = build_generators(&paper_params(), Interaction::V2).unwrap();
        let complement: Vec<usize> =
            (0..16).filter(|i| !XTILDE_INDICES.contains(i)).collect();
        for m in [&gen.a, &gen.b_u, &gen.b_n1, &gen.b_n2] {
            for &r in &XTILDE_INDICES {
                for &c in &complement {
                    assert_eq!(m[(r, c)], 0.0, "coupling at ({r}, {c})");
                }
            }
        }
    }

    #[test]
    fn v2_diagonal_states_have_static_xtilde() {
        let gen = build_generators(&paper_params(), Interaction::V2).unwrap();
        let x = nalgebra::DVector::from_iterator(
            16,
            rho_to_x(&DensityMatrix::from_diagonal([0.4, 0.3, 0.2, 0.1]).unwrap())
                .components()
                .iter()
                .copied(),
        );
        let l = &gen.a + &gen.b_u * 0.8 + &gen.b_n1 * 0.5 + &gen.b_n2 * 1.5;
        let dx = l * x;
        for &i in &XTILDE_INDICES {
            assert_eq!(dx[i], 0.0);
        }
    }

    #[test]
    fn v1_coherent_generator_couples_xtilde() {
        let gen = build_generators(&paper_params(), Interaction::V1).unwrap();
        let coupled = XTILDE_INDICES.iter().any(|&r| {
            (0..16)
                .filter(|c| !XTILDE_INDICES.contains(c))
                .any(|c| gen.b_u[(r, c)] != 0.0)
        });
        assert!(coupled, "V1 should mix the two blocks");
    }

    #[test]
    fn params_validation_catches_bad_values() {
        let mut p = paper_params();
        p.decay1 = -0.05;
        assert!(p.validate().is_err());
        let mut p = paper_params();
        p.omega2 = p.omega1;
        assert!(p.validate().is_err());
    }
}
