//! Dense Hermitian operator algebra on small Hilbert spaces.
//!
//! Two types carry all the physics downstream: [`HermitianOperator`], a
//! complex square matrix with Hermiticity enforced at construction, and
//! [`SpectralState`], a density matrix bundled with its eigendecomposition
//! (the basis in which rate matrices and Fisher sums are written).
//!
//! Matrices are dense `nalgebra` matrices. The intended regime is
//! desk-scale dimensions (≤ 8), where a full eigendecomposition per time
//! step costs nothing; sparse or large systems are out of scope.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::tolerances as tol;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Errors raised while constructing or validating operators and states.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("anti-Hermitian residual {residual:.3e} exceeds {limit:.1e}")]
    NotHermitian { residual: f64, limit: f64 },
    #[error("density matrix trace must be 1, got {trace:.12e}")]
    InvalidTrace { trace: f64 },
    #[error("density matrix not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("eigendecomposition residual {residual:.3e} exceeds {limit:.1e}")]
    SpectralResidual { residual: f64, limit: f64 },
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Commutator `ab − ba` at the matrix level. The result of commuting two
/// Hermitian operators is anti-Hermitian, so it is returned as a plain
/// matrix; multiply by `i` when a Hermitian result is needed.
///
/// Panics on dimension mismatch (programmer error, not data error).
pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.nrows(), b.nrows(), "commutator: dimension mismatch");
    a * b - b * a
}

/// Eigendecomposition of a Hermitian operator: real eigenvalues sorted
/// descending with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

/// A complex square matrix with enforced Hermiticity.
///
/// Construction symmetrizes the input as (A + A†)/2 and rejects matrices
/// whose anti-Hermitian residual exceeds [`tol::HERMITICITY_REJECT`], so a
/// value of this type is Hermitian by invariant, not by convention.
/// Immutable after construction; freely shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Build from an arbitrary complex matrix, enforcing Hermiticity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, OperatorError> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(OperatorError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        let adjoint = matrix.adjoint();
        let residual = max_abs(&(&matrix - &adjoint)) / 2.0;
        if residual > tol::HERMITICITY_REJECT {
            return Err(OperatorError::NotHermitian {
                residual,
                limit: tol::HERMITICITY_REJECT,
            });
        }
        let symmetrized = (matrix + adjoint).scale(0.5);
        Ok(Self { matrix: symmetrized })
    }

    /// Real diagonal operator, e.g. a Hamiltonian given by its spectrum.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            matrix: DMatrix::from_diagonal(&d),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Trace, real by Hermiticity.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    /// Sum of two Hermitian operators (Hermitian again, no re-check needed).
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    /// Spectral decomposition with eigenvalues sorted descending.
    ///
    /// Ties keep the eigensolver's order (stable sort), so degenerate
    /// eigenvalues are grouped contiguously and the column order is
    /// reproducible for a given input matrix.
    pub fn eigen(&self) -> EigenPairs {
        let se = self.matrix.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[b]
                .partial_cmp(&se.eigenvalues[a])
                .expect("eigenvalues are finite")
        });
        let values = DVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &se.eigenvectors.column(k));
        }
        EigenPairs { values, vectors }
    }

    /// Trace norm with the halved convention ‖X‖ = ½ Tr √(X†X) = ½ Σ|λᵢ|.
    pub fn trace_norm(&self) -> f64 {
        self.eigen().values.iter().map(|v| v.abs()).sum::<f64>() / 2.0
    }

    /// Operator sign function: same eigenvectors, eigenvalues mapped to
    /// sgn(λ) ∈ {−1, 0, +1} with |λ| < [`tol::SIGN_NULL`] mapped to 0.
    pub fn sign(&self) -> Self {
        let eig = self.eigen();
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            let s = if eig.values[k] > tol::SIGN_NULL {
                1.0
            } else if eig.values[k] < -tol::SIGN_NULL {
                -1.0
            } else {
                continue;
            };
            let v = eig.vectors.column(k);
            m += (v * v.adjoint()).scale(s);
        }
        // Hermitian by construction (real combination of projectors).
        Self { matrix: m }
    }
}

/// A density matrix together with its cached eigendecomposition
/// {pₙ, |n⟩}, eigenvalues sorted descending.
///
/// All rate-matrix and Fisher-information sums are written in this basis.
/// Within degenerate eigenvalue blocks the basis returned by the
/// eigensolver is arbitrary; [`crate::gksl::resolve_dynamics`] rotates it
/// to a canonical choice before any basis-sensitive splitting.
#[derive(Debug, Clone)]
pub struct SpectralState {
    rho: HermitianOperator,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl SpectralState {
    /// Validate and decompose a density matrix.
    pub fn new(rho: HermitianOperator) -> Result<Self, OperatorError> {
        let trace = rho.trace();
        if (trace - 1.0).abs() > tol::STATE_TRACE {
            return Err(OperatorError::InvalidTrace { trace });
        }
        let eig = rho.eigen();
        let min = eig.values.min();
        if min < tol::STATE_POSITIVITY {
            return Err(OperatorError::NotPositive {
                min_eigenvalue: min,
            });
        }
        let state = Self {
            rho,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        };
        state.check_residuals()?;
        Ok(state)
    }

    /// Convenience wrapper taking a raw matrix.
    pub fn from_matrix(rho: DMatrix<C64>) -> Result<Self, OperatorError> {
        Self::new(HermitianOperator::new(rho)?)
    }

    /// Decompose without the strict standalone positivity check. Used for
    /// freshly integrated states, whose positivity is gated separately at
    /// the looser trajectory tolerance.
    pub(crate) fn new_unchecked_positivity(rho: HermitianOperator) -> Self {
        let eig = rho.eigen();
        Self {
            rho,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        }
    }

    fn check_residuals(&self) -> Result<(), OperatorError> {
        let n = self.dim();
        let u = &self.eigenvectors;
        let unitarity = max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)));
        let diag = DMatrix::from_diagonal(&self.eigenvalues.map(|p| C64::new(p, 0.0)));
        let reconstruction = max_abs(&(u * diag * u.adjoint() - self.rho.matrix()));
        let residual = unitarity.max(reconstruction);
        if residual > tol::SPECTRAL_RESIDUAL {
            return Err(OperatorError::SpectralResidual {
                residual,
                limit: tol::SPECTRAL_RESIDUAL,
            });
        }
        Ok(())
    }

    /// Replace the eigenbasis with a rotated one that diagonalizes the same
    /// state (used for degenerate-block rotation). The caller guarantees
    /// that `vectors` spans the same eigenspaces.
    pub(crate) fn with_basis(&self, vectors: DMatrix<C64>) -> Self {
        Self {
            rho: self.rho.clone(),
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &HermitianOperator {
        &self.rho
    }

    /// Eigenvalues pₙ, sorted descending. Tiny negative values allowed by
    /// the positivity tolerance are clamped to zero.
    pub fn populations(&self) -> DVector<f64> {
        self.eigenvalues.map(|p| p.max(0.0))
    }

    /// Raw (unclamped) eigenvalues.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching `populations()` order.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    /// Matrix elements ⟨m|A|n⟩ of an operator in this eigenbasis.
    pub fn to_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }

    /// Inverse transform of [`Self::to_eigenbasis`].
    pub fn from_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        &self.eigenvectors * m * self.eigenvectors.adjoint()
    }

    /// Tr[ρA], with the imaginary residue (roundoff only, for Hermitian
    /// inputs) discarded.
    pub fn expectation(&self, obs: &HermitianOperator) -> f64 {
        assert_eq!(self.dim(), obs.dim(), "expectation: dimension mismatch");
        (self.rho.matrix() * obs.matrix())
            .diagonal()
            .iter()
            .map(|z| z.re)
            .sum()
    }

    /// Variance Tr[ρA²] − (Tr[ρA])², clamped to zero if a tiny negative
    /// roundoff remains.
    pub fn variance(&self, obs: &HermitianOperator) -> f64 {
        assert_eq!(self.dim(), obs.dim(), "variance: dimension mismatch");
        let a = obs.matrix();
        let second: f64 = (self.rho.matrix() * (a * a))
            .diagonal()
            .iter()
            .map(|z| z.re)
            .sum();
        let mean = self.expectation(obs);
        let v = second - mean * mean;
        debug_assert!(v > -1e-12, "variance fell below -1e-12: {v}");
        v.max(0.0)
    }

    /// Purity Tr[ρ²].
    pub fn purity(&self) -> f64 {
        self.eigenvalues.iter().map(|p| p * p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn mat(rows: &[&[(f64, f64)]]) -> DMatrix<C64> {
        let n = rows.len();
        DMatrix::from_fn(n, n, |i, j| {
            let (re, im) = rows[i][j];
            C64::new(re, im)
        })
    }

    fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(mat(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]))
            .unwrap()
    }

    fn sigma_y() -> HermitianOperator {
        HermitianOperator::new(mat(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]]))
            .unwrap()
    }

    fn sigma_z() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[1.0, -1.0])
    }

    /// Appendix-style two-level initial state with eigenvalues (0.8, 0.2).
    fn rho0() -> SpectralState {
        SpectralState::from_matrix(mat(&[
            &[(0.7, 0.0), (0.2, 0.1)],
            &[(0.2, -0.1), (0.3, 0.0)],
        ]))
        .unwrap()
    }

    #[test]
    fn identity_spectrum_is_flat() {
        let eig = HermitianOperator::identity(2).eigen();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_z_spectrum() {
        let eig = sigma_z().eigen();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn qubit_state_eigenvalues_match_closed_form() {
        // λ = 1/2 ± sqrt(0.2² + |0.2 + 0.1i|²) = (0.8, 0.2)
        let state = rho0();
        assert_abs_diff_eq!(state.eigenvalues()[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(state.eigenvalues()[1], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reconstruction_residual_small() {
        let h = HermitianOperator::new(mat(&[
            &[(0.3, 0.0), (0.1, -0.4), (0.0, 0.2)],
            &[(0.1, 0.4), (-1.2, 0.0), (0.5, 0.1)],
            &[(0.0, -0.2), (0.5, -0.1), (0.9, 0.0)],
        ]))
        .unwrap();
        let eig = h.eigen();
        let diag = DMatrix::from_diagonal(&eig.values.map(|v| C64::new(v, 0.0)));
        let rec = &eig.vectors * diag * eig.vectors.adjoint();
        assert!(max_abs(&(rec - h.matrix())) < 1e-12);
        // descending order
        assert!(eig.values[0] >= eig.values[1] && eig.values[1] >= eig.values[2]);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(HermitianOperator::zeros(3).trace_norm(), 0.0);
        assert_abs_diff_eq!(sigma_x().trace_norm(), 1.0, epsilon = 1e-14);
        // Any density matrix has trace norm 1/2 under the halved convention.
        assert_abs_diff_eq!(rho0().rho().trace_norm(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_scales_homogeneously() {
        let h = sigma_y();
        assert_abs_diff_eq!(h.scale(-2.5).trace_norm(), 2.5 * h.trace_norm(), epsilon = 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let h = HermitianOperator::from_diagonal(&[0.5, -0.5]);
        let maximally_mixed =
            SpectralState::new(HermitianOperator::identity(2).scale(0.5)).unwrap();
        assert_abs_diff_eq!(maximally_mixed.expectation(&sigma_z()), 0.0, epsilon = 1e-14);

        let excited =
            SpectralState::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(excited.expectation(&h), 0.5, epsilon = 1e-14);

        // Tr[ρ₀ H] = 0.5·0.7 − 0.5·0.3 = 0.2
        assert_abs_diff_eq!(rho0().expectation(&h), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn variance_examples() {
        let excited =
            SpectralState::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(excited.variance(&sigma_z()), 0.0, epsilon = 1e-14);

        // |+⟩⟨+| against σ_z/2: V = 1/4.
        let plus = SpectralState::from_matrix(mat(&[
            &[(0.5, 0.0), (0.5, 0.0)],
            &[(0.5, 0.0), (0.5, 0.0)],
        ]))
        .unwrap();
        assert_abs_diff_eq!(plus.variance(&sigma_z().scale(0.5)), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn variance_shift_invariant() {
        let state = rho0();
        let obs = sigma_x();
        let shifted = obs.add(&HermitianOperator::identity(2).scale(3.7));
        assert_abs_diff_eq!(state.variance(&obs), state.variance(&shifted), epsilon = 1e-12);
    }

    #[test]
    fn sign_operator_examples() {
        let sz = sigma_z();
        assert!(max_abs(&(sz.sign().matrix() - sz.matrix())) < 1e-14);
        assert_eq!(HermitianOperator::zeros(2).sign().max_abs(), 0.0);

        let d = HermitianOperator::from_diagonal(&[3.0, -2.0, 0.0]);
        let s = d.sign();
        let expected = HermitianOperator::from_diagonal(&[1.0, -1.0, 0.0]);
        assert!(max_abs(&(s.matrix() - expected.matrix())) < 1e-14);
    }

    #[test]
    fn sign_times_original_is_psd() {
        let h = HermitianOperator::new(mat(&[
            &[(0.2, 0.0), (0.7, -0.3)],
            &[(0.7, 0.3), (-1.1, 0.0)],
        ]))
        .unwrap();
        let product = HermitianOperator::new(h.sign().matrix() * h.matrix()).unwrap();
        assert!(product.eigen().values.min() > -1e-12);
        // sgn(A)² has eigenvalues in {0, 1}.
        let sq = HermitianOperator::new(h.sign().matrix() * h.sign().matrix()).unwrap();
        for v in sq.eigen().values.iter() {
            assert!(v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commutator_pauli_algebra() {
        let same = commutator(sigma_x().matrix(), sigma_x().matrix());
        assert_eq!(max_abs(&same), 0.0);
        // [σx, σy] = 2i σz
        let c = commutator(sigma_x().matrix(), sigma_y().matrix());
        let expected = sigma_z().matrix().map(|z| z * C64::new(0.0, 2.0));
        assert!(max_abs(&(c - expected)) < 1e-14);
    }

    #[test]
    fn gibbs_state_commutes_with_hamiltonian() {
        let h = HermitianOperator::from_diagonal(&[0.5, -0.5]);
        let beta = 0.7;
        let w: Vec<f64> = [0.5f64, -0.5].iter().map(|e| (-beta * e).exp()).collect();
        let z: f64 = w.iter().sum();
        let gibbs = HermitianOperator::from_diagonal(&[w[0] / z, w[1] / z]);
        assert_eq!(max_abs(&commutator(h.matrix(), gibbs.matrix())), 0.0);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = mat(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(OperatorError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_input() {
        let m = mat(&[&[(f64::NAN, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(OperatorError::NonFinite)
        ));
    }

    #[test]
    fn rejects_invalid_density_matrices() {
        let bad_trace = HermitianOperator::from_diagonal(&[0.6, 0.3]);
        assert!(matches!(
            SpectralState::new(bad_trace),
            Err(OperatorError::InvalidTrace { .. })
        ));
        let not_psd = HermitianOperator::from_diagonal(&[1.2, -0.2]);
        assert!(matches!(
            SpectralState::new(not_psd),
            Err(OperatorError::NotPositive { .. })
        ));
    }

    #[test]
    fn symmetrization_cleans_small_residuals() {
        let mut m = mat(&[&[(0.5, 0.0), (0.1, 0.2)], &[(0.1, -0.2), (0.5, 0.0)]]);
        m[(0, 1)] += C64::new(1e-12, 1e-12);
        let h = HermitianOperator::new(m).unwrap();
        assert!(max_abs(&(h.matrix() - h.matrix().adjoint())) < 1e-15);
    }
}
