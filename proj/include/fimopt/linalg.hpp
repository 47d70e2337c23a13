#pragma once

#include <cstddef>
#include <optional>

#include "fimopt/matrix.hpp"

namespace fimopt {

/// Eigen-pairs of a symmetric matrix.
///
/// `vectors` has orthonormal columns and `values` is sorted descending. Each
/// eigenvector is sign-normalized so its first nonzero component is positive;
/// under exactly tied eigenvalues the basis of the tied subspace is whatever
/// the QL sweep produced.
struct SymEigen {
  Matrix vectors;
  Vector values;
};

/// Eigendecomposition of a symmetric matrix via Householder tridiagonalization
/// and implicit QL. The input is symmetrized first; asymmetry above 1e-8
/// (relative) is a PreconditionError, non-finite input a NumericError.
/// With `k` set, only the top-k pairs are returned.
SymEigen sym_eig(const Matrix& m, std::optional<std::size_t> k = std::nullopt);

/// Full Householder QR: A (m×n) = Q (m×m) · R (m×n). Q is orthonormal even
/// when A is rank deficient.
struct QrResult {
  Matrix q;
  Matrix r;
};
QrResult householder_qr(const Matrix& a);

/// First a.cols() columns of the Householder Q of a.
Matrix orthonormal_basis(const Matrix& a);

/// Largest |(UᵀU − I)_ij|.
double orthonormality_error(const Matrix& u);

/// Orthonormal completion U_c (m×(m−r)) of an orthonormal U (m×r), r < m.
Matrix qr_complement(const Matrix& u);

struct NewtonSchulzResult {
  Matrix inv_sqrt;
  Matrix sqrt;
  /// Set when ‖I − A/‖A‖_F‖₂ ≥ 1, where convergence is not guaranteed.
  bool convergence_warning = false;
};

/// Coupled Newton–Schulz iteration for A^{±1/2} of an SPD matrix, started
/// from Y₀ = A/‖A‖_F, Z₀ = I. Non-SPD input is a NumericError.
NewtonSchulzResult newton_schulz(const Matrix& a, int steps = 5);
inline Matrix newton_schulz_inv_sqrt(const Matrix& a, int steps = 5) {
  return newton_schulz(a, steps).inv_sqrt;
}

/// Block power method warm-started from `init` (m×r), followed by a
/// Rayleigh–Ritz rotation. Returns r orthonormal columns with descending
/// Rayleigh quotients. If A·U collapses in rank, the Householder QR fills the
/// collapsed columns with orthonormal directions from the complement, which
/// acts as a fresh initialization for those columns.
SymEigen subspace_iteration(const Matrix& a, const Matrix& init, int steps);

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// by the pseudo-inverse matrix functions.
inline constexpr double kPinvRelTol = 1e-12;

/// A^p for symmetric PSD A through the eigendecomposition. For p < 0 this is
/// the pseudo-inverse power: eigenvalues under kPinvRelTol·λ_max map to 0.
Matrix sym_pow(const Matrix& a, double p);

/// Cholesky factor L (lower) with A = L·Lᵀ, or nullopt if A is not PD.
std::optional<Matrix> cholesky(const Matrix& a);

/// Top-r left singular vectors of g (the eigenvectors of g·gᵀ).
Matrix top_left_singular_vectors(const Matrix& g, std::size_t r);

}  // namespace fimopt
