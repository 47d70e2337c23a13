#pragma once

#include <cstdint>

#include "fimopt/matrix.hpp"

namespace fimopt::optim {

inline constexpr double kDefaultEps = 1e-8;
inline constexpr double kCompensationFloor = 1e-30;

/// Norm-growth limiter. The output norm never exceeds gamma times the norm
/// stored from the previous call; the first call (phi == 0) passes through.
struct Limiter {
  double phi = 0.0;
  double gamma = 1.01;

  /// Scales x in place and returns the factor eta that was applied.
  double apply(Matrix& x);
};

/// G * diag(column norms)^-1/2 squared, i.e. unit-norm columns. Zero columns stay zero.
Matrix normalize_op(const Matrix& g);

/// (G G^T)^-1/2 G with a pseudo-inverse for rank-deficient G.
Matrix whiten_op(const Matrix& g);

/// Compensation for the directions outside span(U). Updates the running
/// complement energy p and the limiter in place and returns the limited
/// compensation matrix. Requires U to be m×r with r < m.
Matrix compensate(const Matrix& g, const Matrix& u, Vector& p, Limiter& limiter, double beta,
                  double eps = kDefaultEps);

enum class RefreshMethod { SubspaceIteration, DenseEigen };

/// Identifies one refresh so the complement sample is reproducible and
/// independent of thread scheduling.
struct SwitchSeed {
  std::uint64_t seed = 0;
  std::uint64_t layer = 0;
  std::uint64_t refresh = 0;
};

/// Leading r-dimensional basis of Q with descending Rayleigh values. An empty
/// u_prev (or DenseEigen) uses a dense eigendecomposition, otherwise one step
/// of subspace iteration from u_prev.
Matrix leading_basis(const Matrix& q, std::size_t r, const Matrix& u_prev, RefreshMethod method);

/// Keeps the top l vectors of the refreshed basis and fills the remaining
/// r - l columns with a uniform sample from its orthogonal complement.
Matrix subspace_switch(const Matrix& q, std::size_t r, std::size_t l, const Matrix& u_prev,
                       const SwitchSeed& seed,
                       RefreshMethod method = RefreshMethod::SubspaceIteration);

}  // namespace fimopt::optim
