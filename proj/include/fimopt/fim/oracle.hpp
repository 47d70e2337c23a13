#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "fimopt/fim/sample.hpp"
#include "fimopt/matrix.hpp"

namespace fimopt::fim {

/// Structure families the brute-force oracle can search over. Each is a
/// linear parameterization F̃(θ) = Σ θₖ·Bₖ with a convex feasible set.
enum class Family {
  Diagonal,          // θ = v, v ≥ 0
  Normalization,     // θ = s, F̃ = diagv(s) ⊗ Iₘ, s ≥ 0
  Whitening,         // F̃ = Iₙ ⊗ M, M PSD
  ShampooRight,      // F̃ = Rₙ ⊗ Iₘ, Rₙ PSD
  ShampooLeft,       // F̃ = Iₙ ⊗ Lₘ, Lₘ PSD
  SharedEigenD,      // F̃ = diagb(U·diagv(D[:,i])·Uᵀ), U fixed, D ≥ 0
  SoapD,             // F̃ = (U_R⊗U_L)·diagm(D)·(U_R⊗U_L)ᵀ, bases fixed, D ≥ 0
  CompensationScale, // θ = O = S⁻², F̃ = diagv(O) ⊗ U_cU_cᵀ, O ≥ 0
  GeneralBlockDiag,  // F̃ = diagb(Mᵢ), Mᵢ PSD
};

std::string_view family_name(Family family);
std::optional<Family> family_from_name(std::string_view name);
const std::vector<Family>& all_families();

struct OracleProblem {
  Family family = Family::Diagonal;
  std::size_t m = 0;
  std::size_t n = 0;
  /// SharedEigenD: m×m basis. SoapD: U_L. CompensationScale: the kept m×r basis U.
  Matrix u;
  /// SoapD: U_R.
  Matrix ur;
};

struct OracleOptions {
  int max_steps = 50000;
  double initial_step = 1e-2;
  /// Stop once an accepted step changes both the loss and every parameter by
  /// less than this.
  double tolerance = 1e-12;
};

struct OracleResult {
  Vector theta;
  Matrix approx;
  double loss = 0.0;
  bool converged = false;
  int steps = 0;
  /// Diagonal-type families: the decoded nonnegative vector (column-major for
  /// D tables, O = S⁻² for CompensationScale).
  Vector diagonal;
  /// PSD families: decoded blocks (one for Whitening and Shampoo, n for
  /// GeneralBlockDiag).
  std::vector<Matrix> blocks;
};

/// Projected gradient descent on ‖F̃(θ) − F‖_F². Positivity is enforced by
/// clamping, PSD blocks by eigenvalue clamping. The step starts at
/// `initial_step`, halves when a step fails the sufficient-decrease test and
/// grows by 25% after an accepted one. Returns the best iterate; `converged` is false
/// when the step budget ran out. Refuses m·n > kDenseLimit.
OracleResult oracle_minimize(const OracleProblem& problem, const EmpiricalFim& fim,
                             std::optional<Vector> init = std::nullopt,
                             const OracleOptions& options = {});

/// F̃_c = diagb(U_c·diagv(mean((U_cᵀgᵢ)⊙²))·U_cᵀ) with U_c = qr_complement(U):
/// the complement-space FIM the compensation scale approximates.
EmpiricalFim compensation_target(const GradientSample& samples, const Matrix& u);

}  // namespace fimopt::fim
