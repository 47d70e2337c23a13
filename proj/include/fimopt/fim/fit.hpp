#pragma once

#include <functional>
#include <optional>

#include "fimopt/fim/factor.hpp"
#include "fimopt/fim/sample.hpp"

namespace fimopt::fim {

/// v = mean vec(G)⊙².
Diagonal fit_diagonal(const GradientSample& samples);

/// Rₙ = mean(GᵀG)/m, Lₘ = mean(GGᵀ)/n.
KroneckerSqrt fit_kronecker_shampoo(const GradientSample& samples);

/// M = mean(GGᵀ)/n.
Whitening fit_whitening(const GradientSample& samples);

/// sᵢ = mean(gᵢᵀgᵢ)/m. A column that is zero in every sample is a PositivityError.
Normalization fit_normalization(const GradientSample& samples);

/// U = eigenvectors of mean(GGᵀ), D = mean((UᵀG)⊙²).
SharedEigen fit_shared_eigen(const GradientSample& samples);
/// D-step only, with the eigenbasis held fixed.
SharedEigen fit_shared_eigen(const GradientSample& samples, const Matrix& u);

/// U_L, U_R = eigenvectors of mean(GGᵀ), mean(GᵀG); D = mean((U_LᵀGU_R)⊙²).
SoapEigen fit_soap(const GradientSample& samples);
SoapEigen fit_soap(const GradientSample& samples, const Matrix& ul, const Matrix& ur);

/// Alternating fixed point s = Pᵀq/‖q‖², q = Ps/‖s‖² with P = mean(G⊙²).
/// P must be strictly positive. `q_init` defaults to all ones.
TwoSidedScaling fit_two_sided(const GradientSample& samples, int iters = 5,
                              std::optional<Vector> q_init = std::nullopt);

/// The same fixed point on a given mean-square matrix P without the
/// positivity check. Collapses to s = q = 0 when P has no energy.
TwoSidedScaling two_sided_fixed_point(const Matrix& p, int iters, Vector q);

struct GeneralScaled {
  Vector s;
  Matrix m;
};

/// Fixed point for F̃ = S ⊗ M with diagonal S and dense M:
/// diag(S) = diag(mean(GᵀMG))/‖M‖², M = mean(GSGᵀ)/‖S‖², starting from
/// M = diagv(m_init) (all ones by default). The observer sees every iterate.
GeneralScaled fit_general_scaled(
    const GradientSample& samples, int iters, std::optional<Vector> m_init = std::nullopt,
    const std::function<void(int, const GeneralScaled&)>& observer = {});

/// diag(S) = √(m−r)/√(mean(colnorm²(G) − colnorm²(UᵀG))), floored at 1e-30
/// inside the root.
CompensationScale fit_compensation_scale(const GradientSample& samples, const Matrix& u);

/// Mᵢ = mean(gᵢgᵢᵀ). Oracle reference only: refuses m > 8.
GeneralBlockDiag fit_general_blockdiag(const GradientSample& samples);

/// Floor applied inside square roots of fitted scale vectors.
inline constexpr double kPositivityFloor = 1e-30;

}  // namespace fimopt::fim
