#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "fimopt/fim/sample.hpp"
#include "fimopt/matrix.hpp"

namespace fimopt::fim {

/// F̃ = diagv(v), v of length m·n in vec order.
struct Diagonal {
  Vector v;
};

/// F̃ = Rₙ^{1/2} ⊗ Lₘ^{1/2}.
struct KroneckerSqrt {
  Matrix rn;
  Matrix lm;
};

/// F̃ = Iₙ ⊗ M.
struct Whitening {
  Matrix m;
  std::size_t n = 0;
};

/// F̃ = diagv(s) ⊗ Iₘ.
struct Normalization {
  Vector s;
  std::size_t m = 0;
};

/// F̃ = diagb(U·diagv(D[:,i])·Uᵀ), U square orthonormal, D m×n.
struct SharedEigen {
  Matrix u;
  Matrix dtab;
};

/// F̃ = (U_R ⊗ U_L)·diagm(D)·(U_R ⊗ U_L)ᵀ.
struct SoapEigen {
  Matrix ul;
  Matrix ur;
  Matrix dtab;
};

/// F̃ = diagv(s) ⊗ diagv(q).
struct TwoSidedScaling {
  Vector s;
  Vector q;
};

/// F̃ = diagv(s)^{-2} ⊗ U_c·U_cᵀ, where U_c spans the complement of `basis`.
struct CompensationScale {
  Vector s;
  Matrix basis;
};

/// F̃ = diagb(M₁, ..., Mₙ).
struct GeneralBlockDiag {
  std::vector<Matrix> blocks;
};

using StructuredFactor = std::variant<Diagonal, KroneckerSqrt, Whitening, Normalization,
                                      SharedEigen, SoapEigen, TwoSidedScaling,
                                      CompensationScale, GeneralBlockDiag>;

std::string_view kind_name(const StructuredFactor& factor);

/// Gradient shape (m, n) the factor was fitted on.
std::pair<std::size_t, std::size_t> factor_shape(const StructuredFactor& factor);

/// Dense F̃ (mn×mn). Refuses shapes above kDenseLimit.
Matrix materialize(const StructuredFactor& factor);

/// ‖F̃ − F‖_F².
double structure_loss(const StructuredFactor& factor, const EmpiricalFim& fim);

}  // namespace fimopt::fim
