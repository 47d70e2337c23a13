#pragma once

#include "fimopt/fim/factor.hpp"

namespace fimopt::fim {

struct ApplyOptions {
  /// Whitening root through coupled Newton–Schulz instead of an eigensolve.
  bool newton_schulz = false;
  int newton_schulz_steps = 30;
};

/// devec(F̃^{-1/2}·vec(G)) through the structure's factored form. Scales that
/// are zero relative to the largest one (kPinvRelTol) are treated as the
/// pseudo-inverse would: the corresponding component maps to zero.
Matrix apply_preconditioner(const StructuredFactor& factor, const Matrix& g,
                            const ApplyOptions& options = {});

/// Reference path: dense pseudo-inverse square root of F̃ applied to vec(G).
Matrix apply_dense(const StructuredFactor& factor, const Matrix& g);

}  // namespace fimopt::fim
