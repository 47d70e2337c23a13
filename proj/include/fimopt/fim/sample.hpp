#pragma once

#include <cstddef>
#include <vector>

#include "fimopt/matrix.hpp"

namespace fimopt::fim {

/// Dense FIM paths refuse problems with more than this many parameters.
inline constexpr std::size_t kDenseLimit = 64;

/// A set of same-shape gradient matrices; expectations are plain means over it.
class GradientSample {
 public:
  /// Throws DimensionError on an empty list or mixed shapes and
  /// NumericError on non-finite entries.
  explicit GradientSample(std::vector<Matrix> mats);

  std::size_t rows() const noexcept { return mats_.front().rows(); }
  std::size_t cols() const noexcept { return mats_.front().cols(); }
  std::size_t size() const noexcept { return mats_.size(); }
  const std::vector<Matrix>& mats() const noexcept { return mats_; }
  const Matrix& operator[](std::size_t k) const { return mats_[k]; }

  /// mean(G·Gᵀ), m×m.
  Matrix mean_gram_rows() const;
  /// mean(Gᵀ·G), n×n.
  Matrix mean_gram_cols() const;
  /// mean(G⊙²), m×n.
  Matrix mean_squares() const;

 private:
  std::vector<Matrix> mats_;
};

/// F = mean vec(G)·vec(G)ᵀ, kept with the gradient shape it came from.
struct EmpiricalFim {
  Matrix f;
  std::size_t m = 0;
  std::size_t n = 0;
};

/// Throws RefusalError when m·n exceeds kDenseLimit.
EmpiricalFim build_empirical_fim(const GradientSample& samples);

/// RefusalError unless m·n ≤ kDenseLimit.
void require_dense_size(std::size_t m, std::size_t n, const char* what);

}  // namespace fimopt::fim
