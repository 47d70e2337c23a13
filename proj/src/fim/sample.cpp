#include "fimopt/fim/sample.hpp"

#include <string>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"

namespace fimopt::fim {

GradientSample::GradientSample(std::vector<Matrix> mats) : mats_(std::move(mats)) {
  if (mats_.empty()) throw DimensionError("GradientSample: no samples");
  const std::size_t m = mats_.front().rows();
  const std::size_t n = mats_.front().cols();
  if (m == 0 || n == 0) throw DimensionError("GradientSample: empty gradient shape");
  for (const auto& g : mats_) {
    if (g.rows() != m || g.cols() != n) throw DimensionError("GradientSample: mixed shapes");
    if (!all_finite(g)) throw NumericError("GradientSample: non-finite entry");
  }
}

namespace {

template <typename F>
Matrix mean_of(const std::vector<Matrix>& mats, F&& f) {
  Matrix acc = f(mats.front());
  for (std::size_t k = 1; k < mats.size(); ++k) acc += f(mats[k]);
  acc *= 1.0 / static_cast<double>(mats.size());
  return acc;
}

}  // namespace

Matrix GradientSample::mean_gram_rows() const {
  return mean_of(mats_, [](const Matrix& g) { return kernels::gram_rows(g); });
}

Matrix GradientSample::mean_gram_cols() const {
  return mean_of(mats_, [](const Matrix& g) { return kernels::gram_cols(g); });
}

Matrix GradientSample::mean_squares() const {
  return mean_of(mats_, [](const Matrix& g) { return squared(g); });
}

void require_dense_size(std::size_t m, std::size_t n, const char* what) {
  if (m * n > kDenseLimit) {
    throw RefusalError(std::string(what) + ": " + std::to_string(m) + "x" + std::to_string(n) +
                       " exceeds the dense limit of " + std::to_string(kDenseLimit) +
                       " parameters");
  }
}

EmpiricalFim build_empirical_fim(const GradientSample& samples) {
  const std::size_t m = samples.rows();
  const std::size_t n = samples.cols();
  require_dense_size(m, n, "build_empirical_fim");
  const std::size_t d = m * n;
  Matrix f(d, d);
  for (const auto& g : samples.mats()) {
    const double* x = g.data();
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) f(i, j) += x[i] * x[j];
  }
  f *= 1.0 / static_cast<double>(samples.size());
  return {std::move(f), m, n};
}

}  // namespace fimopt::fim
