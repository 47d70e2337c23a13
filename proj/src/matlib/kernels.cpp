#include "fimopt/kernels.hpp"

#include <cstdint>
#include <string>

#include "fimopt/errors.hpp"

namespace fimopt::kernels {

namespace {

void check_inner(std::size_t lhs, std::size_t rhs, const char* what) {
  if (lhs != rhs) {
    throw DimensionError(std::string(what) + ": inner dimensions " + std::to_string(lhs) +
                         " and " + std::to_string(rhs) + " differ");
  }
}

// Each output column j is owned by one thread. The body is shared with the
// serial reference so the floating-point accumulation order is identical.
inline void matmul_col(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t m = a.rows();
  double* cj = c.data() + j * m;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double bkj = b(k, j);
    const double* ak = a.data() + k * m;
    for (std::size_t i = 0; i < m; ++i) cj[i] += ak[i] * bkj;
  }
}

inline void matmul_tn_col(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t inner = a.rows();
  const double* bj = b.data() + j * inner;
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const double* ai = a.data() + i * inner;
    double s = 0.0;
    for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
    c(i, j) = s;
  }
}

inline void matmul_nt_col(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t m = a.rows();
  double* cj = c.data() + j * m;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double bjk = b(j, k);
    const double* ak = a.data() + k * m;
    for (std::size_t i = 0; i < m; ++i) cj[i] += ak[i] * bjk;
  }
}

bool go_parallel(std::size_t m, std::size_t n, std::size_t k) {
  return m * n * k >= kParallelThreshold;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  const auto n = static_cast<std::int64_t>(b.cols());
#pragma omp parallel for schedule(static) if (go_parallel(a.rows(), b.cols(), a.cols()))
  for (std::int64_t j = 0; j < n; ++j) matmul_col(a, b, c, static_cast<std::size_t>(j));
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  const auto n = static_cast<std::int64_t>(b.cols());
#pragma omp parallel for schedule(static) if (go_parallel(a.cols(), b.cols(), a.rows()))
  for (std::int64_t j = 0; j < n; ++j) matmul_tn_col(a, b, c, static_cast<std::size_t>(j));
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  const auto n = static_cast<std::int64_t>(b.rows());
#pragma omp parallel for schedule(static) if (go_parallel(a.rows(), b.rows(), a.cols()))
  for (std::int64_t j = 0; j < n; ++j) matmul_nt_col(a, b, c, static_cast<std::size_t>(j));
  return c;
}

Matrix gram_rows(const Matrix& g) { return matmul_nt(g, g); }
Matrix gram_cols(const Matrix& g) { return matmul_tn(g, g); }

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) matmul_col(a, b, c, j);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) matmul_tn_col(a, b, c, j);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t j = 0; j < b.rows(); ++j) matmul_nt_col(a, b, c, j);
  return c;
}

Matrix gram_rows(const Matrix& g) { return matmul_nt(g, g); }
Matrix gram_cols(const Matrix& g) { return matmul_tn(g, g); }

}  // namespace serial

}  // namespace fimopt::kernels
