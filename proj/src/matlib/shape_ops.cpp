#include "fimopt/shape_ops.hpp"

#include <string>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"

namespace fimopt {

Vector vec(const Matrix& m) { return m.storage(); }

Matrix devec(std::span<const double> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) {
    throw DimensionError("devec: length " + std::to_string(v.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Matrix::from_col_major(rows, cols, Vector(v.begin(), v.end()));
}

Vector diag(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("diag: matrix not square");
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, i);
  return out;
}

Matrix diagv(std::span<const double> v) {
  Matrix out(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i, i) = v[i];
  return out;
}

Matrix diagb(const std::vector<Matrix>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) {
    if (!b.is_square()) throw DimensionError("diagb: block is not square");
    total += b.rows();
  }
  Matrix out(total, total);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t i = 0; i < b.rows(); ++i) out(offset + i, offset + j) = b(i, j);
    offset += b.rows();
  }
  return out;
}

Matrix diagm(const Matrix& m) { return diagv(m.storage()); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ja = 0; ja < a.cols(); ++ja)
    for (std::size_t ia = 0; ia < a.rows(); ++ia) {
      const double s = a(ia, ja);
      if (s == 0.0) continue;
      for (std::size_t jb = 0; jb < b.cols(); ++jb)
        for (std::size_t ib = 0; ib < b.rows(); ++ib)
          out(ia * b.rows() + ib, ja * b.cols() + jb) = s * b(ib, jb);
    }
  return out;
}

Matrix kron_apply(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (!a.is_square() || !b.is_square() || b.rows() != c.rows() || a.rows() != c.cols()) {
    throw DimensionError("kron_apply: expected A n×n, B m×m, C m×n");
  }
  return kernels::matmul_nt(kernels::matmul(b, c), a);
}

}  // namespace fimopt
