#include "fimopt/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"

namespace fimopt {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix out(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged rows");
    std::size_t j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

Matrix Matrix::from_col_major(std::size_t rows, std::size_t cols, Vector data) {
  if (data.size() != rows * cols) {
    throw DimensionError("from_col_major: expected " + std::to_string(rows * cols) +
                         " entries, got " + std::to_string(data.size()));
  }
  Matrix out;
  out.rows_ = rows;
  out.cols_ = cols;
  out.data_ = std::move(data);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

Matrix Matrix::cols_range(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("cols_range out of bounds");
  Matrix out(rows_, count);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * rows_), count * rows_,
              out.data_.begin());
  return out;
}

Matrix Matrix::rows_range(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw DimensionError("rows_range out of bounds");
  Matrix out(count, cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < count; ++i) out(i, j) = (*this)(first + i, j);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(const Matrix& a, const Matrix& b) { return kernels::matmul(a, b); }

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("hconcat: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  std::copy_n(a.data(), a.size(), out.data());
  std::copy_n(b.data(), b.size(), out.data() + a.size());
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] * b.data()[k];
  return out;
}

Matrix squared(const Matrix& a) { return hadamard(a, a); }

double frobenius_norm_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * a.data()[k];
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

double trace(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("trace: matrix not square");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& a) { return all_finite(std::span<const double>(a.storage())); }

Matrix symmetrized(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("symmetrized: matrix not square");
  Matrix out(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) = 0.5 * (a(i, j) + a(j, i));
  return out;
}

double asymmetry(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("asymmetry: matrix not square");
  double m = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = j + 1; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

Vector column_sums(const Matrix& a) {
  Vector out(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (double x : a.col(j)) out[j] += x;
  return out;
}

Vector column_norms_sq(const Matrix& a) {
  Vector out(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (double x : a.col(j)) out[j] += x * x;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace fimopt
