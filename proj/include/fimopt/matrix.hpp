#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fimopt {

using Vector = std::vector<double>;

/// Dense real matrix stored column-major.
///
/// Column-major storage makes vec() a plain copy of the buffer, which is the
/// convention every Kronecker identity in the library is written against.
/// A default-constructed matrix is 0x0; empty shapes (e.g. m x 0) are legal so
/// that block concatenations compose without special cases.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  /// Row-wise literal, e.g. from_rows({{1, 3}, {2, 4}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Wraps a column-major buffer; throws DimensionError on length mismatch.
  static Matrix from_col_major(std::size_t rows, std::size_t cols, Vector data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const Vector& storage() const noexcept { return data_; }

  Matrix transposed() const;
  /// Columns [first, first + count).
  Matrix cols_range(std::size_t first, std::size_t count) const;
  /// Rows [first, first + count).
  Matrix rows_range(std::size_t first, std::size_t count) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
/// Matrix product; dispatches to kernels::matmul.
Matrix operator*(const Matrix& a, const Matrix& b);

/// [a, b] side by side; row counts must match.
Matrix hconcat(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
/// Entrywise square.
Matrix squared(const Matrix& a);

double frobenius_norm(const Matrix& a);
double frobenius_norm_sq(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
/// Frobenius inner product <a, b>.
double inner(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> v);

/// (a + aᵀ) / 2.
Matrix symmetrized(const Matrix& a);
/// Largest |a(i,j) - a(j,i)|.
double asymmetry(const Matrix& a);

/// Column sums, i.e. 1ᵀ·A.
Vector column_sums(const Matrix& a);
/// Squared Euclidean norm of each column.
Vector column_norms_sq(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace fimopt
