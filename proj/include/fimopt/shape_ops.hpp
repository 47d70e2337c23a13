#pragma once

#include <span>
#include <vector>

#include "fimopt/matrix.hpp"

namespace fimopt {

/// Stacks the columns of m into one vector.
Vector vec(const Matrix& m);
/// Inverse of vec; throws DimensionError when v.size() != rows * cols.
Matrix devec(std::span<const double> v, std::size_t rows, std::size_t cols);

/// Main diagonal of a square matrix.
Vector diag(const Matrix& m);
Matrix diagv(std::span<const double> v);
/// Block-diagonal matrix from square blocks.
Matrix diagb(const std::vector<Matrix>& blocks);
/// Pure diagonal matrix holding the entries of m in column-stacking order.
Matrix diagm(const Matrix& m);

/// Dense Kronecker product a ⊗ b. Only used on oracle-sized inputs.
Matrix kron(const Matrix& a, const Matrix& b);

/// devec((A ⊗ B)·vec(C)) computed as B·C·Aᵀ, with A n×n, B m×m, C m×n.
Matrix kron_apply(const Matrix& a, const Matrix& b, const Matrix& c);

}  // namespace fimopt
