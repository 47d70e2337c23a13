#pragma once

#include "fimopt/matrix.hpp"

// Dense products used by every optimizer step. The OpenMP versions split the
// output by column and keep the per-entry accumulation order of the serial
// reference, so both paths produce bit-identical results.
namespace fimopt::kernels {

/// A·B.
Matrix matmul(const Matrix& a, const Matrix& b);
/// Aᵀ·B.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// A·Bᵀ.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// G·Gᵀ, symmetric by construction.
Matrix gram_rows(const Matrix& g);
/// Gᵀ·G, symmetric by construction.
Matrix gram_cols(const Matrix& g);

/// Products smaller than this many multiply-adds stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix gram_rows(const Matrix& g);
Matrix gram_cols(const Matrix& g);
}  // namespace serial

}  // namespace fimopt::kernels
