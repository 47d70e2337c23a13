#include "fimopt/fim/apply.hpp"

#include <algorithm>
#include <cmath>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"
#include "fimopt/shape_ops.hpp"

namespace fimopt::fim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double peak_of(std::span<const double> v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, x);
  return peak;
}

double pinv_rsqrt(double x, double peak) {
  return x > kPinvRelTol * peak ? 1.0 / std::sqrt(x) : 0.0;
}

void require_shape(const Matrix& g, std::size_t m, std::size_t n) {
  if (g.rows() != m || g.cols() != n) {
    throw DimensionError("apply_preconditioner: gradient shape does not match the factor");
  }
}

/// x / √d entrywise with pseudo-inverse semantics.
Matrix scaled_by_rsqrt(const Matrix& x, const Matrix& d) {
  const double peak = peak_of(d.storage());
  Matrix out = x;
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] *= pinv_rsqrt(d.data()[k], peak);
  return out;
}

}  // namespace

Matrix apply_preconditioner(const StructuredFactor& factor, const Matrix& g,
                            const ApplyOptions& options) {
  return std::visit(
      Overloaded{
          [&](const Diagonal& f) {
            if (f.v.size() != g.size()) {
              throw DimensionError("apply_preconditioner: diagonal length mismatch");
            }
            return scaled_by_rsqrt(g, Matrix::from_col_major(g.rows(), g.cols(), f.v));
          },
          [&](const KroneckerSqrt& f) {
            require_shape(g, f.lm.rows(), f.rn.rows());
            return kernels::matmul(kernels::matmul(sym_pow(f.lm, -0.25), g),
                                   sym_pow(f.rn, -0.25));
          },
          [&](const Whitening& f) {
            require_shape(g, f.m.rows(), f.n);
            const Matrix root = options.newton_schulz
                                    ? newton_schulz_inv_sqrt(f.m, options.newton_schulz_steps)
                                    : sym_pow(f.m, -0.5);
            return kernels::matmul(root, g);
          },
          [&](const Normalization& f) {
            require_shape(g, f.m, f.s.size());
            const double peak = peak_of(f.s);
            Matrix out = g;
            for (std::size_t i = 0; i < out.cols(); ++i) {
              const double scale = pinv_rsqrt(f.s[i], peak);
              for (double& x : out.col(i)) x *= scale;
            }
            return out;
          },
          [&](const SharedEigen& f) {
            require_shape(g, f.dtab.rows(), f.dtab.cols());
            return kernels::matmul(f.u, scaled_by_rsqrt(kernels::matmul_tn(f.u, g), f.dtab));
          },
          [&](const SoapEigen& f) {
            require_shape(g, f.dtab.rows(), f.dtab.cols());
            const Matrix rotated = kernels::matmul(kernels::matmul_tn(f.ul, g), f.ur);
            return kernels::matmul_nt(kernels::matmul(f.ul, scaled_by_rsqrt(rotated, f.dtab)),
                                      f.ur);
          },
          [&](const TwoSidedScaling& f) {
            require_shape(g, f.q.size(), f.s.size());
            double peak = 0.0;
            for (double s : f.s)
              for (double q : f.q) peak = std::max(peak, s * q);
            Matrix out = g;
            for (std::size_t j = 0; j < out.cols(); ++j)
              for (std::size_t i = 0; i < out.rows(); ++i)
                out(i, j) *= pinv_rsqrt(f.s[j] * f.q[i], peak);
            return out;
          },
          [&](const CompensationScale& f) {
            require_shape(g, f.basis.rows(), f.s.size());
            // F̃ = S⁻² ⊗ U_cU_cᵀ, so F̃^{+1/2} = S ⊗ U_cU_cᵀ; columns whose S⁻² is
            // negligible are dropped like any other null direction.
            double peak = 0.0;
            for (double s : f.s) peak = std::max(peak, 1.0 / (s * s));
            Matrix out = g - kernels::matmul(f.basis, kernels::matmul_tn(f.basis, g));
            for (std::size_t i = 0; i < out.cols(); ++i) {
              const double o = 1.0 / (f.s[i] * f.s[i]);
              const double scale = o > kPinvRelTol * peak ? f.s[i] : 0.0;
              for (double& x : out.col(i)) x *= scale;
            }
            return out;
          },
          [&](const GeneralBlockDiag& f) {
            require_shape(g, f.blocks.empty() ? 0 : f.blocks.front().rows(), f.blocks.size());
            Matrix out(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.cols(); ++i) {
              const Matrix root = sym_pow(f.blocks[i], -0.5);
              const Matrix col = kernels::matmul(root, g.cols_range(i, 1));
              std::copy(col.data(), col.data() + col.size(), out.col(i).begin());
            }
            return out;
          },
      },
      factor);
}

Matrix apply_dense(const StructuredFactor& factor, const Matrix& g) {
  const Matrix root = sym_pow(materialize(factor), -0.5);
  const Matrix x = kernels::matmul(root, devec(vec(g), g.size(), 1));
  return devec(vec(x), g.rows(), g.cols());
}

}  // namespace fimopt::fim
