#include "fimopt/fim/factor.hpp"

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

Matrix projector(const Matrix& u) { return kernels::matmul_nt(u, u); }

Matrix complement_projector(const Matrix& basis) {
  return Matrix::identity(basis.rows()) - projector(basis);
}

}  // namespace

std::string_view kind_name(const StructuredFactor& factor) {
  return std::visit(Overloaded{
                        [](const Diagonal&) { return std::string_view("diagonal"); },
                        [](const KroneckerSqrt&) { return std::string_view("kronecker"); },
                        [](const Whitening&) { return std::string_view("whitening"); },
                        [](const Normalization&) { return std::string_view("normalization"); },
                        [](const SharedEigen&) { return std::string_view("shared_eigen"); },
                        [](const SoapEigen&) { return std::string_view("soap_eigen"); },
                        [](const TwoSidedScaling&) { return std::string_view("two_sided"); },
                        [](const CompensationScale&) { return std::string_view("compensation"); },
                        [](const GeneralBlockDiag&) { return std::string_view("block_diag"); },
                    },
                    factor);
}

std::pair<std::size_t, std::size_t> factor_shape(const StructuredFactor& factor) {
  using Shape = std::pair<std::size_t, std::size_t>;
  return std::visit(
      Overloaded{
          [](const Diagonal& f) -> Shape { return {f.v.size(), 1}; },
          [](const KroneckerSqrt& f) -> Shape { return {f.lm.rows(), f.rn.rows()}; },
          [](const Whitening& f) -> Shape { return {f.m.rows(), f.n}; },
          [](const Normalization& f) -> Shape { return {f.m, f.s.size()}; },
          [](const SharedEigen& f) -> Shape { return {f.dtab.rows(), f.dtab.cols()}; },
          [](const SoapEigen& f) -> Shape { return {f.dtab.rows(), f.dtab.cols()}; },
          [](const TwoSidedScaling& f) -> Shape { return {f.q.size(), f.s.size()}; },
          [](const CompensationScale& f) -> Shape { return {f.basis.rows(), f.s.size()}; },
          [](const GeneralBlockDiag& f) -> Shape {
            return {f.blocks.empty() ? 0 : f.blocks.front().rows(), f.blocks.size()};
          },
      },
      factor);
}

Matrix materialize(const StructuredFactor& factor) {
  const auto [m, n] = factor_shape(factor);
  require_dense_size(m, n, "materialize");
  return std::visit(
      Overloaded{
          [](const Diagonal& f) { return diagv(f.v); },
          [](const KroneckerSqrt& f) { return kron(sym_pow(f.rn, 0.5), sym_pow(f.lm, 0.5)); },
          [](const Whitening& f) { return kron(Matrix::identity(f.n), f.m); },
          [](const Normalization& f) { return kron(diagv(f.s), Matrix::identity(f.m)); },
          [](const SharedEigen& f) {
            std::vector<Matrix> blocks;
            for (std::size_t i = 0; i < f.dtab.cols(); ++i) {
              Matrix scaled = f.u;
              for (std::size_t k = 0; k < scaled.cols(); ++k)
                for (double& x : scaled.col(k)) x *= f.dtab(k, i);
              blocks.push_back(kernels::matmul_nt(scaled, f.u));
            }
            return diagb(blocks);
          },
          [](const SoapEigen& f) {
            const Matrix basis = kron(f.ur, f.ul);
            Matrix scaled = basis;
            const Vector d = vec(f.dtab);
            for (std::size_t k = 0; k < scaled.cols(); ++k)
              for (double& x : scaled.col(k)) x *= d[k];
            return kernels::matmul_nt(scaled, basis);
          },
          [](const TwoSidedScaling& f) { return kron(diagv(f.s), diagv(f.q)); },
          [](const CompensationScale& f) {
            Vector o(f.s.size());
            for (std::size_t i = 0; i < o.size(); ++i) o[i] = 1.0 / (f.s[i] * f.s[i]);
            return kron(diagv(o), complement_projector(f.basis));
          },
          [](const GeneralBlockDiag& f) { return diagb(f.blocks); },
      },
      factor);
}

double structure_loss(const StructuredFactor& factor, const EmpiricalFim& fim) {
  const Matrix approx = materialize(factor);
  if (approx.rows() != fim.f.rows()) {
    throw DimensionError("structure_loss: factor and FIM sizes differ");
  }
  return frobenius_norm_sq(approx - fim.f);
}

}  // namespace fimopt::fim
