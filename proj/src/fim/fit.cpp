#include "fimopt/fim/fit.hpp"

#include <cmath>
#include <string>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"
#include "fimopt/shape_ops.hpp"

namespace fimopt::fim {

namespace {

double inv_count(const GradientSample& samples) {
  return 1.0 / static_cast<double>(samples.size());
}

void require_orthonormal(const Matrix& u, const char* what) {
  if (orthonormality_error(u) > 1e-8) {
    throw PreconditionError(std::string(what) + ": basis is not orthonormal");
  }
}

}  // namespace

Diagonal fit_diagonal(const GradientSample& samples) {
  return {vec(samples.mean_squares())};
}

KroneckerSqrt fit_kronecker_shampoo(const GradientSample& samples) {
  const double m = static_cast<double>(samples.rows());
  const double n = static_cast<double>(samples.cols());
  return {samples.mean_gram_cols() * (1.0 / m), samples.mean_gram_rows() * (1.0 / n)};
}

Whitening fit_whitening(const GradientSample& samples) {
  const double n = static_cast<double>(samples.cols());
  return {samples.mean_gram_rows() * (1.0 / n), samples.cols()};
}

Normalization fit_normalization(const GradientSample& samples) {
  const Vector energy = column_sums(samples.mean_squares());
  const double m = static_cast<double>(samples.rows());
  Vector s(energy.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(energy[i] > 0.0)) {
      throw PositivityError("fit_normalization: column " + std::to_string(i) +
                            " is zero in every sample");
    }
    s[i] = energy[i] / m;
  }
  return {std::move(s), samples.rows()};
}

SharedEigen fit_shared_eigen(const GradientSample& samples) {
  return fit_shared_eigen(samples, sym_eig(samples.mean_gram_rows()).vectors);
}

SharedEigen fit_shared_eigen(const GradientSample& samples, const Matrix& u) {
  if (u.rows() != samples.rows() || !u.is_square()) {
    throw DimensionError("fit_shared_eigen: basis must be m x m");
  }
  require_orthonormal(u, "fit_shared_eigen");
  Matrix d(samples.rows(), samples.cols());
  for (const auto& g : samples.mats()) d += squared(kernels::matmul_tn(u, g));
  d *= inv_count(samples);
  return {u, std::move(d)};
}

SoapEigen fit_soap(const GradientSample& samples) {
  return fit_soap(samples, sym_eig(samples.mean_gram_rows()).vectors,
                  sym_eig(samples.mean_gram_cols()).vectors);
}

SoapEigen fit_soap(const GradientSample& samples, const Matrix& ul, const Matrix& ur) {
  if (!ul.is_square() || ul.rows() != samples.rows() || !ur.is_square() ||
      ur.rows() != samples.cols()) {
    throw DimensionError("fit_soap: bases must be m x m and n x n");
  }
  require_orthonormal(ul, "fit_soap");
  require_orthonormal(ur, "fit_soap");
  Matrix d(samples.rows(), samples.cols());
  for (const auto& g : samples.mats()) {
    d += squared(kernels::matmul(kernels::matmul_tn(ul, g), ur));
  }
  d *= inv_count(samples);
  return {ul, ur, std::move(d)};
}

TwoSidedScaling fit_two_sided(const GradientSample& samples, int iters,
                              std::optional<Vector> q_init) {
  if (iters < 1) throw ConfigError("fit_two_sided: iters must be >= 1");
  const Matrix p = samples.mean_squares();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p.data()[k] > 0.0)) {
      throw PositivityError("fit_two_sided: mean squared gradient has a non-positive entry");
    }
  }
  Vector q = q_init.value_or(Vector(p.rows(), 1.0));
  if (q.size() != p.rows()) throw DimensionError("fit_two_sided: q_init must have length m");
  return two_sided_fixed_point(p, iters, std::move(q));
}

TwoSidedScaling two_sided_fixed_point(const Matrix& p, int iters, Vector q) {
  Vector s(p.cols(), 0.0);
  for (int it = 0; it < iters; ++it) {
    const double qq = dot(q, q);
    if (!(qq > 0.0)) return {Vector(p.cols(), 0.0), Vector(p.rows(), 0.0)};
    for (std::size_t j = 0; j < p.cols(); ++j) s[j] = dot(p.col(j), q) / qq;
    const double ss = dot(s, s);
    if (!(ss > 0.0)) return {Vector(p.cols(), 0.0), Vector(p.rows(), 0.0)};
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) acc += p(i, j) * s[j];
      q[i] = acc / ss;
    }
  }
  return {std::move(s), std::move(q)};
}

GeneralScaled fit_general_scaled(const GradientSample& samples, int iters,
                                 std::optional<Vector> m_init,
                                 const std::function<void(int, const GeneralScaled&)>& observer) {
  if (iters < 1) throw ConfigError("fit_general_scaled: iters must be >= 1");
  const std::size_t m = samples.rows();
  const std::size_t n = samples.cols();
  const Vector init = m_init.value_or(Vector(m, 1.0));
  if (init.size() != m) throw DimensionError("fit_general_scaled: m_init must have length m");
  GeneralScaled state{Vector(n), diagv(init)};
  for (int it = 0; it < iters; ++it) {
    // diag(S): per-column quadratic forms gᵢᵀMgᵢ.
    const double mm = frobenius_norm_sq(state.m);
    std::fill(state.s.begin(), state.s.end(), 0.0);
    for (const auto& g : samples.mats()) {
      const Matrix mg = kernels::matmul(state.m, g);
      for (std::size_t i = 0; i < n; ++i) state.s[i] += dot(g.col(i), mg.col(i));
    }
    for (double& x : state.s) {
      x *= inv_count(samples) / mm;
      if (!(x > 0.0)) throw PositivityError("fit_general_scaled: diag(S) is not positive");
    }
    const double ss = dot(state.s, state.s);
    Matrix next(m, m);
    for (const auto& g : samples.mats()) {
      Matrix gs = g;
      for (std::size_t i = 0; i < n; ++i)
        for (double& x : gs.col(i)) x *= state.s[i];
      next += kernels::matmul_nt(gs, g);
    }
    state.m = symmetrized(next * (inv_count(samples) / ss));
    if (observer) observer(it, state);
  }
  return state;
}

CompensationScale fit_compensation_scale(const GradientSample& samples, const Matrix& u) {
  const std::size_t m = samples.rows();
  if (u.rows() != m) throw DimensionError("fit_compensation_scale: basis must have m rows");
  if (u.cols() >= m) throw DimensionError("fit_compensation_scale: requires r < m");
  require_orthonormal(u, "fit_compensation_scale");
  Vector residual(samples.cols(), 0.0);
  for (const auto& g : samples.mats()) {
    const Vector total = column_norms_sq(g);
    const Vector inside = column_norms_sq(kernels::matmul_tn(u, g));
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] += total[i] - inside[i];
  }
  const double scale = std::sqrt(static_cast<double>(m - u.cols()));
  Vector s(residual.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = scale / std::sqrt(std::max(residual[i] * inv_count(samples), kPositivityFloor));
  }
  return {std::move(s), u};
}

GeneralBlockDiag fit_general_blockdiag(const GradientSample& samples) {
  const std::size_t m = samples.rows();
  if (m > 8) throw RefusalError("fit_general_blockdiag: refuses m > 8");
  std::vector<Matrix> blocks(samples.cols(), Matrix(m, m));
  for (const auto& g : samples.mats()) {
    for (std::size_t i = 0; i < samples.cols(); ++i) {
      const auto col = g.col(i);
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t a = 0; a < m; ++a) blocks[i](a, b) += col[a] * col[b];
    }
  }
  for (auto& b : blocks) b *= inv_count(samples);
  return {std::move(blocks)};
}

}  // namespace fimopt::fim
