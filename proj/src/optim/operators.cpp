#include "fimopt/optim/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"

namespace fimopt::optim {

double Limiter::apply(Matrix& x) {
  double eta = 1.0;
  const double norm = frobenius_norm(x);
  if (phi > 0.0 && norm > gamma * phi) {
    const double bound = gamma * phi;
    const Matrix original = x;
    eta = bound / norm;
    x = original * eta;
    // The rounded norm can land one ulp above the bound.
    while (frobenius_norm(x) > bound) {
      eta = std::nextafter(eta, 0.0);
      x = original * eta;
    }
  }
  phi = frobenius_norm(x);
  return eta;
}

Matrix normalize_op(const Matrix& g) {
  Matrix out = g;
  const Vector norms = column_norms_sq(g);
  for (std::size_t j = 0; j < g.cols(); ++j) {
    const double scale = norms[j] > 0.0 ? 1.0 / std::sqrt(norms[j]) : 0.0;
    for (double& x : out.col(j)) x *= scale;
  }
  return out;
}

Matrix whiten_op(const Matrix& g) {
  return kernels::matmul(sym_pow(kernels::gram_rows(g), -0.5), g);
}

Matrix compensate(const Matrix& g, const Matrix& u, Vector& p, Limiter& limiter, double beta,
                  double eps) {
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  const std::size_t r = u.cols();
  if (u.rows() != m) throw DimensionError("compensate: U must have as many rows as G");
  if (r >= m) throw DimensionError("compensate: requires r < m");
  if (p.empty()) p.assign(n, 0.0);
  if (p.size() != n) throw DimensionError("compensate: p must have length n");

  const Matrix sigma = kernels::matmul_tn(u, g);
  const Vector total = column_norms_sq(g);
  const Vector inside = column_norms_sq(sigma);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = std::max(beta * p[j] + (1.0 - beta) * (total[j] - inside[j]), 0.0);
  }

  Matrix c = g - kernels::matmul(u, sigma);
  const double lift = std::sqrt(static_cast<double>(m - r));
  for (std::size_t j = 0; j < n; ++j) {
    const double scale = lift / (std::sqrt(std::max(p[j], kCompensationFloor)) + eps);
    for (double& x : c.col(j)) x *= scale;
  }
  limiter.apply(c);
  return c;
}

Matrix leading_basis(const Matrix& q, std::size_t r, const Matrix& u_prev, RefreshMethod method) {
  if (!q.is_square()) throw DimensionError("leading_basis: Q must be square");
  if (r == 0 || r > q.rows()) throw ConfigError("leading_basis: rank must be in [1, m]");
  if (method == RefreshMethod::DenseEigen || u_prev.empty()) return sym_eig(q, r).vectors;
  if (u_prev.rows() != q.rows() || u_prev.cols() != r) {
    throw DimensionError("leading_basis: previous basis must be m×r");
  }
  return subspace_iteration(q, u_prev, 1).vectors;
}

Matrix subspace_switch(const Matrix& q, std::size_t r, std::size_t l, const Matrix& u_prev,
                       const SwitchSeed& seed, RefreshMethod method) {
  const std::size_t m = q.rows();
  if (l > r) throw ConfigError("subspace_switch: requires l <= r");
  Matrix lead = leading_basis(q, r, u_prev, method);
  if (l == r || r == m) return lead;

  const Matrix complement = qr_complement(lead);
  const std::size_t want = r - l;
  const std::size_t available = complement.cols();

  std::seed_seq seq{seed.seed, seed.layer, seed.refresh};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> pool(available);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), std::min(want, available), rng);

  Matrix out(m, r);
  std::size_t k = 0;
  for (; k < l; ++k) std::ranges::copy(lead.col(k), out.col(k).begin());
  for (std::size_t idx : picked) std::ranges::copy(complement.col(idx), out.col(k++).begin());
  // Fewer complement directions than requested: keep the next-ranked vectors.
  for (std::size_t next = l; k < r; ++next) std::ranges::copy(lead.col(next), out.col(k++).begin());
  return out;
}

}  // namespace fimopt::optim
