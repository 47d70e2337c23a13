#include "fimopt/fim/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"
#include "fimopt/shape_ops.hpp"

namespace fimopt::fim {

namespace {

struct Entry {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};
using Basis = std::vector<Entry>;

constexpr std::array<std::pair<Family, std::string_view>, 9> kNames{{
    {Family::Diagonal, "diagonal"},
    {Family::Normalization, "normalization"},
    {Family::Whitening, "whitening"},
    {Family::ShampooRight, "shampoo_right"},
    {Family::ShampooLeft, "shampoo_left"},
    {Family::SharedEigenD, "shared_eigen_d"},
    {Family::SoapD, "soap_d"},
    {Family::CompensationScale, "compensation"},
    {Family::GeneralBlockDiag, "block_diag"},
}};

/// Rank-one pattern (x⊗y)(x⊗y)ᵀ for vectors x (n) and y (m).
Basis outer_kron(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = y.size();
  Vector z(x.size() * m);
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t i = 0; i < m; ++i) z[j * m + i] = x[j] * y[i];
  Basis b;
  for (std::size_t c = 0; c < z.size(); ++c)
    for (std::size_t r = 0; r < z.size(); ++r)
      if (z[r] * z[c] != 0.0) {
        b.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), z[r] * z[c]});
      }
  return b;
}

/// A ⊗ B for sparse-enough A and B given densely.
Basis kron_pattern(const Matrix& a, const Matrix& b) {
  Basis out;
  for (std::size_t ja = 0; ja < a.cols(); ++ja)
    for (std::size_t ia = 0; ia < a.rows(); ++ia) {
      if (a(ia, ja) == 0.0) continue;
      for (std::size_t jb = 0; jb < b.cols(); ++jb)
        for (std::size_t ib = 0; ib < b.rows(); ++ib) {
          const double v = a(ia, ja) * b(ib, jb);
          if (v == 0.0) continue;
          out.push_back({static_cast<std::uint32_t>(ia * b.rows() + ib),
                         static_cast<std::uint32_t>(ja * b.cols() + jb), v});
        }
    }
  return out;
}

Matrix unit_sym(std::size_t p, std::size_t a, std::size_t b) {
  Matrix e(p, p);
  e(a, b) = 1.0;
  e(b, a) = 1.0;
  return e;
}

Matrix unit_diag(std::size_t p, std::size_t i) {
  Matrix e(p, p);
  e(i, i) = 1.0;
  return e;
}

/// Symmetric p×p blocks are parameterized by their upper triangle, column by column.
std::size_t sym_params(std::size_t p) { return p * (p + 1) / 2; }

Matrix decode_sym(std::span<const double> theta, std::size_t p) {
  Matrix out(p, p);
  std::size_t k = 0;
  for (std::size_t b = 0; b < p; ++b)
    for (std::size_t a = 0; a <= b; ++a, ++k) {
      out(a, b) = theta[k];
      out(b, a) = theta[k];
    }
  return out;
}

void encode_sym(const Matrix& block, std::span<double> theta) {
  std::size_t k = 0;
  for (std::size_t b = 0; b < block.cols(); ++b)
    for (std::size_t a = 0; a <= b; ++a, ++k) theta[k] = block(a, b);
}

Matrix project_psd(const Matrix& block) {
  const SymEigen e = sym_eig(block);
  Matrix scaled = e.vectors;
  for (std::size_t k = 0; k < scaled.cols(); ++k) {
    const double lambda = std::max(e.values[k], 0.0);
    for (double& x : scaled.col(k)) x *= lambda;
  }
  return symmetrized(kernels::matmul_nt(scaled, e.vectors));
}

struct Parameterization {
  std::vector<Basis> bases;
  /// Size of each PSD block, 0 for nonnegative-diagonal families.
  std::size_t block = 0;
};

Parameterization build(const OracleProblem& pb) {
  const std::size_t m = pb.m;
  const std::size_t n = pb.n;
  Parameterization out;
  auto add_sym_blocks = [&](std::size_t p, auto&& make) {
    out.block = p;
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t a = 0; a <= b; ++a)
        out.bases.push_back(make(a == b ? unit_diag(p, a) : unit_sym(p, a, b)));
  };
  switch (pb.family) {
    case Family::Diagonal:
      for (std::size_t k = 0; k < m * n; ++k) {
        out.bases.push_back({{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k), 1.0}});
      }
      break;
    case Family::Normalization:
      for (std::size_t i = 0; i < n; ++i) {
        out.bases.push_back(kron_pattern(unit_diag(n, i), Matrix::identity(m)));
      }
      break;
    case Family::Whitening:
    case Family::ShampooLeft:
      add_sym_blocks(m, [&](const Matrix& e) { return kron_pattern(Matrix::identity(n), e); });
      break;
    case Family::ShampooRight:
      add_sym_blocks(n, [&](const Matrix& e) { return kron_pattern(e, Matrix::identity(m)); });
      break;
    case Family::SharedEigenD: {
      if (pb.u.rows() != m || pb.u.cols() != m) {
        throw DimensionError("oracle_minimize: shared eigen basis must be m x m");
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
          Vector e(n, 0.0);
          e[i] = 1.0;
          out.bases.push_back(outer_kron(e, pb.u.col(k)));
        }
      break;
    }
    case Family::SoapD:
      if (pb.u.rows() != m || pb.u.cols() != m || pb.ur.rows() != n || pb.ur.cols() != n) {
        throw DimensionError("oracle_minimize: SOAP bases must be m x m and n x n");
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) out.bases.push_back(outer_kron(pb.ur.col(i), pb.u.col(k)));
      break;
    case Family::CompensationScale: {
      if (pb.u.rows() != m || pb.u.cols() >= m) {
        throw DimensionError("oracle_minimize: compensation basis must be m x r with r < m");
      }
      const Matrix uc = qr_complement(pb.u);
      const Matrix proj = kernels::matmul_nt(uc, uc);
      for (std::size_t i = 0; i < n; ++i) out.bases.push_back(kron_pattern(unit_diag(n, i), proj));
      break;
    }
    case Family::GeneralBlockDiag:
      out.block = m;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t a = 0; a <= b; ++a) {
            out.bases.push_back(
                kron_pattern(unit_diag(n, i), a == b ? unit_diag(m, a) : unit_sym(m, a, b)));
          }
      break;
  }
  return out;
}

void project(const Parameterization& p, Vector& theta) {
  if (p.block == 0) {
    for (double& x : theta) x = std::max(x, 0.0);
    return;
  }
  const std::size_t per = sym_params(p.block);
  for (std::size_t off = 0; off < theta.size(); off += per) {
    std::span<double> part(theta.data() + off, per);
    encode_sym(project_psd(decode_sym(part, p.block)), part);
  }
}

Matrix assemble(const Parameterization& p, const Vector& theta, std::size_t d) {
  Matrix out(d, d);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k] == 0.0) continue;
    for (const Entry& e : p.bases[k]) out(e.row, e.col) += theta[k] * e.value;
  }
  return out;
}

}  // namespace

std::string_view family_name(Family family) {
  for (const auto& [f, name] : kNames)
    if (f == family) return name;
  return "unknown";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (const auto& [f, n] : kNames)
    if (n == name) return f;
  return std::nullopt;
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families = [] {
    std::vector<Family> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return families;
}

OracleResult oracle_minimize(const OracleProblem& problem, const EmpiricalFim& fim,
                             std::optional<Vector> init, const OracleOptions& options) {
  require_dense_size(problem.m, problem.n, "oracle_minimize");
  const std::size_t d = problem.m * problem.n;
  if (fim.f.rows() != d || fim.f.cols() != d) {
    throw DimensionError("oracle_minimize: FIM size does not match the problem shape");
  }
  const Parameterization param = build(problem);
  const std::size_t count = param.bases.size();

  Vector theta = init.value_or(Vector(count, 0.0));
  if (theta.size() != count) throw DimensionError("oracle_minimize: init has the wrong length");
  project(param, theta);

  OracleResult result;
  result.approx = assemble(param, theta, d);
  Matrix residual = result.approx - fim.f;
  double step = options.initial_step;
  Vector grad(count);
  Vector candidate(count);
  Vector delta(count);
  int it = 0;
  for (; it < options.max_steps; ++it) {
    for (std::size_t k = 0; k < count; ++k) {
      double acc = 0.0;
      for (const Entry& e : param.bases[k]) acc += e.value * residual(e.row, e.col);
      grad[k] = 2.0 * acc;
    }
    for (std::size_t k = 0; k < count; ++k) candidate[k] = theta[k] - step * grad[k];
    project(param, candidate);
    double moved = 0.0;
    double moved_sq = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      delta[k] = candidate[k] - theta[k];
      moved = std::max(moved, std::abs(delta[k]));
      moved_sq += delta[k] * delta[k];
    }
    // The loss is quadratic, so its change is evaluated exactly from the step
    // rather than as a difference of two nearly equal losses.
    const Matrix change = assemble(param, delta, d);
    const double change_in_loss = frobenius_norm_sq(change) + 2.0 * inner(change, residual);
    // Sufficient decrease; a plain "no increase" test accepts the reflected
    // point of an overshooting step and oscillates forever.
    if (change_in_loss > -1e-4 * moved_sq / step) {
      step *= 0.5;
      if (step < 1e-300) {
        result.converged = true;
        break;
      }
      continue;
    }
    theta.swap(candidate);
    result.approx = assemble(param, theta, d);
    residual = result.approx - fim.f;
    step *= 1.25;
    if (-change_in_loss < options.tolerance && moved < options.tolerance) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.steps = it;
  result.loss = frobenius_norm_sq(residual);
  if (param.block == 0) {
    result.diagonal = theta;
  } else {
    const std::size_t per = sym_params(param.block);
    for (std::size_t off = 0; off < theta.size(); off += per) {
      result.blocks.push_back(decode_sym(std::span<const double>(theta.data() + off, per), param.block));
    }
  }
  result.theta = std::move(theta);
  return result;
}

EmpiricalFim compensation_target(const GradientSample& samples, const Matrix& u) {
  const std::size_t m = samples.rows();
  const std::size_t n = samples.cols();
  require_dense_size(m, n, "compensation_target");
  const Matrix uc = qr_complement(u);
  Matrix d(uc.cols(), n);
  for (const auto& g : samples.mats()) d += squared(kernels::matmul_tn(uc, g));
  d *= 1.0 / static_cast<double>(samples.size());
  std::vector<Matrix> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix scaled = uc;
    for (std::size_t k = 0; k < uc.cols(); ++k)
      for (double& x : scaled.col(k)) x *= d(k, i);
    blocks.push_back(kernels::matmul_nt(scaled, uc));
  }
  return {diagb(blocks), m, n};
}

}  // namespace fimopt::fim
