#include "fimopt/fim/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "fimopt/fim/apply.hpp"
#include "fimopt/fim/fit.hpp"
#include "fimopt/fim/oracle.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"
#include "fimopt/shape_ops.hpp"

namespace fimopt::fim {

namespace {

constexpr double kShift = 1e-3;

struct Case {
  std::size_t m;
  std::size_t n;
  std::mt19937_64 rng;
};

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] = normal(rng);
  return out;
}

/// Gradients G = A·Z·B with fixed random mixing, so every structure has
/// something non-trivial to fit.
GradientSample draw_samples(std::size_t m, std::size_t n, std::size_t count,
                            std::mt19937_64& rng) {
  const Matrix a = gaussian(m, m, rng);
  const Matrix b = gaussian(n, n, rng);
  std::vector<Matrix> mats;
  mats.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    mats.push_back(kernels::matmul(kernels::matmul(a, gaussian(m, n, rng)), b));
  }
  return GradientSample(std::move(mats));
}

Case draw_case(std::uint64_t seed, std::uint64_t salt, int index, std::size_t min_m,
               std::size_t max_side, std::size_t limit) {
  std::seed_seq seq{seed, salt, static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  std::size_t m = 0;
  std::size_t n = 0;
  do {
    m = std::max(side(rng), min_m);
    n = side(rng);
  } while (m * n > limit);
  return {m, n, std::move(rng)};
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

void shift(Vector& v) {
  for (double& x : v) x += kShift;
}

void shift(Matrix& a) {
  for (std::size_t k = 0; k < a.size(); ++k) a.data()[k] += kShift;
}

struct OracleComparison {
  double loss_gap = 0.0;
  double param_gap = 0.0;
  bool converged = true;
};

/// One closed-form-versus-oracle comparison for `family` on a fresh case.
OracleComparison compare_family(Family family, Case& c, std::size_t sample_count, bool perturb) {
  const GradientSample samples = draw_samples(c.m, c.n, sample_count, c.rng);
  EmpiricalFim fim = build_empirical_fim(samples);
  OracleProblem problem{family, c.m, c.n, {}, {}};
  double analytic_loss = 0.0;
  Vector analytic_diag;
  std::vector<Matrix> analytic_blocks;

  switch (family) {
    case Family::Diagonal: {
      Diagonal f = fit_diagonal(samples);
      if (perturb) shift(f.v);
      analytic_loss = structure_loss(f, fim);
      analytic_diag = f.v;
      break;
    }
    case Family::Normalization: {
      Normalization f = fit_normalization(samples);
      if (perturb) shift(f.s);
      analytic_loss = structure_loss(f, fim);
      analytic_diag = f.s;
      break;
    }
    case Family::Whitening: {
      Whitening f = fit_whitening(samples);
      if (perturb) shift(f.m);
      analytic_loss = structure_loss(f, fim);
      analytic_blocks = {f.m};
      break;
    }
    case Family::ShampooRight: {
      Matrix rn = fit_kronecker_shampoo(samples).rn;
      if (perturb) shift(rn);
      analytic_loss = frobenius_norm_sq(kron(rn, Matrix::identity(c.m)) - fim.f);
      analytic_blocks = {rn};
      break;
    }
    case Family::ShampooLeft: {
      Matrix lm = fit_kronecker_shampoo(samples).lm;
      if (perturb) shift(lm);
      analytic_loss = frobenius_norm_sq(kron(Matrix::identity(c.n), lm) - fim.f);
      analytic_blocks = {lm};
      break;
    }
    case Family::SharedEigenD: {
      SharedEigen f = fit_shared_eigen(samples);
      if (perturb) shift(f.dtab);
      problem.u = f.u;
      analytic_loss = structure_loss(f, fim);
      analytic_diag = vec(f.dtab);
      break;
    }
    case Family::SoapD: {
      SoapEigen f = fit_soap(samples);
      if (perturb) shift(f.dtab);
      problem.u = f.ul;
      problem.ur = f.ur;
      analytic_loss = structure_loss(f, fim);
      analytic_diag = vec(f.dtab);
      break;
    }
    case Family::CompensationScale: {
      std::uniform_int_distribution<std::size_t> rank(1, c.m - 1);
      const Matrix u = orthonormal_basis(gaussian(c.m, rank(c.rng), c.rng));
      CompensationScale f = fit_compensation_scale(samples, u);
      Vector o(f.s.size());
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = 1.0 / (f.s[i] * f.s[i]);
      if (perturb) {
        shift(o);
        for (std::size_t i = 0; i < o.size(); ++i) f.s[i] = 1.0 / std::sqrt(o[i]);
      }
      fim = compensation_target(samples, u);
      problem.u = u;
      analytic_loss = structure_loss(f, fim);
      analytic_diag = o;
      break;
    }
    case Family::GeneralBlockDiag: {
      GeneralBlockDiag f = fit_general_blockdiag(samples);
      if (perturb)
        for (auto& b : f.blocks) shift(b);
      analytic_loss = structure_loss(f, fim);
      analytic_blocks = f.blocks;
      break;
    }
  }

  const OracleResult oracle = oracle_minimize(problem, fim);
  OracleComparison out;
  out.loss_gap = analytic_loss - oracle.loss;
  out.converged = oracle.converged;
  if (!analytic_diag.empty()) {
    out.param_gap = max_diff(analytic_diag, oracle.diagonal);
  } else {
    for (std::size_t k = 0; k < analytic_blocks.size(); ++k) {
      out.param_gap = std::max(out.param_gap, max_abs_diff(analytic_blocks[k], oracle.blocks[k]));
    }
  }
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

CertificationRow certify_family(Family family, const CertifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CertificationRow row;
  row.name = std::string(family_name(family));
  const bool perturb = options.perturb && *options.perturb == row.name;
  const std::size_t min_m = family == Family::CompensationScale ? 2 : 1;
  const std::size_t max_side = options.tier == Tier::Small ? 6 : 8;
  int unconverged = 0;
  for (int k = 0; k < options.cases; ++k) {
    Case c = draw_case(options.seed, static_cast<std::uint64_t>(family), k, min_m, max_side,
                       tier_limit(options.tier));
    const OracleComparison cmp = compare_family(family, c, options.samples, perturb);
    row.worst_gap = std::max(row.worst_gap, cmp.loss_gap);
    row.worst_param_gap = std::max(row.worst_param_gap, cmp.param_gap);
    if (!cmp.converged) ++unconverged;
    ++row.cases;
  }
  row.passed = row.worst_gap <= kLossTolerance && row.worst_param_gap <= kParamTolerance &&
               unconverged == 0;
  std::ostringstream detail;
  detail << "loss gap " << row.worst_gap << ", param gap " << row.worst_param_gap;
  if (unconverged > 0) detail << ", " << unconverged << " oracle runs hit the step cap";
  row.detail = detail.str();
  row.elapsed_ms = elapsed_ms(start);
  return row;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return std::abs(dot(a, b)) / (norm2(a) * norm2(b));
}

CertificationRow certify_two_sided(const CertifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CertificationRow row;
  row.name = "two_sided";
  const bool perturb = options.perturb && *options.perturb == row.name;
  for (int k = 0; k < options.cases; ++k) {
    Case c = draw_case(options.seed, 101, k, 1, 12, 96);
    if (c.m > 8) std::swap(c.m, c.n);
    const GradientSample samples = draw_samples(c.m, c.n, options.samples, c.rng);
    TwoSidedScaling fit = fit_two_sided(samples, 200);
    if (perturb) shift(fit.s);
    const Matrix p = samples.mean_squares();
    const Matrix left = sym_eig(kernels::gram_rows(p), 1).vectors;
    const Matrix right = sym_eig(kernels::gram_cols(p), 1).vectors;
    const double gap =
        std::max(1.0 - cosine(fit.q, left.col(0)), 1.0 - cosine(fit.s, right.col(0)));

    std::uniform_real_distribution<double> positive(0.5, 2.0);
    Vector q0(c.m);
    for (double& x : q0) x = positive(c.rng);
    const TwoSidedScaling other = fit_two_sided(samples, 200, q0);
    const Matrix a = kron(diagv(fit.s), diagv(fit.q));
    const Matrix b = kron(diagv(other.s), diagv(other.q));
    const double init_gap = max_abs_diff(a, b) / max_abs(b);

    row.worst_gap = std::max(row.worst_gap, gap);
    row.worst_param_gap = std::max(row.worst_param_gap, init_gap);
    ++row.cases;
  }
  row.passed = row.worst_gap <= kFixedPointCosineGap && row.worst_param_gap <= 1e-8;
  std::ostringstream detail;
  detail << "1 - cosine " << row.worst_gap << ", init dependence " << row.worst_param_gap;
  row.detail = detail.str();
  row.elapsed_ms = elapsed_ms(start);
  return row;
}

CertificationRow certify_apply(const CertifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CertificationRow row;
  row.name = "apply_identity";
  const bool perturb = options.perturb && *options.perturb == row.name;
  std::string worst_kind;
  for (int k = 0; k < options.cases; ++k) {
    Case c = draw_case(options.seed, 202, k, 2, 4, 16);
    const bool rank_deficient = k % 2 == 1;
    const GradientSample full = draw_samples(c.m, c.n, options.samples, c.rng);
    const GradientSample single = draw_samples(c.m, c.n, 1, c.rng);
    const GradientSample& low = rank_deficient ? single : full;
    std::uniform_int_distribution<std::size_t> rank(1, c.m - 1);
    const Matrix u = orthonormal_basis(gaussian(c.m, rank(c.rng), c.rng));
    const std::vector<StructuredFactor> factors{
        fit_diagonal(low),         fit_kronecker_shampoo(full), fit_whitening(low),
        fit_normalization(full),   fit_shared_eigen(low),       fit_soap(low),
        fit_two_sided(full),       fit_compensation_scale(full, u),
        fit_general_blockdiag(low)};
    const Matrix g = gaussian(c.m, c.n, c.rng);
    for (const auto& factor : factors) {
      Matrix fast = apply_preconditioner(factor, g);
      if (perturb) shift(fast);
      const Matrix dense = apply_dense(factor, g);
      const double gap = max_abs_diff(fast, dense) / std::max(1.0, max_abs(dense));
      if (gap > row.worst_gap) {
        row.worst_gap = gap;
        worst_kind = std::string(kind_name(factor));
      }
      ++row.cases;
    }
  }
  row.passed = row.worst_gap <= kApplyTolerance;
  std::ostringstream detail;
  detail << "relative gap " << row.worst_gap;
  if (!worst_kind.empty()) detail << " (" << worst_kind << ")";
  row.detail = detail.str();
  row.elapsed_ms = elapsed_ms(start);
  return row;
}

}  // namespace

std::size_t tier_limit(Tier tier) { return tier == Tier::Small ? 36 : 64; }

std::vector<std::string> certification_names() {
  std::vector<std::string> names;
  for (Family f : all_families()) names.emplace_back(family_name(f));
  names.emplace_back("two_sided");
  names.emplace_back("apply_identity");
  return names;
}

std::vector<CertificationRow> run_certification(const CertifyOptions& options) {
  std::vector<CertificationRow> rows;
  for (Family f : all_families()) rows.push_back(certify_family(f, options));
  rows.push_back(certify_two_sided(options));
  rows.push_back(certify_apply(options));
  return rows;
}

}  // namespace fimopt::fim
