#include "fimopt/optim/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fimopt/errors.hpp"
#include "fimopt/fim/fit.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"

namespace fimopt::optim {
namespace {

void ensure_shape(Matrix& x, std::size_t rows, std::size_t cols, const char* what) {
  if (x.empty()) {
    x = Matrix(rows, cols);
  } else if (x.rows() != rows || x.cols() != cols) {
    throw DimensionError(std::string(what) + ": gradient shape changed between steps");
  }
}

void ensure_length(Vector& x, std::size_t len, const char* what) {
  if (x.empty()) {
    x.assign(len, 0.0);
  } else if (x.size() != len) {
    throw DimensionError(std::string(what) + ": gradient shape changed between steps");
  }
}

void check_finite(const Matrix& g, const char* what) {
  if (!all_finite(g)) throw NumericError(std::string(what) + ": non-finite gradient");
}

void check_interval(long k, const char* what) {
  if (k < 1) throw ConfigError(std::string(what) + ": refresh interval must be >= 1");
}

bool refresh_due(long t, long k) { return t == 1 || t % k == 0; }

// x <- beta*x + (1-beta)*y
void ema(Matrix& x, double beta, const Matrix& y) {
  double* px = x.data();
  const double* py = y.data();
  for (std::size_t k = 0; k < x.size(); ++k) px[k] = beta * px[k] + (1.0 - beta) * py[k];
}

void ema_squared(Matrix& x, double beta, const Matrix& y) {
  double* px = x.data();
  const double* py = y.data();
  for (std::size_t k = 0; k < x.size(); ++k) px[k] = beta * px[k] + (1.0 - beta) * py[k] * py[k];
}

// m / (sqrt(v) + eps), entrywise.
Matrix adaptive_ratio(const Matrix& m, const Matrix& v, double eps) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.size(); ++k) {
    out.data()[k] = m.data()[k] / (std::sqrt(v.data()[k]) + eps);
  }
  return out;
}

}  // namespace

Matrix sgd_step(SgdState& state, const Matrix& g, double lr) {
  check_finite(g, "sgd_step");
  ++state.step;
  return g * -lr;
}

Matrix adam_step(AdamState& state, const Matrix& g, double lr) {
  check_finite(g, "adam_step");
  ensure_shape(state.m, g.rows(), g.cols(), "adam_step");
  ensure_shape(state.v, g.rows(), g.cols(), "adam_step");
  const AdamConfig& c = state.config;
  const long t = ++state.step;
  ema(state.m, c.beta1, g);
  ema_squared(state.v, c.beta2, g);
  double mscale = 1.0;
  double vscale = 1.0;
  if (c.bias_correction) {
    mscale = 1.0 / (1.0 - std::pow(c.beta1, static_cast<double>(t)));
    vscale = 1.0 / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
  }
  Matrix out(g.rows(), g.cols());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double mhat = state.m.data()[k] * mscale;
    const double vhat = state.v.data()[k] * vscale;
    out.data()[k] = -lr * mhat / (std::sqrt(vhat) + c.eps);
  }
  return out;
}

Matrix racs_scaled(const Vector& s, const Vector& q, const Matrix& g, double eps) {
  if (s.size() != g.cols() || q.size() != g.rows()) {
    throw DimensionError("racs_scaled: scaling vectors do not match G");
  }
  Matrix out(g.rows(), g.cols());
  for (std::size_t j = 0; j < g.cols(); ++j) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
      out(i, j) = g(i, j) / std::max(std::sqrt(q[i] * s[j]), eps);
    }
  }
  return out;
}

Matrix racs_step(RacsState& state, const Matrix& g, double lr) {
  check_finite(g, "racs_step");
  const RacsConfig& c = state.config;
  if (c.inner_iters < 1) throw ConfigError("racs_step: inner_iters must be >= 1");
  ensure_length(state.s, g.cols(), "racs_step");
  ensure_length(state.q, g.rows(), "racs_step");
  ++state.step;

  const fim::TwoSidedScaling fit =
      fim::two_sided_fixed_point(squared(g), c.inner_iters, Vector(g.rows(), 1.0));
  for (std::size_t j = 0; j < g.cols(); ++j) state.s[j] = c.beta * state.s[j] + (1 - c.beta) * fit.s[j];
  for (std::size_t i = 0; i < g.rows(); ++i) state.q[i] = c.beta * state.q[i] + (1 - c.beta) * fit.q[i];

  Matrix scaled = racs_scaled(state.s, state.q, g, c.eps);
  state.limiter.gamma = c.gamma;
  state.last_eta = state.limiter.apply(scaled);
  return scaled * (-lr * c.alpha);
}

Matrix alicec_step(AliceCState& state, const Matrix& g, double lr) {
  check_finite(g, "alicec_step");
  const AliceCConfig& c = state.config;
  check_interval(c.interval, "alicec_step");
  const std::size_t m = g.rows();
  ensure_shape(state.q, m, m, "alicec_step");
  ensure_shape(state.m, m, g.cols(), "alicec_step");
  ensure_shape(state.v, m, g.cols(), "alicec_step");
  const long t = ++state.step;

  ema(state.q, c.beta3, kernels::gram_rows(g));
  ema(state.m, c.beta1, g);
  if (c.fixed_basis) {
    if (c.fixed_basis->rows() != m || c.fixed_basis->cols() != m) {
      throw DimensionError("alicec_step: fixed basis must be m×m");
    }
    state.u = *c.fixed_basis;
  } else if (refresh_due(t, c.interval)) {
    state.u = sym_eig(state.q).vectors;
  }

  const Matrix rotated_m = kernels::matmul_tn(state.u, state.m);
  ema_squared(state.v, c.beta2, kernels::matmul_tn(state.u, g));
  return kernels::matmul(state.u, adaptive_ratio(rotated_m, state.v, c.eps)) * -lr;
}

Matrix soap_step(SoapState& state, const Matrix& g, double lr) {
  check_finite(g, "soap_step");
  const SoapConfig& c = state.config;
  check_interval(c.interval, "soap_step");
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  ensure_shape(state.l, m, m, "soap_step");
  ensure_shape(state.r, n, n, "soap_step");
  ensure_shape(state.m, m, n, "soap_step");
  ensure_shape(state.v, m, n, "soap_step");
  const long t = ++state.step;

  ema(state.l, c.beta3, kernels::gram_rows(g));
  ema(state.r, c.beta3, kernels::gram_cols(g));
  ema(state.m, c.beta1, g);
  if (refresh_due(t, c.interval)) {
    state.ul = sym_eig(state.l).vectors;
    state.ur = c.identity_right ? Matrix::identity(n) : sym_eig(state.r).vectors;
  }

  const Matrix rotated_m = kernels::matmul(kernels::matmul_tn(state.ul, state.m), state.ur);
  ema_squared(state.v, c.beta2, kernels::matmul(kernels::matmul_tn(state.ul, g), state.ur));
  const Matrix inner = adaptive_ratio(rotated_m, state.v, c.eps);
  return kernels::matmul_nt(kernels::matmul(state.ul, inner), state.ur) * -lr;
}

Matrix inverse_fourth_root(const Matrix& a, RootMethod method, int newton_schulz_steps) {
  if (method == RootMethod::Eigen) return sym_pow(a, -0.25);
  const Matrix inv_sqrt = newton_schulz(a, newton_schulz_steps).inv_sqrt;
  return symmetrized(newton_schulz(symmetrized(inv_sqrt), newton_schulz_steps).sqrt);
}

Matrix shampoo_step(ShampooState& state, const Matrix& g, double lr) {
  check_finite(g, "shampoo_step");
  const ShampooConfig& c = state.config;
  if (state.l.empty()) {
    state.l = Matrix::identity(g.rows()) * c.eps;
    state.r = Matrix::identity(g.cols()) * c.eps;
  }
  if (state.l.rows() != g.rows() || state.r.rows() != g.cols()) {
    throw DimensionError("shampoo_step: gradient shape changed between steps");
  }
  ++state.step;
  state.l += kernels::gram_rows(g);
  state.r += kernels::gram_cols(g);
  const Matrix left = inverse_fourth_root(state.l, c.root, c.newton_schulz_steps);
  const Matrix right = inverse_fourth_root(state.r, c.root, c.newton_schulz_steps);
  return kernels::matmul(kernels::matmul(left, g), right) * -lr;
}

void validate(const AliceConfig& c, std::size_t m) {
  if (c.rank < 1 || c.rank > m) {
    throw ConfigError("alice: rank " + std::to_string(c.rank) + " must be in [1, " +
                      std::to_string(m) + "]");
  }
  if (c.leading > c.rank) throw ConfigError("alice: leading must not exceed rank");
  check_interval(c.interval, "alice");
  for (double beta : {c.beta1, c.beta2, c.beta3}) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("alice: betas must be in [0, 1)");
  }
  if (!(c.gamma > 1.0)) throw ConfigError("alice: gamma must exceed 1");
}

Matrix alice_step(AliceState& state, const Matrix& g, double lr) {
  check_finite(g, "alice_step");
  const AliceConfig& c = state.config;
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  const std::size_t r = c.rank;
  validate(c, m);
  ensure_shape(state.m, r, n, "alice_step");
  ensure_shape(state.v, r, n, "alice_step");
  if (c.tracking) ensure_shape(state.qt, r, r, "alice_step");
  if (!state.u.empty() && state.u.rows() != m) {
    throw DimensionError("alice_step: gradient shape changed between steps");
  }
  const long t = ++state.step;

  if (refresh_due(t, c.interval)) {
    Matrix q = kernels::gram_rows(g);
    if (c.tracking) {
      q *= 1.0 - c.beta3;
      if (!state.u.empty()) {
        q += kernels::matmul_nt(kernels::matmul(state.u, state.qt), state.u) * c.beta3;
      }
      q = symmetrized(q);
    }
    const SwitchSeed seed{c.seed, c.layer, state.refreshes};
    Matrix fresh = c.switching ? subspace_switch(q, r, c.leading, state.u, seed, c.refresh)
                               : leading_basis(q, r, state.u, c.refresh);
    if (!state.u.empty() && c.project_state_on_refresh) {
      const Matrix rot = kernels::matmul_tn(fresh, state.u);
      state.m = kernels::matmul(rot, state.m);
      if (c.tracking) state.qt = symmetrized(kernels::matmul_nt(kernels::matmul(rot, state.qt), rot));
    }
    state.u = std::move(fresh);
    ++state.refreshes;
  }

  const Matrix sigma = kernels::matmul_tn(state.u, g);
  if (c.tracking) ema(state.qt, c.beta3, kernels::gram_rows(sigma));
  ema(state.m, c.beta1, sigma);
  ema_squared(state.v, c.beta2, sigma);
  Matrix update = kernels::matmul(state.u, adaptive_ratio(state.m, state.v, c.eps));

  if (c.compensation && r < m) {
    state.limiter.gamma = c.gamma;
    update += compensate(g, state.u, state.p, state.limiter, c.beta1, c.eps) * c.alpha_c;
  }
  return update * (-lr * c.alpha);
}

Matrix galore_step(GaloreState& state, const Matrix& g, double lr) {
  check_finite(g, "galore_step");
  const GaloreConfig& c = state.config;
  if (c.rank < 1 || c.rank > g.rows()) {
    throw ConfigError("galore: rank " + std::to_string(c.rank) + " must be in [1, " +
                      std::to_string(g.rows()) + "]");
  }
  check_interval(c.interval, "galore");
  if (!state.u.empty() && state.u.rows() != g.rows()) {
    throw DimensionError("galore_step: gradient shape changed between steps");
  }
  const long t = ++state.step;
  if (refresh_due(t, c.interval)) state.u = top_left_singular_vectors(g, c.rank);

  state.inner.config = AdamConfig{c.beta1, c.beta2, c.eps, c.bias_correction};
  const Matrix direction = adam_step(state.inner, kernels::matmul_tn(state.u, g), 1.0);
  return kernels::matmul(state.u, direction) * (lr * c.alpha);
}

}  // namespace fimopt::optim
