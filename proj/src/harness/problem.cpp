#include "fimopt/harness/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fimopt/errors.hpp"
#include "fimopt/kernels.hpp"
#include "fimopt/linalg.hpp"

namespace fimopt::harness {
namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] = normal(rng);
  return out;
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

Params zeros_like(const Params& p) {
  Params out;
  for (const Matrix& w : p.weights) out.weights.emplace_back(w.rows(), w.cols());
  for (const Vector& b : p.biases) out.biases.emplace_back(b.size(), 0.0);
  return out;
}

double grad_norm(const Params& g) {
  double acc = 0.0;
  for (const Matrix& w : g.weights) acc += frobenius_norm_sq(w);
  for (const Vector& b : g.biases) acc += dot(b, b);
  return std::sqrt(acc);
}

MatrixRegression::MatrixRegression(const RegressionSpec& spec, std::uint64_t seed) : n_(spec.n) {
  require_positive(spec.samples, "regression.samples");
  require_positive(spec.m, "regression.m");
  require_positive(spec.n, "regression.n");
  if (!(spec.condition >= 1.0)) throw ConfigError("regression.condition must be >= 1");
  if (!(spec.noise >= 0.0)) throw ConfigError("regression.noise must be >= 0");
  std::mt19937_64 rng(seed);
  x_ = gaussian(spec.samples, spec.m, rng);
  for (std::size_t j = 0; j < spec.m; ++j) {
    const double frac = spec.m > 1 ? static_cast<double>(j) / static_cast<double>(spec.m - 1) : 0.0;
    const double scale = std::pow(spec.condition, -0.5 * frac);
    for (double& v : x_.col(j)) v *= scale;
  }
  if (spec.rotate) x_ = kernels::matmul(x_, householder_qr(gaussian(spec.m, spec.m, rng)).q);
  const Matrix w_star = gaussian(spec.m, spec.n, rng);
  y_ = kernels::matmul(x_, w_star);
  if (spec.noise > 0.0) y_ += gaussian(spec.samples, spec.n, rng, spec.noise);
}

Params MatrixRegression::initial_params() const {
  Params p;
  p.weights.emplace_back(x_.cols(), n_);
  return p;
}

Matrix MatrixRegression::residual(const Matrix& w) const {
  if (w.rows() != x_.cols() || w.cols() != n_) throw DimensionError("regression: bad W shape");
  return kernels::matmul(x_, w) - y_;
}

double MatrixRegression::loss(const Params& p) const {
  return frobenius_norm_sq(residual(p.weights.at(0))) / (2.0 * static_cast<double>(x_.rows()));
}

double MatrixRegression::loss_and_grad(const Params& p, Params& grad) {
  const Matrix r = residual(p.weights.at(0));
  const double inv_n = 1.0 / static_cast<double>(x_.rows());
  grad = zeros_like(p);
  grad.weights[0] = kernels::matmul_tn(x_, r) * inv_n;
  return 0.5 * frobenius_norm_sq(r) * inv_n;
}

Matrix MatrixRegression::solve() const {
  return kernels::matmul(sym_pow(kernels::gram_cols(x_), -1.0), kernels::matmul_tn(x_, y_));
}

TinyMlp::TinyMlp(const MlpSpec& spec, std::uint64_t seed) {
  require_positive(spec.inputs, "mlp.inputs");
  require_positive(spec.hidden, "mlp.hidden");
  require_positive(spec.samples, "mlp.samples");
  if (spec.classes < 2) throw ConfigError("mlp.classes must be >= 2");
  std::mt19937_64 rng(seed);
  const Matrix centers = gaussian(spec.inputs, spec.classes, rng, spec.spread);
  std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
  x_ = gaussian(spec.inputs, spec.samples, rng);
  labels_.resize(spec.samples);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    labels_[s] = pick(rng);
    for (std::size_t i = 0; i < spec.inputs; ++i) x_(i, s) += centers(i, labels_[s]);
  }
  init_.weights.push_back(
      gaussian(spec.hidden, spec.inputs, rng, 1.0 / std::sqrt(static_cast<double>(spec.inputs))));
  init_.weights.push_back(
      gaussian(spec.classes, spec.hidden, rng, 1.0 / std::sqrt(static_cast<double>(spec.hidden))));
  init_.biases.emplace_back(spec.hidden, 0.0);
  init_.biases.emplace_back(spec.classes, 0.0);
}

double TinyMlp::forward(const Params& p, Params* grad) const {
  const Matrix& w1 = p.weights.at(0);
  const Matrix& w2 = p.weights.at(1);
  const Vector& b1 = p.biases.at(0);
  const Vector& b2 = p.biases.at(1);
  const std::size_t samples = x_.cols();
  if (w1.cols() != x_.rows() || w2.cols() != w1.rows() || b1.size() != w1.rows() ||
      b2.size() != w2.rows()) {
    throw DimensionError("mlp: parameter shapes do not match");
  }

  Matrix h = kernels::matmul(w1, x_);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t i = 0; i < h.rows(); ++i) h(i, s) = std::tanh(h(i, s) + b1[i]);
  Matrix z = kernels::matmul(w2, h);

  const double inv_n = 1.0 / static_cast<double>(samples);
  double total = 0.0;
  // z becomes dL/dz = (softmax - onehot) / N in place.
  for (std::size_t s = 0; s < samples; ++s) {
    auto col = z.col(s);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < col.size(); ++k) {
      col[k] += b2[k];
      top = std::max(top, col[k]);
    }
    double sum = 0.0;
    for (double& v : col) {
      v = std::exp(v - top);
      sum += v;
    }
    total += -std::log(col[labels_[s]] / sum);
    for (double& v : col) v = v / sum * inv_n;
    col[labels_[s]] -= inv_n;
  }
  if (grad == nullptr) return total * inv_n;

  *grad = zeros_like(p);
  grad->weights[1] = kernels::matmul_nt(z, h);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t k = 0; k < z.rows(); ++k) grad->biases[1][k] += z(k, s);
  Matrix dh = kernels::matmul_tn(w2, z);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < dh.rows(); ++i) {
      dh(i, s) *= 1.0 - h(i, s) * h(i, s);
      grad->biases[0][i] += dh(i, s);
    }
  }
  grad->weights[0] = kernels::matmul_nt(dh, x_);
  return total * inv_n;
}

double TinyMlp::loss(const Params& p) const { return forward(p, nullptr); }

double TinyMlp::loss_and_grad(const Params& p, Params& grad) { return forward(p, &grad); }

GradientStream::GradientStream(const StreamSpec& spec, std::uint64_t seed)
    : noise_(spec.noise), rng_(seed) {
  require_positive(spec.m, "stream.m");
  require_positive(spec.n, "stream.n");
  if (!(spec.noise >= 0.0)) throw ConfigError("stream.noise must be >= 0");
  a_ = gaussian(spec.m, spec.m, rng_, 1.0 / std::sqrt(static_cast<double>(spec.m)));
  b_ = gaussian(spec.n, spec.n, rng_, 1.0 / std::sqrt(static_cast<double>(spec.n)));
}

Params GradientStream::initial_params() const {
  Params p;
  p.weights.emplace_back(a_.rows(), b_.cols());
  return p;
}

Matrix GradientStream::next() {
  Matrix g = kernels::matmul(kernels::matmul(a_, gaussian(a_.cols(), b_.rows(), rng_)), b_);
  if (noise_ > 0.0) g += gaussian(g.rows(), g.cols(), rng_, noise_);
  return g;
}

double GradientStream::loss(const Params&) const {
  return std::numeric_limits<double>::quiet_NaN();
}

double GradientStream::loss_and_grad(const Params& p, Params& grad) {
  grad = zeros_like(p);
  grad.weights[0] = next();
  return loss(p);
}

}  // namespace fimopt::harness
