#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "fimopt/matrix.hpp"

namespace fimopt::harness {

/// Trainable parameters. Matrices go to the chosen optimizer, vectors
/// (biases) to Adam.
struct Params {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

Params zeros_like(const Params& p);
double grad_norm(const Params& g);

class Problem {
 public:
  virtual ~Problem() = default;
  virtual std::string_view name() const = 0;
  virtual Params initial_params() const = 0;
  /// Stream problems produce gradients without a loss.
  virtual bool has_loss() const { return true; }
  virtual double loss(const Params& p) const = 0;
  /// Returns the loss at p and writes the gradient into grad.
  virtual double loss_and_grad(const Params& p, Params& grad) = 0;
};

/// Least squares ||XW - Y||^2 / (2N) with W of shape m×n. Feature scales are
/// log-spaced so that X^T X has roughly the requested condition number.
struct RegressionSpec {
  std::size_t samples = 256;
  std::size_t m = 64;
  std::size_t n = 32;
  double condition = 100.0;
  double noise = 0.0;
  /// Mix the scaled features with a random rotation so the ill-conditioning
  /// is not axis aligned.
  bool rotate = false;
};

class MatrixRegression final : public Problem {
 public:
  MatrixRegression(const RegressionSpec& spec, std::uint64_t seed);

  std::string_view name() const override { return "regression"; }
  Params initial_params() const override;
  double loss(const Params& p) const override;
  double loss_and_grad(const Params& p, Params& grad) override;

  const Matrix& x() const noexcept { return x_; }
  const Matrix& y() const noexcept { return y_; }
  /// Normal-equation minimizer.
  Matrix solve() const;

 private:
  Matrix residual(const Matrix& w) const;

  Matrix x_;
  Matrix y_;
  std::size_t n_;
};

/// One hidden tanh layer with softmax cross-entropy on Gaussian blobs.
struct MlpSpec {
  std::size_t inputs = 16;
  std::size_t hidden = 32;
  std::size_t classes = 4;
  std::size_t samples = 256;
  double spread = 2.0;
};

class TinyMlp final : public Problem {
 public:
  TinyMlp(const MlpSpec& spec, std::uint64_t seed);

  std::string_view name() const override { return "mlp"; }
  Params initial_params() const override { return init_; }
  double loss(const Params& p) const override;
  double loss_and_grad(const Params& p, Params& grad) override;

 private:
  double forward(const Params& p, Params* grad) const;

  Matrix x_;  // inputs × samples
  std::vector<std::size_t> labels_;
  Params init_;
};

/// G_t = A Z_t B + noise N_t with fixed A (m×m), B (n×n) and fresh Gaussian
/// Z_t, N_t. The gradient does not depend on the parameters.
struct StreamSpec {
  std::size_t m = 16;
  std::size_t n = 24;
  double noise = 0.1;
};

class GradientStream final : public Problem {
 public:
  GradientStream(const StreamSpec& spec, std::uint64_t seed);

  std::string_view name() const override { return "stream"; }
  Params initial_params() const override;
  bool has_loss() const override { return false; }
  double loss(const Params& p) const override;
  double loss_and_grad(const Params& p, Params& grad) override;

  Matrix next();
  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  double noise() const noexcept { return noise_; }

 private:
  Matrix a_;
  Matrix b_;
  double noise_;
  std::mt19937_64 rng_;
};

}  // namespace fimopt::harness
