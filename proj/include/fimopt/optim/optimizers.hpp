#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "fimopt/matrix.hpp"
#include "fimopt/optim/operators.hpp"

// Per-parameter optimizer states. Every *_step function mutates its state and
// returns the weight update dW, to be added to W. Moments are allocated on the
// first step from the gradient shape; later shape changes throw DimensionError.
namespace fimopt::optim {

struct SgdState {
  long step = 0;
};

Matrix sgd_step(SgdState& state, const Matrix& g, double lr);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = kDefaultEps;
  bool bias_correction = true;
};

struct AdamState {
  AdamConfig config;
  Matrix m;
  Matrix v;
  long step = 0;
};

Matrix adam_step(AdamState& state, const Matrix& g, double lr);

struct RacsConfig {
  double beta = 0.9;
  double alpha = 0.05;
  double gamma = 1.01;
  int inner_iters = 5;
  /// Floor on sqrt(q_i s_j). A floor rather than an additive term keeps the
  /// scaled gradient exactly invariant to rescaling G.
  double eps = kDefaultEps;
};

struct RacsState {
  RacsConfig config;
  Vector s;
  Vector q;
  Limiter limiter;
  long step = 0;
  double last_eta = 1.0;
};

/// Scaled gradient diag(q)^-1/2 G diag(s)^-1/2 before the limiter.
Matrix racs_scaled(const Vector& s, const Vector& q, const Matrix& g, double eps);

Matrix racs_step(RacsState& state, const Matrix& g, double lr);

struct AliceCConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double beta3 = 0.999;
  long interval = 10;
  double eps = kDefaultEps;
  /// When set, the eigenbasis is pinned to this matrix and never refreshed.
  std::optional<Matrix> fixed_basis;
};

struct AliceCState {
  AliceCConfig config;
  Matrix q;
  Matrix m;
  Matrix v;
  Matrix u;
  long step = 0;
};

Matrix alicec_step(AliceCState& state, const Matrix& g, double lr);

struct SoapConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double beta3 = 0.999;
  long interval = 10;
  double eps = kDefaultEps;
  /// Pins the right basis to the identity.
  bool identity_right = false;
};

struct SoapState {
  SoapConfig config;
  Matrix l;
  Matrix r;
  Matrix m;
  Matrix v;
  Matrix ul;
  Matrix ur;
  long step = 0;
};

Matrix soap_step(SoapState& state, const Matrix& g, double lr);

enum class RootMethod { Eigen, NewtonSchulz };

struct ShampooConfig {
  double eps = 1e-6;
  RootMethod root = RootMethod::Eigen;
  int newton_schulz_steps = 40;
};

struct ShampooState {
  ShampooConfig config;
  Matrix l;
  Matrix r;
  long step = 0;
};

/// A^-1/4 for SPD A.
Matrix inverse_fourth_root(const Matrix& a, RootMethod method, int newton_schulz_steps);

Matrix shampoo_step(ShampooState& state, const Matrix& g, double lr);

struct AliceConfig {
  double alpha = 0.3;
  double alpha_c = 0.4;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double beta3 = 0.999;
  long interval = 200;
  std::size_t rank = 256;
  std::size_t leading = 40;
  double gamma = 1.01;
  double eps = kDefaultEps;
  /// Off gives Alice-0: the refresh sees only the current G G^T.
  bool tracking = true;
  bool switching = true;
  bool compensation = true;
  RefreshMethod refresh = RefreshMethod::SubspaceIteration;
  /// Rotate the tracked statistics and first moment into the new basis at
  /// each refresh.
  bool project_state_on_refresh = true;
  std::uint64_t seed = 0;
  std::uint64_t layer = 0;
};

struct AliceState {
  AliceConfig config;
  Matrix u;
  Matrix qt;
  Matrix m;
  Matrix v;
  Vector p;
  Limiter limiter;
  long step = 0;
  std::uint64_t refreshes = 0;
};

/// Throws ConfigError for inconsistent rank settings against an m-row gradient.
void validate(const AliceConfig& config, std::size_t m);

Matrix alice_step(AliceState& state, const Matrix& g, double lr);

struct GaloreConfig {
  double alpha = 0.3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = kDefaultEps;
  long interval = 200;
  std::size_t rank = 0;
  bool bias_correction = true;
};

struct GaloreState {
  GaloreConfig config;
  Matrix u;
  AdamState inner;
  long step = 0;
};

Matrix galore_step(GaloreState& state, const Matrix& g, double lr);

}  // namespace fimopt::optim
