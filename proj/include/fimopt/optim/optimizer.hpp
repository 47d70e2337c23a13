#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fimopt/optim/optimizers.hpp"

namespace fimopt::optim {

enum class OptimizerKind { Sgd, Adam, Racs, Alice, Alice0, AliceC, Soap, Shampoo, Galore };

std::string_view kind_name(OptimizerKind kind);
/// Throws ConfigError for an unknown name.
OptimizerKind kind_from_name(std::string_view name);
const std::vector<OptimizerKind>& all_kinds();
bool needs_rank(OptimizerKind kind);
/// Kinds that keep a basis on one side only and run on the transpose of a
/// tall parameter.
bool one_sided(OptimizerKind kind);

/// Persistent state entries for an m×n parameter, weights included.
/// Low-rank kinds require r; a missing r throws ConfigError.
std::size_t memory_estimate(OptimizerKind kind, std::size_t m, std::size_t n,
                            std::optional<std::size_t> r = std::nullopt);

using OptimizerState = std::variant<SgdState, AdamState, RacsState, AliceState, AliceCState,
                                    SoapState, ShampooState, GaloreState>;

/// Fresh state of type S carrying the given hyperparameters.
template <typename S, typename C>
S with_config(C config) {
  S state;
  state.config = std::move(config);
  return state;
}

/// Hyperparameters for every kind; only the block matching the kind is used.
struct Hyper {
  AdamConfig adam;
  RacsConfig racs;
  AliceConfig alice;
  AliceCConfig alicec;
  SoapConfig soap;
  ShampooConfig shampoo;
  GaloreConfig galore;
};

/// One parameter's optimizer. One-sided kinds (Alice, Alice-0, Alice-C,
/// GaLore) work on the transpose when m > n so the eigendecomposed side is
/// the smaller one.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const Hyper& hyper);

  Matrix step(const Matrix& g, double lr);

  OptimizerKind kind() const noexcept { return kind_; }
  const OptimizerState& state() const noexcept { return state_; }
  OptimizerState& state() noexcept { return state_; }
  bool transposed() const noexcept { return transposed_; }
  long steps_taken() const noexcept { return steps_; }

  /// Versioned JSON dump of the full state.
  std::string save() const;
  /// Throws ConfigError on a malformed or mismatched snapshot.
  static Optimizer load(const std::string& text);

 private:
  Optimizer(OptimizerKind kind, OptimizerState state, bool transposed, long steps);

  OptimizerKind kind_;
  OptimizerState state_;
  bool transposed_ = false;
  long steps_ = 0;
};

inline constexpr std::string_view kStateFormat = "fimopt-state";
inline constexpr int kStateVersion = 1;

}  // namespace fimopt::optim
