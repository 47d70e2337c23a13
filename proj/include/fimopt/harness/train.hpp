#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fimopt/harness/problem.hpp"
#include "fimopt/optim/optimizer.hpp"

namespace fimopt::harness {

/// Linear warmup from 0 over the first warmup_frac of the run, then cosine
/// decay to final_frac * base_lr at total_steps.
struct Schedule {
  double base_lr = 1e-3;
  double warmup_frac = 0.1;
  double final_frac = 0.1;
  long total_steps = 1000;
};

/// Throws ConfigError for invalid fields.
void validate(const Schedule& s);
/// step in [0, total_steps], else ConfigError.
double lr_at(const Schedule& s, long step);

struct RunRow {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double elapsed_ms = 0.0;

  bool operator==(const RunRow&) const = default;
};

/// Row t holds the loss and gradient norm at the parameters before update t
/// and the learning rate used for that update.
struct RunRecord {
  std::vector<RunRow> rows;
  bool diverged = false;
  long diverged_step = 0;
  std::string divergence_reason;
  /// Loss after the last update; NaN for stream problems or diverged runs.
  double final_loss = 0.0;
  Params params;
};

struct TrainOptions {
  double divergence_loss = 1e12;
  /// Off writes elapsed_ms = 0 so records compare bit for bit.
  bool record_timing = true;
};

/// Trains every weight matrix with its own optimizer of the given kind and
/// every bias with Adam. Deterministic for a given problem and seed.
RunRecord train(Problem& problem, optim::OptimizerKind kind, const optim::Hyper& hyper,
                const Schedule& schedule, std::uint64_t seed, const TrainOptions& options = {});

/// Fewest updates after which the loss is at most rel * initial loss.
std::optional<long> steps_to_threshold(const RunRecord& record, double rel);

}  // namespace fimopt::harness
