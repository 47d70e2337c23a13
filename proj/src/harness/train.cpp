#include "fimopt/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fimopt/errors.hpp"

namespace fimopt::harness {

void validate(const Schedule& s) {
  if (!(s.base_lr > 0.0) || !std::isfinite(s.base_lr)) {
    throw ConfigError("schedule.base_lr must be positive");
  }
  if (!(s.warmup_frac >= 0.0 && s.warmup_frac < 1.0)) {
    throw ConfigError("schedule.warmup_frac must be in [0, 1)");
  }
  if (!(s.final_frac > 0.0 && s.final_frac <= 1.0)) {
    throw ConfigError("schedule.final_frac must be in (0, 1]");
  }
  if (s.total_steps < 1) throw ConfigError("schedule.total_steps must be >= 1");
}

double lr_at(const Schedule& s, long step) {
  validate(s);
  if (step < 0 || step > s.total_steps) {
    throw ConfigError("lr_at: step " + std::to_string(step) + " outside [0, " +
                      std::to_string(s.total_steps) + "]");
  }
  const double total = static_cast<double>(s.total_steps);
  const double warm = s.warmup_frac * total;
  const double t = static_cast<double>(step);
  if (t < warm) return s.base_lr * t / warm;
  const double span = total - warm;
  const double progress = span > 0.0 ? (t - warm) / span : 1.0;
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return s.base_lr * (s.final_frac + (1.0 - s.final_frac) * cosine);
}

RunRecord train(Problem& problem, optim::OptimizerKind kind, const optim::Hyper& hyper,
                const Schedule& schedule, std::uint64_t seed, const TrainOptions& options) {
  validate(schedule);
  RunRecord record;
  Params params = problem.initial_params();

  std::vector<optim::Optimizer> weight_opts;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    optim::Hyper h = hyper;
    h.alice.seed = seed;
    h.alice.layer = k;
    weight_opts.emplace_back(kind, h);
  }
  std::vector<optim::AdamState> bias_opts(params.biases.size());
  for (auto& b : bias_opts) b.config = hyper.adam;

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  Params grad;
  for (long t = 1; t <= schedule.total_steps; ++t) {
    RunRow row;
    row.step = t;
    row.lr = lr_at(schedule, t);
    row.loss = problem.loss_and_grad(params, grad);
    row.grad_norm = grad_norm(grad);

    std::string reason;
    if (problem.has_loss() && !std::isfinite(row.loss)) reason = "non-finite loss";
    else if (problem.has_loss() && row.loss > options.divergence_loss) reason = "loss above limit";
    else if (!std::isfinite(row.grad_norm)) reason = "non-finite gradient";

    if (reason.empty()) {
      try {
        for (std::size_t k = 0; k < params.weights.size(); ++k) {
          params.weights[k] += weight_opts[k].step(grad.weights[k], row.lr);
        }
        for (std::size_t k = 0; k < params.biases.size(); ++k) {
          const Matrix g = Matrix::from_col_major(grad.biases[k].size(), 1, grad.biases[k]);
          const Matrix d = optim::adam_step(bias_opts[k], g, row.lr);
          for (std::size_t i = 0; i < d.rows(); ++i) params.biases[k][i] += d(i, 0);
        }
      } catch (const NumericError& e) {
        reason = e.what();
      }
    }
    if (options.record_timing) {
      row.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
    record.rows.push_back(row);
    if (!reason.empty()) {
      record.diverged = true;
      record.diverged_step = t;
      record.divergence_reason = reason;
      record.final_loss = std::numeric_limits<double>::quiet_NaN();
      record.params = std::move(params);
      return record;
    }
  }
  record.final_loss = problem.loss(params);
  if (problem.has_loss() && !std::isfinite(record.final_loss)) {
    record.diverged = true;
    record.diverged_step = schedule.total_steps;
    record.divergence_reason = "non-finite loss after the last update";
  }
  record.params = std::move(params);
  return record;
}

std::optional<long> steps_to_threshold(const RunRecord& record, double rel) {
  if (record.rows.empty()) return std::nullopt;
  const double target = rel * record.rows.front().loss;
  for (const RunRow& row : record.rows) {
    if (row.loss <= target) return row.step - 1;
  }
  if (!record.diverged && record.final_loss <= target) return record.rows.back().step;
  return std::nullopt;
}

}  // namespace fimopt::harness
