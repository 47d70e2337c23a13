#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fimopt/harness/problem.hpp"
#include "fimopt/harness/train.hpp"
#include "fimopt/optim/optimizer.hpp"

namespace fimopt::cli {

enum class ProblemKind { Regression, Mlp, Stream };

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Regression;
  harness::RegressionSpec regression;
  harness::MlpSpec mlp;
  harness::StreamSpec stream;
  /// Data seed; the run seed when absent.
  std::optional<std::uint64_t> seed;
};

std::unique_ptr<harness::Problem> make_problem(const ProblemConfig& config, std::uint64_t run_seed);

/// Shapes of the problem's weight matrices, in parameter order.
std::vector<std::pair<std::size_t, std::size_t>> weight_shapes(const ProblemConfig& config);

struct OptimizerEntry {
  /// Row label and CSV stem; defaults to the kind name.
  std::string name;
  optim::OptimizerKind kind = optim::OptimizerKind::Adam;
  optim::Hyper hyper;
  /// Overrides schedule.lr for this entry.
  std::optional<double> lr;
};

struct RunConfig {
  ProblemConfig problem;
  OptimizerEntry optimizer;
  harness::Schedule schedule;
  std::uint64_t seed = 0;
  /// File name inside the output directory.
  std::string output = "run.csv";
  double threshold = 1e-3;
  bool record_timing = true;
};

struct CompareConfig {
  ProblemConfig problem;
  std::vector<OptimizerEntry> optimizers;
  harness::Schedule schedule;
  std::uint64_t seed = 0;
  double threshold = 1e-3;
  bool record_timing = true;
  /// Worker threads; 0 uses one per optimizer.
  unsigned workers = 0;
};

/// Parsers validate the whole document and throw ConfigError on the first
/// problem, before anything runs.
RunConfig parse_run_config(const nlohmann::json& j);
CompareConfig parse_compare_config(const nlohmann::json& j);

/// Reads and parses a JSON file; unreadable or malformed files are ConfigError.
nlohmann::json load_json_file(const std::string& path);

/// Sum of memory_estimate over the weight matrices, oriented the way the
/// optimizer runs them. Biases are not counted.
std::size_t config_memory(const ProblemConfig& problem, const OptimizerEntry& entry);

}  // namespace fimopt::cli
