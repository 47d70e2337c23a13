#include "fimopt/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "fimopt/errors.hpp"
#include "fimopt/optim/json.hpp"

namespace fimopt::cli {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError(what + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(what + "." + key + ": bad value " + it->dump());
  }
}

// Sizes arrive as JSON numbers; negative or fractional values are rejected
// rather than wrapped.
void read_size(const json& j, const char* key, std::size_t& out, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned()) {
    throw ConfigError(what + "." + key + ": expected a non-negative integer, got " + it->dump());
  }
  out = it->get<std::size_t>();
}

void read_seed(const json& j, const char* key, std::uint64_t& out, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned()) {
    throw ConfigError(what + "." + key + ": expected a non-negative integer, got " + it->dump());
  }
  out = it->get<std::uint64_t>();
}

bool plain_file_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

ProblemConfig parse_problem(const json& j) {
  ProblemConfig p;
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("problem: missing 'kind'");
  std::string kind;
  read(j, "kind", kind, "problem");
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read_seed(j, "seed", s, "problem");
    p.seed = s;
  }
  if (kind == "regression") {
    p.kind = ProblemKind::Regression;
    require_keys(j, "problem", {"kind", "seed", "samples", "m", "n", "condition", "noise", "rotate"});
    read_size(j, "samples", p.regression.samples, "problem");
    read_size(j, "m", p.regression.m, "problem");
    read_size(j, "n", p.regression.n, "problem");
    read(j, "condition", p.regression.condition, "problem");
    read(j, "noise", p.regression.noise, "problem");
    read(j, "rotate", p.regression.rotate, "problem");
  } else if (kind == "mlp") {
    p.kind = ProblemKind::Mlp;
    require_keys(j, "problem", {"kind", "seed", "inputs", "hidden", "classes", "samples", "spread"});
    read_size(j, "inputs", p.mlp.inputs, "problem");
    read_size(j, "hidden", p.mlp.hidden, "problem");
    read_size(j, "classes", p.mlp.classes, "problem");
    read_size(j, "samples", p.mlp.samples, "problem");
    read(j, "spread", p.mlp.spread, "problem");
  } else if (kind == "stream") {
    p.kind = ProblemKind::Stream;
    require_keys(j, "problem", {"kind", "seed", "m", "n", "noise"});
    read_size(j, "m", p.stream.m, "problem");
    read_size(j, "n", p.stream.n, "problem");
    read(j, "noise", p.stream.noise, "problem");
  } else {
    throw ConfigError("problem.kind must be regression, mlp or stream, got '" + kind + "'");
  }
  // Constructing once surfaces spec errors now instead of mid-run.
  make_problem(p, 0);
  return p;
}

harness::Schedule parse_schedule(const json& j) {
  harness::Schedule s;
  require_keys(j, "schedule", {"lr", "steps", "warmup_frac", "final_frac"});
  read(j, "lr", s.base_lr, "schedule");
  if (j.contains("steps") && !j.at("steps").is_number_integer()) {
    throw ConfigError("schedule.steps: expected an integer, got " + j.at("steps").dump());
  }
  read(j, "steps", s.total_steps, "schedule");
  read(j, "warmup_frac", s.warmup_frac, "schedule");
  read(j, "final_frac", s.final_frac, "schedule");
  harness::validate(s);
  return s;
}

OptimizerEntry parse_entry(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(what + ": missing 'kind'");
  OptimizerEntry e;
  std::string kind;
  read(j, "kind", kind, what);
  e.kind = optim::kind_from_name(kind);
  e.name = std::string(optim::kind_name(e.kind));
  read(j, "name", e.name, what);
  if (!plain_file_name(e.name)) {
    throw ConfigError(what + ".name must use letters, digits, '_', '-' or '.', got '" + e.name + "'");
  }
  if (j.contains("lr")) {
    double lr = 0.0;
    read(j, "lr", lr, what);
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError(what + ".lr must be positive");
    e.lr = lr;
  }
  const std::string own(optim::kind_name(e.kind));
  for (const auto& [key, value] : j.items()) {
    if (key == "kind" || key == "name" || key == "lr" || key == own || key == "adam") continue;
    throw ConfigError(what + ": key '" + key + "' does not apply to " + own);
  }
  // Biases always use Adam, so its block is read for every kind.
  optim::apply_hyper(j, optim::OptimizerKind::Adam, e.hyper);
  if (e.kind != optim::OptimizerKind::Adam) optim::apply_hyper(j, e.kind, e.hyper);
  return e;
}

void check_entry_fits(const ProblemConfig& problem, const OptimizerEntry& e) {
  // Rank checks happen here so a bad rank is a config error, not a failed run.
  config_memory(problem, e);
  if (e.kind == optim::OptimizerKind::Alice || e.kind == optim::OptimizerKind::Alice0) {
    for (auto [m, n] : weight_shapes(problem)) optim::validate(e.hyper.alice, std::min(m, n));
  }
}

void parse_common(const json& j, ProblemConfig& problem, harness::Schedule& schedule,
                  std::uint64_t& seed, double& threshold, bool& record_timing) {
  if (!j.contains("problem")) throw ConfigError("config: missing 'problem'");
  if (!j.contains("schedule")) throw ConfigError("config: missing 'schedule'");
  read_seed(j, "seed", seed, "config");
  problem = parse_problem(j.at("problem"));
  schedule = parse_schedule(j.at("schedule"));
  read(j, "threshold", threshold, "config");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("config.threshold must be in (0, 1)");
  read(j, "record_timing", record_timing, "config");
}

}  // namespace

std::unique_ptr<harness::Problem> make_problem(const ProblemConfig& config, std::uint64_t run_seed) {
  const std::uint64_t seed = config.seed.value_or(run_seed);
  switch (config.kind) {
    case ProblemKind::Regression:
      return std::make_unique<harness::MatrixRegression>(config.regression, seed);
    case ProblemKind::Mlp: return std::make_unique<harness::TinyMlp>(config.mlp, seed);
    case ProblemKind::Stream: return std::make_unique<harness::GradientStream>(config.stream, seed);
  }
  throw ConfigError("unknown problem kind");
}

std::vector<std::pair<std::size_t, std::size_t>> weight_shapes(const ProblemConfig& config) {
  switch (config.kind) {
    case ProblemKind::Regression: return {{config.regression.m, config.regression.n}};
    case ProblemKind::Mlp:
      return {{config.mlp.hidden, config.mlp.inputs}, {config.mlp.classes, config.mlp.hidden}};
    case ProblemKind::Stream: return {{config.stream.m, config.stream.n}};
  }
  return {};
}

std::size_t config_memory(const ProblemConfig& problem, const OptimizerEntry& entry) {
  std::optional<std::size_t> rank;
  if (entry.kind == optim::OptimizerKind::Alice || entry.kind == optim::OptimizerKind::Alice0) {
    rank = entry.hyper.alice.rank;
  } else if (entry.kind == optim::OptimizerKind::Galore) {
    if (entry.hyper.galore.rank == 0) throw ConfigError("galore: rank must be set");
    rank = entry.hyper.galore.rank;
  }
  std::size_t total = 0;
  for (auto [m, n] : weight_shapes(problem)) {
    if (optim::one_sided(entry.kind) && m > n) std::swap(m, n);
    if (rank && *rank > m) {
      throw ConfigError(std::string(optim::kind_name(entry.kind)) + ": rank " +
                        std::to_string(*rank) + " exceeds the smaller side " + std::to_string(m));
    }
    total += optim::memory_estimate(entry.kind, m, n, rank);
  }
  return total;
}

RunConfig parse_run_config(const json& j) {
  require_keys(j, "config",
               {"problem", "optimizer", "schedule", "seed", "output", "threshold", "record_timing"});
  RunConfig c;
  parse_common(j, c.problem, c.schedule, c.seed, c.threshold, c.record_timing);
  if (!j.contains("optimizer")) throw ConfigError("config: missing 'optimizer'");
  c.optimizer = parse_entry(j.at("optimizer"), "optimizer");
  check_entry_fits(c.problem, c.optimizer);
  read(j, "output", c.output, "config");
  if (!plain_file_name(c.output)) {
    throw ConfigError("config.output must be a plain file name, got '" + c.output + "'");
  }
  return c;
}

CompareConfig parse_compare_config(const json& j) {
  require_keys(j, "config",
               {"problem", "optimizers", "schedule", "seed", "threshold", "record_timing", "workers"});
  CompareConfig c;
  parse_common(j, c.problem, c.schedule, c.seed, c.threshold, c.record_timing);
  read(j, "workers", c.workers, "config");
  const auto it = j.find("optimizers");
  if (it == j.end() || !it->is_array()) throw ConfigError("config: 'optimizers' must be a list");
  std::set<std::string> names;
  for (std::size_t k = 0; k < it->size(); ++k) {
    OptimizerEntry e = parse_entry((*it)[k], "optimizers[" + std::to_string(k) + "]");
    check_entry_fits(c.problem, e);
    if (e.name == "summary") throw ConfigError("optimizer name 'summary' is reserved");
    if (!names.insert(e.name).second) {
      throw ConfigError("duplicate optimizer name '" + e.name + "'; set distinct 'name' fields");
    }
    c.optimizers.push_back(std::move(e));
  }
  if (c.optimizers.size() < 2) throw ConfigError("compare needs at least 2 optimizers");
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return json::parse(text.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace fimopt::cli
