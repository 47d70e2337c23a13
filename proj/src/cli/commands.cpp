#include "fimopt/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fimopt/cli/config.hpp"
#include "fimopt/errors.hpp"

namespace fimopt::cli {

namespace fs = std::filesystem;

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Commas and newlines would break the summary row.
std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void write_file(const fs::path& path, const harness::RunRecord& record) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_csv(os, record);
  if (record.diverged) os << "# diverged at step " << record.diverged_step << '\n';
  if (!os) throw std::runtime_error("write to '" + path.string() + "' failed");
}

harness::Schedule schedule_for(const harness::Schedule& base, const OptimizerEntry& entry) {
  harness::Schedule s = base;
  if (entry.lr) s.base_lr = *entry.lr;
  return s;
}

struct CompareResult {
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::optional<long> steps;
  std::size_t memory = 0;
  std::string status;
  bool ok = false;
};

}  // namespace

void write_csv(std::ostream& os, const harness::RunRecord& record) {
  os << kCsvHeader << '\n';
  for (const harness::RunRow& r : record.rows) {
    os << r.step << ',' << num(r.loss) << ',' << num(r.grad_norm) << ',' << num(r.lr) << ','
       << fixed(r.elapsed_ms, 3) << '\n';
  }
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = parse_run_config(load_json_file(args.config));
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (args.seed) c.seed = *args.seed;

  harness::RunRecord record;
  try {
    auto problem = make_problem(c.problem, c.seed);
    harness::TrainOptions options;
    options.record_timing = c.record_timing;
    record = harness::train(*problem, c.optimizer.kind, c.optimizer.hyper,
                            schedule_for(c.schedule, c.optimizer), c.seed, options);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path path = fs::path(args.out) / c.output;
  try {
    fs::create_directories(args.out);
    write_file(path, record);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (record.diverged) {
    err << c.optimizer.name << ": diverged at step " << record.diverged_step << " ("
        << record.divergence_reason << "); partial log in " << path.string() << '\n';
    return kExitDiverged;
  }
  out << c.optimizer.name << ": " << record.rows.size() << " steps, final loss "
      << num(record.final_loss);
  if (const auto k = harness::steps_to_threshold(record, c.threshold)) {
    out << ", threshold " << c.threshold << " after " << *k << " steps";
  }
  out << "\nwrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_compare(const RunArgs& args, std::ostream& out, std::ostream& err) {
  CompareConfig c;
  try {
    c = parse_compare_config(load_json_file(args.config));
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (args.seed) c.seed = *args.seed;
  try {
    fs::create_directories(args.out);
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::size_t count = c.optimizers.size();
  std::vector<CompareResult> results(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      const OptimizerEntry& e = c.optimizers[k];
      CompareResult& r = results[k];
      try {
        r.memory = config_memory(c.problem, e);
        auto problem = make_problem(c.problem, c.seed);
        harness::TrainOptions options;
        options.record_timing = c.record_timing;
        const harness::RunRecord rec =
            harness::train(*problem, e.kind, e.hyper, schedule_for(c.schedule, e), c.seed, options);
        write_file(fs::path(args.out) / (e.name + ".csv"), rec);
        r.final_loss = rec.final_loss;
        r.steps = harness::steps_to_threshold(rec, c.threshold);
        r.ok = !rec.diverged;
        r.status = rec.diverged ? "diverged at step " + std::to_string(rec.diverged_step) : "ok";
      } catch (const std::exception& ex) {
        r.status = std::string("error: ") + ex.what();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(c.workers == 0 ? count : c.workers, count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  const fs::path summary = fs::path(args.out) / "summary.csv";
  {
    std::ofstream os(summary);
    if (!os) {
      err << "output error: cannot write '" << summary.string() << "'\n";
      return kExitConfig;
    }
    os << kSummaryHeader << '\n';
    for (std::size_t k = 0; k < count; ++k) {
      const CompareResult& r = results[k];
      os << c.optimizers[k].name << ',' << num(r.final_loss) << ','
         << (r.steps ? std::to_string(*r.steps) : std::string()) << ',' << r.memory << ','
         << csv_safe(r.status) << '\n';
    }
  }

  std::size_t ok = 0;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %14s %10s %12s  %s\n", "optimizer", "final_loss",
                "steps", "memory", "status");
  out << line;
  for (std::size_t k = 0; k < count; ++k) {
    const CompareResult& r = results[k];
    ok += r.ok ? 1 : 0;
    std::snprintf(line, sizeof line, "%-20s %14s %10s %12zu  %s\n", c.optimizers[k].name.c_str(),
                  sci(r.final_loss).c_str(), r.steps ? std::to_string(*r.steps).c_str() : "-",
                  r.memory, r.status.c_str());
    out << line;
  }
  out << "wrote " << summary.string() << '\n';
  if (ok == 0) {
    err << "every optimizer failed\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  fim::CertifyOptions options;
  options.seed = args.seed;
  options.tier = args.tier;
  options.perturb = args.perturb;
  std::vector<fim::CertificationRow> rows;
  try {
    rows = fim::run_certification(options);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-6s %6s %12s %12s %10s\n", "check", "result", "cases",
                "worst_gap", "param_gap", "ms");
  out << line;
  std::vector<std::string> failed;
  double total_ms = 0.0;
  for (const fim::CertificationRow& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %-6s %6d %12s %12s %10.1f\n", r.name.c_str(),
                  r.passed ? "pass" : "FAIL", r.cases, sci(r.worst_gap).c_str(),
                  sci(r.worst_param_gap).c_str(), r.elapsed_ms);
    out << line;
    if (!r.passed) {
      failed.push_back(r.name);
      if (!r.detail.empty()) out << "  " << r.detail << '\n';
    }
    total_ms += r.elapsed_ms;
  }
  out << "tier " << (args.tier == fim::Tier::Small ? "small" : "medium") << ", seed " << args.seed
      << ", " << fixed(total_ms / 1000.0, 2) << " s\n";
  if (!failed.empty()) {
    err << "certification failed:";
    for (const std::string& f : failed) err << ' ' << f;
    err << '\n';
    return kExitCertification;
  }
  return kExitOk;
}

int cmd_memory(const MemoryArgs& args, std::ostream& out, std::ostream& err) {
  if (args.m == 0 || args.n == 0) {
    err << "config error: m and n must be positive\n";
    return kExitConfig;
  }
  if (args.r && *args.r == 0) {
    err << "config error: r must be positive\n";
    return kExitConfig;
  }
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %s\n", "optimizer", "memory_estimate");
  out << line;
  for (optim::OptimizerKind kind : optim::all_kinds()) {
    const std::string name(optim::kind_name(kind));
    std::string value;
    if (optim::needs_rank(kind) && !args.r) {
      value = "requires r";
    } else {
      value = std::to_string(optim::memory_estimate(kind, args.m, args.n, args.r));
    }
    std::snprintf(line, sizeof line, "%-10s %s\n", name.c_str(), value.c_str());
    out << line;
  }
  return kExitOk;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured preconditioner optimizers: training runs, comparisons, "
               "closed-form certification and memory estimates."};
  app.name("fimopt");
  app.require_subcommand(1);

  RunArgs run_args;
  RunArgs compare_args;
  VerifyArgs verify_args;
  MemoryArgs memory_args;
  std::uint64_t run_seed = 0;
  std::uint64_t compare_seed = 0;
  std::string tier = "small";
  std::string perturb;
  std::size_t rank = 0;

  auto* run = app.add_subcommand("run", "Train one optimizer and write its CSV log");
  run->add_option("--config", run_args.config, "Run config (JSON)")->required();
  run->add_option("--out", run_args.out, "Output directory")->capture_default_str();
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Overrides the config seed");

  auto* compare = app.add_subcommand("compare", "Train several optimizers and write a summary");
  compare->add_option("--config", compare_args.config, "Compare config (JSON)")->required();
  compare->add_option("--out", compare_args.out, "Output directory")->capture_default_str();
  auto* compare_seed_opt = compare->add_option("--seed", compare_seed, "Overrides the config seed");

  auto* verify = app.add_subcommand("verify", "Certify closed-form fits against the dense oracle");
  verify->add_option("--seed", verify_args.seed, "Seed")->capture_default_str();
  verify->add_option("--tier", tier, "Size tier")
      ->check(CLI::IsMember({"small", "medium"}))
      ->capture_default_str();
  auto* perturb_opt = verify->add_option("--inject-fault", perturb, "Test hook")->group("");

  auto* memory = app.add_subcommand("memory", "Print state-size estimates for every optimizer");
  memory->add_option("--m", memory_args.m, "Rows")->required();
  memory->add_option("--n", memory_args.n, "Columns")->required();
  auto* rank_opt = memory->add_option("--r", rank, "Rank for low-rank optimizers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      if (run_seed_opt->count() > 0) run_args.seed = run_seed;
      return cmd_run(run_args, out, err);
    }
    if (compare->parsed()) {
      if (compare_seed_opt->count() > 0) compare_args.seed = compare_seed;
      return cmd_compare(compare_args, out, err);
    }
    if (verify->parsed()) {
      verify_args.tier = tier == "medium" ? fim::Tier::Medium : fim::Tier::Small;
      if (perturb_opt->count() > 0) verify_args.perturb = perturb;
      return cmd_verify(verify_args, out, err);
    }
    if (rank_opt->count() > 0) memory_args.r = rank;
    return cmd_memory(memory_args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace fimopt::cli
