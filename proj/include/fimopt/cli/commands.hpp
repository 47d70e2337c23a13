#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "fimopt/fim/certify.hpp"
#include "fimopt/harness/train.hpp"

namespace fimopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitCertification = 3;

inline constexpr const char* kCsvHeader = "step,loss,grad_norm,lr,elapsed_ms";
inline constexpr const char* kSummaryHeader =
    "optimizer,final_loss,steps_to_threshold,memory_estimate,status";

struct RunArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

struct VerifyArgs {
  std::uint64_t seed = 0;
  fim::Tier tier = fim::Tier::Small;
  /// Test hook forwarded to the certification suite.
  std::optional<std::string> perturb;
};

struct MemoryArgs {
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::size_t> r;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);
int cmd_memory(const MemoryArgs& args, std::ostream& out, std::ostream& err);

/// Writes the header and one line per row.
void write_csv(std::ostream& os, const harness::RunRecord& record);

/// Full command line front end; returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fimopt::cli
