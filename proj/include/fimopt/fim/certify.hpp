#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fimopt::fim {

enum class Tier { Small, Medium };

/// Largest m·n a tier draws (small 36, medium 64).
std::size_t tier_limit(Tier tier);

struct CertifyOptions {
  std::uint64_t seed = 0;
  Tier tier = Tier::Small;
  int cases = 20;
  std::size_t samples = 50;
  /// Test hook: shifts the named check's closed form by 1e-3 before comparing.
  std::optional<std::string> perturb;
};

struct CertificationRow {
  std::string name;
  bool passed = true;
  int cases = 0;
  /// Worst analytic-minus-oracle loss (oracle checks) or worst residual.
  double worst_gap = 0.0;
  /// Worst parameter disagreement, where applicable.
  double worst_param_gap = 0.0;
  double elapsed_ms = 0.0;
  std::string detail;
};

/// Tolerances every certification is judged against.
inline constexpr double kLossTolerance = 1e-6;
inline constexpr double kParamTolerance = 1e-6;
inline constexpr double kApplyTolerance = 1e-8;
inline constexpr double kFixedPointCosineGap = 1e-8;

/// Names of all checks, in run order.
std::vector<std::string> certification_names();

/// Runs every closed-form-versus-oracle certification, the two-sided fixed
/// point check and the factored-apply identities.
std::vector<CertificationRow> run_certification(const CertifyOptions& options);

}  // namespace fimopt::fim
