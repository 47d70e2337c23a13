#include "fimopt/optim/optimizer.hpp"

#include <array>
#include <string>

#include "fimopt/errors.hpp"

namespace fimopt::optim {
namespace {

constexpr std::array<std::pair<OptimizerKind, std::string_view>, 9> kNames{{
    {OptimizerKind::Sgd, "sgd"},
    {OptimizerKind::Adam, "adam"},
    {OptimizerKind::Racs, "racs"},
    {OptimizerKind::Alice, "alice"},
    {OptimizerKind::Alice0, "alice0"},
    {OptimizerKind::AliceC, "alicec"},
    {OptimizerKind::Soap, "soap"},
    {OptimizerKind::Shampoo, "shampoo"},
    {OptimizerKind::Galore, "galore"},
}};

OptimizerState initial_state(OptimizerKind kind, const Hyper& h) {
  switch (kind) {
    case OptimizerKind::Sgd: return SgdState{};
    case OptimizerKind::Adam: return with_config<AdamState>(h.adam);
    case OptimizerKind::Racs: return with_config<RacsState>(h.racs);
    case OptimizerKind::Alice: return with_config<AliceState>(h.alice);
    case OptimizerKind::Alice0: {
      auto s = with_config<AliceState>(h.alice);
      s.config.tracking = false;
      return s;
    }
    case OptimizerKind::AliceC: return with_config<AliceCState>(h.alicec);
    case OptimizerKind::Soap: return with_config<SoapState>(h.soap);
    case OptimizerKind::Shampoo: return with_config<ShampooState>(h.shampoo);
    case OptimizerKind::Galore: return with_config<GaloreState>(h.galore);
  }
  throw ConfigError("unknown optimizer kind");
}

}  // namespace

std::string_view kind_name(OptimizerKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

OptimizerKind kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

const std::vector<OptimizerKind>& all_kinds() {
  static const std::vector<OptimizerKind> kinds = [] {
    std::vector<OptimizerKind> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return kinds;
}

bool needs_rank(OptimizerKind kind) {
  return kind == OptimizerKind::Alice || kind == OptimizerKind::Alice0 ||
         kind == OptimizerKind::Galore;
}

std::size_t memory_estimate(OptimizerKind kind, std::size_t m, std::size_t n,
                            std::optional<std::size_t> r) {
  if (m == 0 || n == 0) throw ConfigError("memory_estimate: shapes must be positive");
  if (needs_rank(kind) && !r) {
    throw ConfigError("memory_estimate: " + std::string(kind_name(kind)) + " requires a rank");
  }
  const std::size_t mn = m * n;
  switch (kind) {
    case OptimizerKind::Sgd: return mn;
    case OptimizerKind::Adam: return 3 * mn;
    case OptimizerKind::Shampoo: return mn + m * m + n * n;
    case OptimizerKind::AliceC: return 3 * mn + 2 * m * m;
    case OptimizerKind::Soap: return 3 * mn + 2 * m * m + 2 * n * n;
    case OptimizerKind::Galore: return mn + 2 * n * *r + m * *r;
    case OptimizerKind::Racs: return mn + m + n + 1;
    case OptimizerKind::Alice: return mn + 2 * n * *r + m * *r + n + *r * *r;
    case OptimizerKind::Alice0: return mn + 2 * n * *r + m * *r + n;
  }
  throw ConfigError("memory_estimate: unknown optimizer kind");
}

bool one_sided(OptimizerKind kind) {
  return kind == OptimizerKind::Alice || kind == OptimizerKind::Alice0 ||
         kind == OptimizerKind::AliceC || kind == OptimizerKind::Galore;
}

Optimizer::Optimizer(OptimizerKind kind, const Hyper& hyper)
    : kind_(kind), state_(initial_state(kind, hyper)) {}

Optimizer::Optimizer(OptimizerKind kind, OptimizerState state, bool transposed, long steps)
    : kind_(kind), state_(std::move(state)), transposed_(transposed), steps_(steps) {}

Matrix Optimizer::step(const Matrix& g, double lr) {
  if (steps_ == 0) transposed_ = one_sided(kind_) && g.rows() > g.cols();
  const Matrix oriented = transposed_ ? g.transposed() : g;
  Matrix dw = std::visit(
      [&](auto& s) -> Matrix {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SgdState>) return sgd_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, AdamState>) return adam_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, RacsState>) return racs_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, AliceState>) return alice_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, AliceCState>) return alicec_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, SoapState>) return soap_step(s, oriented, lr);
        else if constexpr (std::is_same_v<S, ShampooState>) return shampoo_step(s, oriented, lr);
        else return galore_step(s, oriented, lr);
      },
      state_);
  ++steps_;
  return transposed_ ? dw.transposed() : dw;
}

}  // namespace fimopt::optim
