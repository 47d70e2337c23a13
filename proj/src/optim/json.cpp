#include "fimopt/optim/json.hpp"

#include <initializer_list>
#include <string>

#include "fimopt/errors.hpp"

namespace fimopt::optim {

using nlohmann::json;

namespace {

void require_object(const json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string refresh_name(RefreshMethod r) {
  return r == RefreshMethod::DenseEigen ? "dense" : "subspace";
}

RefreshMethod refresh_from(const std::string& s) {
  if (s == "dense") return RefreshMethod::DenseEigen;
  if (s == "subspace") return RefreshMethod::SubspaceIteration;
  throw ConfigError("refresh must be 'subspace' or 'dense', got '" + s + "'");
}

std::string root_name(RootMethod r) { return r == RootMethod::Eigen ? "eigen" : "newton_schulz"; }

RootMethod root_from(const std::string& s) {
  if (s == "eigen") return RootMethod::Eigen;
  if (s == "newton_schulz") return RootMethod::NewtonSchulz;
  throw ConfigError("root must be 'eigen' or 'newton_schulz', got '" + s + "'");
}

json limiter_json(const Limiter& l) { return {{"phi", l.phi}, {"gamma", l.gamma}}; }

Limiter limiter_from(const json& j) { return {j.at("phi").get<double>(), j.at("gamma").get<double>()}; }

json adam_moments(const AdamState& s) {
  return {{"m", matrix_to_json(s.m)}, {"v", matrix_to_json(s.v)}, {"step", s.step}};
}

void read_adam_moments(const json& j, AdamState& s) {
  s.m = matrix_from_json(j.at("m"));
  s.v = matrix_from_json(j.at("v"));
  s.step = j.at("step").get<long>();
}

json state_json(const OptimizerState& state) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SgdState>) {
          return {{"step", s.step}};
        } else if constexpr (std::is_same_v<S, AdamState>) {
          return {{"config", s.config}, {"state", adam_moments(s)}};
        } else if constexpr (std::is_same_v<S, RacsState>) {
          return {{"config", s.config},
                  {"state",
                   {{"s", s.s}, {"q", s.q}, {"limiter", limiter_json(s.limiter)},
                    {"step", s.step}, {"last_eta", s.last_eta}}}};
        } else if constexpr (std::is_same_v<S, AliceState>) {
          return {{"config", s.config},
                  {"state",
                   {{"u", matrix_to_json(s.u)}, {"qt", matrix_to_json(s.qt)},
                    {"m", matrix_to_json(s.m)}, {"v", matrix_to_json(s.v)}, {"p", s.p},
                    {"limiter", limiter_json(s.limiter)}, {"step", s.step},
                    {"refreshes", s.refreshes}}}};
        } else if constexpr (std::is_same_v<S, AliceCState>) {
          return {{"config", s.config},
                  {"state",
                   {{"q", matrix_to_json(s.q)}, {"m", matrix_to_json(s.m)},
                    {"v", matrix_to_json(s.v)}, {"u", matrix_to_json(s.u)}, {"step", s.step}}}};
        } else if constexpr (std::is_same_v<S, SoapState>) {
          return {{"config", s.config},
                  {"state",
                   {{"l", matrix_to_json(s.l)}, {"r", matrix_to_json(s.r)},
                    {"m", matrix_to_json(s.m)}, {"v", matrix_to_json(s.v)},
                    {"ul", matrix_to_json(s.ul)}, {"ur", matrix_to_json(s.ur)},
                    {"step", s.step}}}};
        } else if constexpr (std::is_same_v<S, ShampooState>) {
          return {{"config", s.config},
                  {"state",
                   {{"l", matrix_to_json(s.l)}, {"r", matrix_to_json(s.r)}, {"step", s.step}}}};
        } else {
          return {{"config", s.config},
                  {"state",
                   {{"u", matrix_to_json(s.u)}, {"inner", adam_moments(s.inner)},
                    {"step", s.step}}}};
        }
      },
      state);
}

OptimizerState state_from(OptimizerKind kind, const json& j) {
  const json& st = kind == OptimizerKind::Sgd ? j : j.at("state");
  switch (kind) {
    case OptimizerKind::Sgd: return SgdState{j.at("step").get<long>()};
    case OptimizerKind::Adam: {
      auto s = with_config<AdamState>(j.at("config").get<AdamConfig>());
      read_adam_moments(st, s);
      return s;
    }
    case OptimizerKind::Racs: {
      auto s = with_config<RacsState>(j.at("config").get<RacsConfig>());
      s.s = st.at("s").get<Vector>();
      s.q = st.at("q").get<Vector>();
      s.limiter = limiter_from(st.at("limiter"));
      s.step = st.at("step").get<long>();
      s.last_eta = st.at("last_eta").get<double>();
      return s;
    }
    case OptimizerKind::Alice:
    case OptimizerKind::Alice0: {
      auto s = with_config<AliceState>(j.at("config").get<AliceConfig>());
      s.u = matrix_from_json(st.at("u"));
      s.qt = matrix_from_json(st.at("qt"));
      s.m = matrix_from_json(st.at("m"));
      s.v = matrix_from_json(st.at("v"));
      s.p = st.at("p").get<Vector>();
      s.limiter = limiter_from(st.at("limiter"));
      s.step = st.at("step").get<long>();
      s.refreshes = st.at("refreshes").get<std::uint64_t>();
      return s;
    }
    case OptimizerKind::AliceC: {
      auto s = with_config<AliceCState>(j.at("config").get<AliceCConfig>());
      s.q = matrix_from_json(st.at("q"));
      s.m = matrix_from_json(st.at("m"));
      s.v = matrix_from_json(st.at("v"));
      s.u = matrix_from_json(st.at("u"));
      s.step = st.at("step").get<long>();
      return s;
    }
    case OptimizerKind::Soap: {
      auto s = with_config<SoapState>(j.at("config").get<SoapConfig>());
      s.l = matrix_from_json(st.at("l"));
      s.r = matrix_from_json(st.at("r"));
      s.m = matrix_from_json(st.at("m"));
      s.v = matrix_from_json(st.at("v"));
      s.ul = matrix_from_json(st.at("ul"));
      s.ur = matrix_from_json(st.at("ur"));
      s.step = st.at("step").get<long>();
      return s;
    }
    case OptimizerKind::Shampoo: {
      auto s = with_config<ShampooState>(j.at("config").get<ShampooConfig>());
      s.l = matrix_from_json(st.at("l"));
      s.r = matrix_from_json(st.at("r"));
      s.step = st.at("step").get<long>();
      return s;
    }
    case OptimizerKind::Galore: {
      auto s = with_config<GaloreState>(j.at("config").get<GaloreConfig>());
      s.u = matrix_from_json(st.at("u"));
      read_adam_moments(st.at("inner"), s.inner);
      s.inner.config = AdamConfig{s.config.beta1, s.config.beta2, s.config.eps,
                                  s.config.bias_correction};
      s.step = st.at("step").get<long>();
      return s;
    }
  }
  throw ConfigError("unknown optimizer kind");
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<Vector>();
  if (rows == 0 || cols == 0) {
    if (!data.empty()) throw ConfigError("matrix: data given for an empty matrix");
    return Matrix{};
  }
  if (data.size() != rows * cols) throw ConfigError("matrix: data length does not match shape");
  return Matrix::from_col_major(rows, cols, std::move(data));
}

void to_json(json& j, const AdamConfig& c) {
  j = {{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps},
       {"bias_correction", c.bias_correction}};
}

void from_json(const json& j, AdamConfig& c) {
  require_object(j, "adam", {"beta1", "beta2", "eps", "bias_correction"});
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "eps", c.eps);
  read(j, "bias_correction", c.bias_correction);
}

void to_json(json& j, const RacsConfig& c) {
  j = {{"beta", c.beta}, {"alpha", c.alpha}, {"gamma", c.gamma},
       {"inner_iters", c.inner_iters}, {"eps", c.eps}};
}

void from_json(const json& j, RacsConfig& c) {
  require_object(j, "racs", {"beta", "alpha", "gamma", "inner_iters", "eps"});
  read(j, "beta", c.beta);
  read(j, "alpha", c.alpha);
  read(j, "gamma", c.gamma);
  read(j, "inner_iters", c.inner_iters);
  read(j, "eps", c.eps);
}

void to_json(json& j, const AliceConfig& c) {
  j = {{"alpha", c.alpha},
       {"alpha_c", c.alpha_c},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"beta3", c.beta3},
       {"interval", c.interval},
       {"rank", c.rank},
       {"leading", c.leading},
       {"gamma", c.gamma},
       {"eps", c.eps},
       {"tracking", c.tracking},
       {"switching", c.switching},
       {"compensation", c.compensation},
       {"refresh", refresh_name(c.refresh)},
       {"project_state_on_refresh", c.project_state_on_refresh},
       {"seed", c.seed},
       {"layer", c.layer}};
}

void from_json(const json& j, AliceConfig& c) {
  require_object(j, "alice",
                 {"alpha", "alpha_c", "beta1", "beta2", "beta3", "interval", "rank", "leading",
                  "gamma", "eps", "tracking", "switching", "compensation", "refresh",
                  "project_state_on_refresh", "seed", "layer"});
  read(j, "alpha", c.alpha);
  read(j, "alpha_c", c.alpha_c);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "beta3", c.beta3);
  read(j, "interval", c.interval);
  read(j, "rank", c.rank);
  read(j, "leading", c.leading);
  read(j, "gamma", c.gamma);
  read(j, "eps", c.eps);
  read(j, "tracking", c.tracking);
  read(j, "switching", c.switching);
  read(j, "compensation", c.compensation);
  std::string refresh = refresh_name(c.refresh);
  read(j, "refresh", refresh);
  c.refresh = refresh_from(refresh);
  read(j, "project_state_on_refresh", c.project_state_on_refresh);
  read(j, "seed", c.seed);
  read(j, "layer", c.layer);
}

void to_json(json& j, const AliceCConfig& c) {
  j = {{"beta1", c.beta1}, {"beta2", c.beta2}, {"beta3", c.beta3},
       {"interval", c.interval}, {"eps", c.eps}};
  if (c.fixed_basis) j["fixed_basis"] = matrix_to_json(*c.fixed_basis);
}

void from_json(const json& j, AliceCConfig& c) {
  require_object(j, "alicec", {"beta1", "beta2", "beta3", "interval", "eps", "fixed_basis"});
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "beta3", c.beta3);
  read(j, "interval", c.interval);
  read(j, "eps", c.eps);
  if (j.contains("fixed_basis")) c.fixed_basis = matrix_from_json(j.at("fixed_basis"));
}

void to_json(json& j, const SoapConfig& c) {
  j = {{"beta1", c.beta1},       {"beta2", c.beta2}, {"beta3", c.beta3},
       {"interval", c.interval}, {"eps", c.eps},     {"identity_right", c.identity_right}};
}

void from_json(const json& j, SoapConfig& c) {
  require_object(j, "soap", {"beta1", "beta2", "beta3", "interval", "eps", "identity_right"});
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "beta3", c.beta3);
  read(j, "interval", c.interval);
  read(j, "eps", c.eps);
  read(j, "identity_right", c.identity_right);
}

void to_json(json& j, const ShampooConfig& c) {
  j = {{"eps", c.eps}, {"root", root_name(c.root)},
       {"newton_schulz_steps", c.newton_schulz_steps}};
}

void from_json(const json& j, ShampooConfig& c) {
  require_object(j, "shampoo", {"eps", "root", "newton_schulz_steps"});
  read(j, "eps", c.eps);
  std::string root = root_name(c.root);
  read(j, "root", root);
  c.root = root_from(root);
  read(j, "newton_schulz_steps", c.newton_schulz_steps);
}

void to_json(json& j, const GaloreConfig& c) {
  j = {{"alpha", c.alpha},       {"beta1", c.beta1}, {"beta2", c.beta2},
       {"eps", c.eps},           {"interval", c.interval}, {"rank", c.rank},
       {"bias_correction", c.bias_correction}};
}

void from_json(const json& j, GaloreConfig& c) {
  require_object(j, "galore",
                 {"alpha", "beta1", "beta2", "eps", "interval", "rank", "bias_correction"});
  read(j, "alpha", c.alpha);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "eps", c.eps);
  read(j, "interval", c.interval);
  read(j, "rank", c.rank);
  read(j, "bias_correction", c.bias_correction);
}

void apply_hyper(const json& j, OptimizerKind kind, Hyper& h) {
  const std::string key(kind_name(kind));
  if (!j.contains(key)) return;
  const json& block = j.at(key);
  switch (kind) {
    case OptimizerKind::Sgd:
      require_object(block, "sgd", {});
      break;
    case OptimizerKind::Adam: from_json(block, h.adam); break;
    case OptimizerKind::Racs: from_json(block, h.racs); break;
    case OptimizerKind::Alice:
    case OptimizerKind::Alice0: from_json(block, h.alice); break;
    case OptimizerKind::AliceC: from_json(block, h.alicec); break;
    case OptimizerKind::Soap: from_json(block, h.soap); break;
    case OptimizerKind::Shampoo: from_json(block, h.shampoo); break;
    case OptimizerKind::Galore: from_json(block, h.galore); break;
  }
}

std::string Optimizer::save() const {
  json j = state_json(state_);
  j["format"] = kStateFormat;
  j["version"] = kStateVersion;
  j["kind"] = kind_name(kind_);
  j["transposed"] = transposed_;
  j["steps"] = steps_;
  return j.dump();
}

Optimizer Optimizer::load(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kStateFormat) {
      throw ConfigError("state snapshot: unrecognized format");
    }
    if (j.at("version").get<int>() != kStateVersion) {
      throw ConfigError("state snapshot: unsupported version " + j.at("version").dump());
    }
    const OptimizerKind kind = kind_from_name(j.at("kind").get<std::string>());
    return Optimizer(kind, state_from(kind, j), j.at("transposed").get<bool>(),
                     j.at("steps").get<long>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("state snapshot: ") + e.what());
  }
}

}  // namespace fimopt::optim
