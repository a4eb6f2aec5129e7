#include "bdlab/config.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/core.h>

#include "bdlab/error.hpp"

namespace bdlab {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Theorem1: return "theorem1";
    case ExperimentKind::PureBirth: return "purebirth";
    case ExperimentKind::FluidCheck: return "fluidcheck";
    case ExperimentKind::CouplingDiag: return "coupling_diag";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "theorem1") return ExperimentKind::Theorem1;
  if (name == "purebirth") return ExperimentKind::PureBirth;
  if (name == "fluidcheck") return ExperimentKind::FluidCheck;
  if (name == "coupling_diag" || name == "couplingdiag") return ExperimentKind::CouplingDiag;
  throw ConfigError(fmt::format("unknown experiment kind '{}'", name));
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("field '{}': {}", key, e.what()));
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(fmt::format("missing field '{}'", key));
  return get_or<T>(j, key, T{});
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("unknown field '{}' in {}", key, where));
    }
  }
}

RegulationSpec regulation_from_json(const json& j) {
  check_keys(j, {"kind", "p", "a", "m", "c", "x", "g1", "g2", "placement"}, "regulation");
  const auto kind = require<std::string>(j, "kind");
  RegulationSpec spec;
  if (kind == "logistic") {
    spec.kind = Logistic{};
  } else if (kind == "power_law") {
    spec.kind = PowerLaw{require<double>(j, "p")};
  } else if (kind == "ricker") {
    spec.kind = Ricker{get_or(j, "a", 1.0)};
  } else if (kind == "beverton_holt") {
    spec.kind = BevertonHolt{get_or(j, "m", 1.0)};
  } else if (kind == "hassell") {
    spec.kind = Hassell{get_or(j, "m", 1.0), get_or(j, "c", 1.0)};
  } else if (kind == "maynard_smith_slatkin") {
    spec.kind = MaynardSmithSlatkin{get_or(j, "m", 1.0), get_or(j, "c", 1.0)};
  } else if (kind == "tabulated") {
    spec.kind = Tabulated{require<std::vector<double>>(j, "x"), require<std::vector<double>>(j, "g1"),
                          require<std::vector<double>>(j, "g2")};
  } else {
    throw ConfigError(fmt::format("unknown regulation kind '{}'", kind));
  }
  const auto placement = get_or<std::string>(j, "placement", "split");
  if (placement == "birth") {
    spec.birth_only = true;
  } else if (placement != "split") {
    throw ConfigError(fmt::format("regulation placement must be 'split' or 'birth', got '{}'", placement));
  }
  return spec;
}

json regulation_to_json(const RegulationSpec& spec) {
  json j = std::visit(
      [](const auto& r) -> json {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Logistic>) return {{"kind", "logistic"}};
        if constexpr (std::is_same_v<R, PowerLaw>) return {{"kind", "power_law"}, {"p", r.p}};
        if constexpr (std::is_same_v<R, Ricker>) return {{"kind", "ricker"}, {"a", r.a}};
        if constexpr (std::is_same_v<R, BevertonHolt>) return {{"kind", "beverton_holt"}, {"m", r.m}};
        if constexpr (std::is_same_v<R, Hassell>) return {{"kind", "hassell"}, {"m", r.m}, {"c", r.c}};
        if constexpr (std::is_same_v<R, MaynardSmithSlatkin>) {
          return {{"kind", "maynard_smith_slatkin"}, {"m", r.m}, {"c", r.c}};
        }
        if constexpr (std::is_same_v<R, Tabulated>) {
          return {{"kind", "tabulated"}, {"x", r.x}, {"g1", r.g1}, {"g2", r.g2}};
        }
      },
      spec.kind);
  j["placement"] = spec.birth_only ? "birth" : "split";
  return j;
}

}  // namespace

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  ModelSpec m;
  m.lambda = get_or(j, "lambda", m.lambda);
  m.mu = get_or(j, "mu", m.mu);
  m.K = get_or(j, "K", m.K);
  m.alpha = get_or(j, "alpha", m.alpha);
  if (j.contains("regulation")) m.regulation = regulation_from_json(j.at("regulation"));
  return m;
}

json model_to_json(const ModelSpec& model) {
  return {{"lambda", model.lambda},
          {"mu", model.mu},
          {"K", model.K},
          {"alpha", model.alpha},
          {"regulation", regulation_to_json(model.regulation)}};
}

void ExperimentConfig::validate() const {
  if (K_list.empty()) throw ConfigError("K_list must not be empty");
  for (std::size_t i = 0; i < K_list.size(); ++i) {
    if (!(K_list[i] >= 1.0)) throw ConfigError(fmt::format("K_list entries must be >= 1, got {}", K_list[i]));
    if (i > 0 && !(K_list[i] > K_list[i - 1])) throw ConfigError("K_list must be strictly ascending");
  }
  if (replicates < 100) throw ConfigError(fmt::format("replicates must be at least 100, got {}", replicates));
  for (double s : offsets) {
    if (!(s >= 0.0)) throw ConfigError(fmt::format("offsets must be nonnegative, got {}", s));
  }
  if (!(T > 0.0) || !(snapshot_dt > 0.0)) throw ConfigError("T and snapshot_dt must be positive");
  if (!(x0 > 0.0)) throw ConfigError(fmt::format("x0 must be positive, got {}", x0));
  for (double x : jump_x) {
    if (!(x > 0.0)) throw ConfigError(fmt::format("jump_x entries must be positive, got {}", x));
  }
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (event_budget == 0) throw ConfigError("event_budget must be positive");
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"lambda", "mu", "K", "alpha", "regulation", "experiment"}, "config");
  ExperimentConfig cfg;
  cfg.model = model_from_json(j);
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    check_keys(e,
               {"kind", "K_list", "replicates", "seed", "c", "eta", "offsets", "x0", "T", "snapshot_dt", "jump_x",
                "threads", "event_budget", "out"},
               "experiment");
    if (e.contains("kind")) cfg.kind = parse_experiment_kind(require<std::string>(e, "kind"));
    cfg.K_list = get_or(e, "K_list", cfg.K_list);
    cfg.replicates = get_or(e, "replicates", cfg.replicates);
    cfg.seed = get_or(e, "seed", cfg.seed);
    if (e.contains("c")) cfg.c = require<double>(e, "c");
    if (e.contains("eta")) cfg.eta = require<double>(e, "eta");
    cfg.offsets = get_or(e, "offsets", cfg.offsets);
    cfg.x0 = get_or(e, "x0", cfg.x0);
    cfg.T = get_or(e, "T", cfg.T);
    cfg.snapshot_dt = get_or(e, "snapshot_dt", cfg.snapshot_dt);
    cfg.jump_x = get_or(e, "jump_x", cfg.jump_x);
    cfg.threads = get_or(e, "threads", cfg.threads);
    cfg.event_budget = get_or(e, "event_budget", cfg.event_budget);
    cfg.out_dir = get_or<std::string>(e, "out", cfg.out_dir.string());
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = model_to_json(cfg.model);
  json e = {{"kind", std::string(to_string(cfg.kind))},
            {"K_list", cfg.K_list},
            {"replicates", cfg.replicates},
            {"seed", cfg.seed},
            {"offsets", cfg.offsets},
            {"x0", cfg.x0},
            {"T", cfg.T},
            {"snapshot_dt", cfg.snapshot_dt},
            {"jump_x", cfg.jump_x},
            {"threads", cfg.threads},
            {"event_budget", cfg.event_budget},
            {"out", cfg.out_dir.string()}};
  if (cfg.c) e["c"] = *cfg.c;
  if (cfg.eta) e["eta"] = *cfg.eta;
  j["experiment"] = e;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON in '{}': {}", path.string(), e.what()));
  }
  return config_from_json(j);
}

}  // namespace bdlab
