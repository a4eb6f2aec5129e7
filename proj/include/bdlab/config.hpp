#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bdlab/model.hpp"

namespace bdlab {

enum class ExperimentKind { Theorem1, PureBirth, FluidCheck, CouplingDiag };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentConfig {
  /// K is replaced by each entry of K_list.
  ModelSpec model;
  ExperimentKind kind = ExperimentKind::Theorem1;
  std::vector<double> K_list = {100.0, 10000.0};
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::optional<double> c;
  std::optional<double> eta;
  /// theorem1: times after t1 at which the process is compared with the flow of the limit law.
  std::vector<double> offsets = {0.0, 0.5, 1.0};
  /// fluidcheck: initial density, horizon and snapshot spacing.
  double x0 = 0.2;
  double T = 5.0;
  double snapshot_dt = 0.01;
  /// purebirth: densities for the jump-time cross-check; 0.5 is always included.
  std::vector<double> jump_x = {0.25, 0.5, 0.75};
  std::size_t threads = 1;
  std::uint64_t event_budget = 100'000'000;
  std::filesystem::path out_dir = "out";

  /// Throws ConfigError: K_list nonempty and strictly ascending, N >= 100,
  /// offsets nonnegative, fluid-check grid positive.
  void validate() const;
};

ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& model);

/// Top-level model fields plus an optional "experiment" object.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace bdlab
