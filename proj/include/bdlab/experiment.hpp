#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bdlab/config.hpp"

namespace bdlab {

inline constexpr std::string_view kCodeVersion = "0.1.0";

/// Columns every replicates.csv starts with; unused ones are left empty.
inline constexpr std::string_view kBaseColumns[] = {"zbar_t1", "extinct", "tau_K", "W_K", "delta_t1"};

struct ReplicateRow {
  double K = 0.0;
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
  /// Aligned with ResultRecord::columns; NaN marks a missing value.
  std::vector<double> values;
};

struct ResultRecord {
  ExperimentKind kind = ExperimentKind::Theorem1;
  /// Column names after K, replicate, seed.
  std::vector<std::string> columns;
  std::vector<ReplicateRow> rows;
  /// Replicate ids dropped because the event budget ran out, one list per K.
  std::vector<std::vector<std::uint64_t>> exhausted;
  std::vector<double> wall_seconds;
  std::vector<std::string> warnings;
  /// Per-K aggregates; a pure function of (config, rows, exhausted).
  nlohmann::json per_k;
};

/// RNG stream id of replicate r at the k-th scale.
std::uint64_t stream_id(std::size_t k_index, std::uint64_t replicate);

ResultRecord run_theorem1(const ExperimentConfig& config);
ResultRecord run_purebirth(const ExperimentConfig& config);
ResultRecord run_fluidcheck(const ExperimentConfig& config);
ResultRecord run_coupling_diag(const ExperimentConfig& config);
ResultRecord run_experiment(const ExperimentConfig& config);

nlohmann::json summarize(const ExperimentConfig& config, const std::vector<std::string>& columns,
                         const std::vector<ReplicateRow>& rows,
                         const std::vector<std::vector<std::uint64_t>>& exhausted);

/// summary.json: config echo, code version, per-K aggregates, wall times, warnings.
nlohmann::json summary_document(const ExperimentConfig& config, const ResultRecord& record);

void write_replicates_csv(std::ostream& out, const ResultRecord& record);

struct ReplicateTable {
  std::vector<std::string> columns;
  std::vector<ReplicateRow> rows;
};

ReplicateTable read_replicates_csv(std::istream& in);

/// Writes replicates.csv and summary.json under `dir`, creating it if needed.
void write_outputs(const ExperimentConfig& config, const ResultRecord& record, const std::filesystem::path& dir);

/// 2 when some K lost more than 1% of its replicates to the event budget or a
/// coupling path broke domination, else 0.
int exit_status(const ResultRecord& record);

struct ReportResult {
  nlohmann::json recomputed;
  bool matches = false;
  std::string table;
};

/// Recomputes the per-K summary of a finished run directory from its rows.
ReportResult report(const std::filesystem::path& dir);

}  // namespace bdlab
