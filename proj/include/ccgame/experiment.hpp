#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgame/dynamics.hpp"
#include "ccgame/game.hpp"
#include "ccgame/instances.hpp"
#include "ccgame/verification.hpp"

namespace ccgame {

enum class ExperimentKind {
  kPoaTable,
  kPotaTable,
  kMetricComparison,
  kExplorationSweep,
  kHistogram,
  kBoundsTable,
  kVerify,
};

enum class Aggregation { kWorst, kMean, kMeanWithRange };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(Aggregation aggregation);

struct Grid {
  std::vector<int> n{2};
  std::vector<int> k{1};
  std::vector<double> beta{0.1};
  std::vector<double> delta{0.5};
  std::vector<double> epsilon{0.1};
  std::vector<Metric> metric{Metric::kEngagement};
};

struct PivotSpec {
  std::string rows;     // axis name: n, k, beta, delta, epsilon, metric, quantity
  std::string columns;  // axis name, or empty for a single value column
  std::string quantity;
};

struct ExperimentConfig {
  std::string id = "experiment";
  ExperimentKind kind = ExperimentKind::kPoaTable;
  instances::Family family = instances::Family::kDataset1;
  int m = 100;
  instances::ClusterSampler cluster_sampler = instances::ClusterSampler::kComposition;
  Grid grid;
  std::size_t trials = 10;
  Aggregation aggregation = Aggregation::kWorst;
  std::uint64_t seed = 0;
  // Cells with K > n are skipped (the tables leave them blank).
  bool skip_k_above_n = true;
  Exp3Config exp3;
  std::size_t replications = 1;
  bool estimate_regret = true;
  std::size_t exact_budget = 10'000'000;
  std::size_t lp_budget = 100'000;
  instances::EmbeddingOptions embedding;
  VerificationOptions verification;  // kind == verify
  unsigned workers = 1;
  std::filesystem::path output_dir = "results";
  std::optional<PivotSpec> pivot;
};

// Throws InvalidInput on malformed or empty grids.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ResultRow {
  std::string experiment_id;
  std::string family;
  std::size_t cell = 0;
  int n = 0;
  int k = 0;
  double beta = 0.0;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::string metric;    // creator utility metric
  std::string quantity;  // what `value` measures
  double value = 0.0;
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  std::string methods;
  std::string error;
};

struct CellSummary {
  ResultRow key;  // value = aggregated value, trial/seed unused
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::size_t errors = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // ordered by (cell, trial, quantity)
  std::vector<CellSummary> summary;
  // name -> CSV text
  std::vector<std::pair<std::string, std::string>> tables;
  std::size_t failed_checks = 0;  // verify only
};

// Runs every (cell, trial) task and aggregates. Deterministic for a fixed
// config regardless of `workers`.
ExperimentResult run_experiment(const ExperimentConfig& config);

// rows.csv, summary.csv, one CSV per table and summary.json under
// config.output_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

std::vector<CellSummary> aggregate(const std::vector<ResultRow>& rows,
                                   Aggregation aggregation);

// Pivots summaries into a matrix with 2-decimal values; "-" marks empty
// cells. Throws InvalidInput if two summaries land in the same cell with
// different values.
std::string emit_table(const std::vector<CellSummary>& summary, const PivotSpec& pivot);

std::string rows_csv(const std::vector<ResultRow>& rows);
std::string summary_csv(const std::vector<CellSummary>& summary,
                        Aggregation aggregation);

PivotSpec default_pivot(ExperimentKind kind);

}  // namespace ccgame
