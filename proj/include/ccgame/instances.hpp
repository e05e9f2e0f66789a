#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgame/game.hpp"
#include "ccgame/rng.hpp"

namespace ccgame::instances {

enum class Family { kDataset1, kDataset2, kLowerBound, kExposureGap, kEmbedding };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

// How synthetic cluster sizes are drawn. kComposition is uniform over all
// compositions (sizes spread widely); kPerUser assigns every user to a
// uniformly random cluster, redrawing while some cluster is empty, which
// concentrates near equal sizes.
enum class ClusterSampler { kComposition, kPerUser };

std::string_view to_string(ClusterSampler sampler);
ClusterSampler cluster_sampler_from_string(std::string_view name);

// Uniform composition of `total` into `parts` positive sizes: sorted
// distinct cut points from {1, ..., total-1}, then consecutive differences.
std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts,
                                            Rng& rng);

std::vector<std::size_t> random_cluster_sizes(std::size_t total, std::size_t parts,
                                              ClusterSampler sampler, Rng& rng);

// Half the users form cluster 1; the other half is split into n-1 nonempty
// clusters. Every player can target any cluster (actions s_1..s_n).
GameInstance gen_dataset1(int n, int m, double beta, int k, std::uint64_t seed,
                          ClusterSampler sampler = ClusterSampler::kComposition);

// n nonempty clusters over all m users; actions s_0 (relevance delta for
// everyone) and s_1..s_n (indicator of one cluster).
GameInstance gen_dataset2(int n, int m, double delta, double beta, int k,
                          std::uint64_t seed,
                          ClusterSampler sampler = ClusterSampler::kComposition);

// Cluster sizes behind a generated instance, read back from the indicator
// rows of the shared action set.
std::vector<std::size_t> cluster_sizes(const GameInstance& game,
                                       std::size_t first_indicator_action);

// Lower-bound family: user type 1 with weight n, types 2..n with weight
// a = 1 + beta log K, actions x_1..x_n hitting one type each. Throws
// InvalidInput naming the violated condition of
// 0 <= beta <= 1, n > 2, 1 <= K <= min(n-1, e^{1/(5 beta)}).
GameInstance gen_lower_bound_instance(int n, int k, double beta);
double lower_bound_weight(int k, double beta);

struct ExposureGapInstance {
  GameInstance game;
  double delta = 0.0;
  // False when beta is outside (0, min(0.14, 1/(5 log K))]; the instance is
  // still built but the welfare-ratio guarantee does not apply.
  bool guarantee_holds = true;
};

// Exposure-metric instance with two users. Player 1 chooses between s_1
// (relevance (1, 0)) and s_2 (relevance (delta, delta)); players 2..n only
// have s_0 (relevance (0, 0)). delta defaults to the threshold delta_0 at
// which s_2 becomes a best response; at beta = 0 it defaults to 0.5.
ExposureGapInstance gen_exposure_gap_instance(int n, int k, double beta,
                                 std::optional<double> delta = std::nullopt);
// beta * log(2K(b+K)/(b+2K) - (K-1)), b = e^{1/beta} - 1, log-domain.
double exposure_gap_delta0(double beta, int k);
// W(s_1, s_0, ...) / W(s_2, s_0, ...) at delta_0 in closed form.
double exposure_gap_ratio(double beta, int k);

struct EmbeddingOptions {
  std::filesystem::path user_file;
  std::filesystem::path item_file;
  std::optional<std::filesystem::path> item_tags_file;  // one row per item
  int n = 5;
  std::size_t actions_per_player = 500;
  double threshold = 4.0;
  double beta = 0.1;
  int k = 5;
  std::uint64_t seed = 0;
};

// CSV of real vectors, one per row. A leading integer id column is dropped
// when every row's first cell is an integer and the remaining width is
// consistent. Blank lines and a non-numeric header row are skipped.
std::vector<std::vector<double>> read_vector_csv(const std::filesystem::path& path);

// Users are the rows of user_file (weight 1). Each player samples
// actions_per_player distinct rows of the item pool; relevance is the
// indicator <s, x> >= threshold.
GameInstance load_embedding_instance(const EmbeddingOptions& options);
GameInstance build_embedding_instance(
    const std::vector<std::vector<double>>& users,
    const std::vector<std::vector<double>>& items,
    const std::vector<std::vector<std::string>>& item_tags,
    const EmbeddingOptions& options);

struct InstanceSpec {
  Family family = Family::kDataset1;
  int n = 2;
  int m = 100;
  double beta = 0.1;
  int k = 1;
  Metric metric = Metric::kEngagement;
  double delta = 0.5;                 // dataset2
  ClusterSampler cluster_sampler = ClusterSampler::kComposition;
  std::optional<double> exposure_delta;  // exposure_gap family; defaults to delta_0
  EmbeddingOptions embedding;
  std::uint64_t seed = 0;
};

struct BuiltInstance {
  GameInstance game;
  std::vector<std::string> warnings;
};

BuiltInstance build(const InstanceSpec& spec);
InstanceSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const InstanceSpec& spec);

}  // namespace ccgame::instances
