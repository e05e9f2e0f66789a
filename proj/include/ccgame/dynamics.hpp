#pragma once

// Repeated play where every creator runs Exp3 on its own bandit feedback.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgame/game.hpp"

namespace ccgame {

struct Exp3Config {
  double eta = 0.1;
  double epsilon = 0.1;
  std::size_t horizon = 5000;
  std::uint64_t seed = 0;
  // Rewards are divided by this before the update. 0 picks
  // default_reward_scale(game).
  double reward_scale = 0.0;
};

// Upper bound on any creator utility: total_weight * (1 + beta log K) for
// engagement with beta > 0, total_weight otherwise.
double default_reward_scale(const GameInstance& game);

// p_j = (1 - epsilon) softmax(y)_j + epsilon / k, softmax max-shifted.
std::vector<double> exp3_mixing(std::span<const double> scores, double epsilon);

struct Exp3Step {
  std::vector<double> scores;
  std::vector<double> mixing;  // from the updated scores
};

// Adds eta * (utility / reward_scale) / p_arm to the played arm's score,
// where p is the mixing of the current scores.
Exp3Step exp3_step(std::span<const double> scores, double eta, double epsilon,
                   std::size_t arm, double utility, double reward_scale);

struct DynamicsOptions {
  // Extra profiles sampled per round from the same mixings to average the
  // per-round expected welfare; 1 uses only the realized profile.
  std::size_t replications = 1;
  // Record every player's mixing every this many rounds; 0 disables.
  std::size_t snapshot_interval = 1;
};

struct DynamicsTrace {
  std::size_t rounds = 0;
  std::size_t num_players = 0;
  std::vector<std::size_t> actions;   // [t * n + i]
  std::vector<double> utilities;      // [t * n + i]
  std::vector<double> welfare;        // W(s^t)
  std::vector<double> expected_welfare;
  std::size_t snapshot_interval = 0;
  std::vector<std::size_t> snapshot_rounds;
  std::vector<std::vector<std::vector<double>>> mixing;  // [snapshot][i][a]
  std::vector<std::vector<double>> final_mixing;

  StrategyProfile profile(std::size_t t) const;
  double utility(std::size_t t, std::size_t player) const {
    return utilities[t * num_players + player];
  }
  double average_welfare() const;
};

// One config per player; all horizons must match.
DynamicsTrace run_dynamics(const GameInstance& game,
                           std::span<const Exp3Config> configs,
                           const DynamicsOptions& options = {});
// Shared parameters; player i is seeded with derive_seed(config.seed, i).
DynamicsTrace run_dynamics(const GameInstance& game, const Exp3Config& config,
                           const DynamicsOptions& options = {});

// max_a sum_t u_i(a, s^t_-i) - sum_t u_i(s^t) against the realized
// opponent profiles.
double estimate_regret(const DynamicsTrace& trace, const GameInstance& game,
                       std::size_t player);
std::vector<double> estimate_regrets(const DynamicsTrace& trace,
                                     const GameInstance& game);

// max_welfare / mean per-round welfare.
double pota(const DynamicsTrace& trace, double max_welfare);

enum class HistogramKey { kAction, kTag };

// Normalized frequency over all rounds and players. With kTag an action
// counts once for each of its tags; untagged actions count as "untagged".
std::map<std::string, double> action_histogram(const DynamicsTrace& trace,
                                               const GameInstance& game,
                                               HistogramKey key);

// Columns: round,player,action,utility,welfare
std::string trace_csv(const DynamicsTrace& trace);

struct DynamicsSummary {
  double average_welfare = 0.0;
  std::optional<double> max_welfare;
  std::optional<double> pota;
  std::vector<double> regrets;
  std::map<std::string, double> histogram;
};

nlohmann::json to_json(const DynamicsSummary& summary, const DynamicsTrace& trace);

}  // namespace ccgame
