#pragma once

// Competing content creation game under top-K recommendation with Gumbel
// random-utility user choice. Creators pick actions (content), each user is
// shown the K most relevant items and consumes the one maximizing
// relevance + Gumbel(-beta*gamma, beta) noise. All expectations below are
// exact: no sampling happens here.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccgame {

enum class Metric { kEngagement, kExposure };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct User {
  int id = 0;
  // Multiplicity of the user profile; fractional values are allowed.
  double weight = 1.0;
  std::vector<double> features;
  std::vector<std::string> tags;
};

struct Action {
  // Relevance to every user, one entry per user, each in [0, 1].
  std::vector<double> sigma;
  std::vector<std::string> tags;
};

struct ActionSet {
  int player_id = 0;
  std::vector<Action> actions;
};

// One action index per player.
using StrategyProfile = std::vector<std::size_t>;

// A piece of content in the recommendation pool: player `player` producing
// its action `action`. Profiles are item lists with one item per player;
// arbitrary item lists give the set-function view of welfare.
struct Item {
  std::size_t player = 0;
  std::size_t action = 0;
};

class GameInstance {
 public:
  GameInstance() = default;
  // Validates every invariant; throws InvalidInput on violation.
  GameInstance(std::vector<User> users, std::vector<ActionSet> players,
               double beta, int k_slate, Metric metric = Metric::kEngagement);

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_players() const { return players_.size(); }
  std::size_t num_actions(std::size_t player) const {
    return players_[player].actions.size();
  }
  double beta() const { return beta_; }
  int k_slate() const { return k_slate_; }
  Metric metric() const { return metric_; }
  double total_weight() const { return total_weight_; }

  const std::vector<User>& users() const { return users_; }
  const std::vector<ActionSet>& players() const { return players_; }

  std::span<const double> relevance(std::size_t player,
                                    std::size_t action) const {
    return players_[player].actions[action].sigma;
  }
  double sigma(std::size_t player, std::size_t action,
               std::size_t user) const {
    return players_[player].actions[action].sigma[user];
  }

  // Number of joint profiles, saturating at SIZE_MAX.
  std::size_t num_profiles() const;

  void validate_profile(const StrategyProfile& profile) const;

  GameInstance with_metric(Metric metric) const;
  GameInstance with_beta_k(double beta, int k_slate) const;

 private:
  std::vector<User> users_;
  std::vector<ActionSet> players_;
  double beta_ = 0.0;
  int k_slate_ = 1;
  Metric metric_ = Metric::kEngagement;
  double total_weight_ = 0.0;
};

// Top-K slate of one user. Slots index the evaluated item list (for a
// profile, slot == player). Items tied at the K-th score form the straddle
// group; each straddle member is shown with probability
// remaining_slots / straddle.size() under a uniform random tie order.
struct UserSlate {
  struct Entry {
    std::size_t slot = 0;
    double score = 0.0;
  };
  std::vector<Entry> certain;
  std::vector<std::size_t> straddle;
  double tie_score = 0.0;
  std::size_t remaining_slots = 0;
  // Padding items with score 0 when fewer than K items exist.
  std::size_t default_count = 0;
  // Highest score in the slate (includes padding).
  double top_score = 0.0;
  // Items (padding included) attaining top_score. Used when beta == 0.
  std::size_t top_group_size = 0;
  // log of Z * e^{-top_score/beta}, where
  // Z = sum_certain e^{s/beta} + r e^{tie/beta} + pad * e^0.
  // Only meaningful when beta > 0.
  double log_shifted_denom = 0.0;

  double log_denom(double beta) const {
    return top_score / beta + log_shifted_denom;
  }

  double inclusion_probability() const {
    return straddle.empty() ? 0.0
                            : static_cast<double>(remaining_slots) /
                                  static_cast<double>(straddle.size());
  }
};

struct SlateDecomposition {
  double beta = 0.0;
  std::size_t num_slots = 0;
  std::vector<UserSlate> users;
};

// Decomposes one user's slate from the scores of all items in the pool.
UserSlate decompose_user(std::span<const double> scores, int k_slate,
                         double beta);

SlateDecomposition decompose_slates(const GameInstance& game,
                                    std::span<const Item> items);
SlateDecomposition decompose_slates(const GameInstance& game,
                                    const StrategyProfile& profile);

// Expected utility of the consumed item: beta * log Z (max score if
// beta == 0). Independent of how the straddle is realized.
double user_utility(const UserSlate& slate, double beta);
double user_utility(const SlateDecomposition& slates, std::size_t user);

// Probability that the user consumes each slot's item. Together with
// default_choice_probability() this sums to one.
std::vector<double> choice_probabilities(const SlateDecomposition& slates,
                                         std::size_t user);
void choice_probabilities(const UserSlate& slate, double beta,
                          std::span<double> out);
double default_choice_probability(const UserSlate& slate, double beta);

struct EvaluationReport {
  std::vector<double> user_utilities;
  std::vector<double> creator_utilities;
  double welfare = 0.0;
  // choice_probs[j][slot]
  std::vector<std::vector<double>> choice_probs;
};

EvaluationReport evaluate(const GameInstance& game,
                          std::span<const Item> items);
EvaluationReport evaluate(const GameInstance& game,
                          const StrategyProfile& profile);

// Per-item creator utility under the instance's metric.
std::vector<double> creator_utilities(const GameInstance& game,
                                      std::span<const Item> items);
std::vector<double> creator_utilities(const GameInstance& game,
                                      const StrategyProfile& profile);

// W = sum_j weight_j * pi_j. Allocation-light path used by the solvers.
double welfare(const GameInstance& game, std::span<const Item> items);
double welfare(const GameInstance& game, const StrategyProfile& profile);

std::vector<Item> profile_items(const StrategyProfile& profile);

// Profile with player `removed` taken out of the pool.
std::vector<Item> items_without(const StrategyProfile& profile,
                                std::size_t removed);

}  // namespace ccgame
