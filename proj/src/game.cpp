#include "ccgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "ccgame/error.hpp"

namespace ccgame {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kEngagement:
      return "engagement";
    case Metric::kExposure:
      return "exposure";
  }
  return "engagement";
}

Metric metric_from_string(std::string_view name) {
  if (name == "engagement") return Metric::kEngagement;
  if (name == "exposure") return Metric::kExposure;
  throw InvalidInput("unknown metric '" + std::string(name) +
                     "' (expected engagement or exposure)");
}

GameInstance::GameInstance(std::vector<User> users,
                           std::vector<ActionSet> players, double beta,
                           int k_slate, Metric metric)
    : users_(std::move(users)),
      players_(std::move(players)),
      beta_(beta),
      k_slate_(k_slate),
      metric_(metric) {
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) {
    throw InvalidInput("beta must be a finite nonnegative number");
  }
  if (k_slate_ < 1) throw InvalidInput("k_slate must be at least 1");
  if (users_.empty()) throw InvalidInput("instance has no users");
  if (players_.empty()) throw InvalidInput("instance has no players");

  const std::size_t m = users_.size();
  std::size_t feature_dim = 0;
  bool have_features = false;
  total_weight_ = 0.0;
  for (const User& u : users_) {
    if (!(u.weight > 0.0) || !std::isfinite(u.weight)) {
      throw InvalidInput("user " + std::to_string(u.id) +
                         " has nonpositive weight");
    }
    if (!u.features.empty()) {
      if (have_features && u.features.size() != feature_dim) {
        throw InvalidInput("user feature dimensions are inconsistent");
      }
      feature_dim = u.features.size();
      have_features = true;
    }
    total_weight_ += u.weight;
  }
  for (std::size_t i = 0; i < players_.size(); ++i) {
    const ActionSet& set = players_[i];
    if (set.actions.empty()) {
      throw InvalidInput("player " + std::to_string(i) + " has no actions");
    }
    for (std::size_t a = 0; a < set.actions.size(); ++a) {
      const auto& row = set.actions[a].sigma;
      if (row.size() != m) {
        throw InvalidInput("player " + std::to_string(i) + " action " +
                           std::to_string(a) + " has " +
                           std::to_string(row.size()) +
                           " relevance scores, expected " + std::to_string(m));
      }
      for (double s : row) {
        if (!(s >= 0.0 && s <= 1.0)) {
          throw InvalidInput("relevance score outside [0, 1] for player " +
                             std::to_string(i) + " action " +
                             std::to_string(a));
        }
      }
    }
  }
}

std::size_t GameInstance::num_profiles() const {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 1;
  for (const ActionSet& set : players_) {
    const std::size_t k = set.actions.size();
    if (total > kMax / k) return kMax;
    total *= k;
  }
  return total;
}

void GameInstance::validate_profile(const StrategyProfile& profile) const {
  if (profile.size() != players_.size()) {
    throw InvalidInput("profile has " + std::to_string(profile.size()) +
                       " entries for " + std::to_string(players_.size()) +
                       " players");
  }
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] >= players_[i].actions.size()) {
      throw InvalidInput("action " + std::to_string(profile[i]) +
                         " out of range for player " + std::to_string(i));
    }
  }
}

GameInstance GameInstance::with_metric(Metric metric) const {
  GameInstance copy = *this;
  copy.metric_ = metric;
  return copy;
}

GameInstance GameInstance::with_beta_k(double beta, int k_slate) const {
  return GameInstance(users_, players_, beta, k_slate, metric_);
}

namespace {

void check_items(const GameInstance& game, std::span<const Item> items) {
  for (const Item& it : items) {
    if (it.player >= game.num_players() ||
        it.action >= game.num_actions(it.player)) {
      throw InvalidInput("item references a nonexistent player or action");
    }
  }
}

std::vector<const double*> item_rows(const GameInstance& game,
                                     std::span<const Item> items) {
  std::vector<const double*> rows;
  rows.reserve(items.size());
  for (const Item& it : items) {
    rows.push_back(game.relevance(it.player, it.action).data());
  }
  return rows;
}

// Expected max utility of one user given all scores in the pool. Mirrors
// decompose_user + user_utility without building the decomposition.
double slate_value(std::span<const double> scores, int k_slate, double beta,
                   std::vector<double>& scratch) {
  const std::size_t n = scores.size();
  const std::size_t k = static_cast<std::size_t>(k_slate);
  double top = n > 0 ? *std::max_element(scores.begin(), scores.end()) : 0.0;
  if (n <= k) {
    const std::size_t pad = k - n;
    if (pad > 0) top = std::max(top, 0.0);
    if (beta == 0.0) return top;
    double sum = static_cast<double>(pad) * std::exp(-top / beta);
    for (double s : scores) sum += std::exp((s - top) / beta);
    return top + beta * std::log(sum);
  }
  if (beta == 0.0) return top;
  scratch.assign(scores.begin(), scores.end());
  std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end(),
                   std::greater<>());
  const double tie = scratch[k - 1];
  std::size_t above = 0;
  double sum = 0.0;
  for (double s : scores) {
    if (s > tie) {
      ++above;
      sum += std::exp((s - top) / beta);
    }
  }
  sum += static_cast<double>(k - above) * std::exp((tie - top) / beta);
  return top + beta * std::log(sum);
}

}  // namespace

UserSlate decompose_user(std::span<const double> scores, int k_slate,
                         double beta) {
  if (k_slate < 1) throw InvalidInput("k_slate must be at least 1");
  const std::size_t n = scores.size();
  const std::size_t k = static_cast<std::size_t>(k_slate);
  UserSlate slate;

  if (n <= k) {
    slate.default_count = k - n;
    for (std::size_t i = 0; i < n; ++i) slate.certain.push_back({i, scores[i]});
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return scores[a] > scores[b];
                     });
    const double tie = scores[order[k - 1]];
    for (std::size_t idx : order) {
      if (scores[idx] > tie) {
        slate.certain.push_back({idx, scores[idx]});
      } else if (scores[idx] == tie) {
        slate.straddle.push_back(idx);
      }
    }
    slate.tie_score = tie;
    slate.remaining_slots = k - slate.certain.size();
    // A tie group that fits entirely is deterministic.
    if (slate.straddle.size() == slate.remaining_slots) {
      for (std::size_t idx : slate.straddle) slate.certain.push_back({idx, tie});
      slate.straddle.clear();
      slate.remaining_slots = 0;
    }
  }

  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : slate.certain) top = std::max(top, e.score);
  if (!slate.straddle.empty()) top = std::max(top, slate.tie_score);
  if (slate.default_count > 0) top = std::max(top, 0.0);
  slate.top_score = top;

  std::size_t group = 0;
  for (const auto& e : slate.certain) group += (e.score == top);
  if (!slate.straddle.empty() && slate.tie_score == top) {
    group += slate.straddle.size();
  }
  if (slate.default_count > 0 && top == 0.0) group += slate.default_count;
  slate.top_group_size = group;

  if (beta > 0.0) {
    double sum = static_cast<double>(slate.default_count) * std::exp(-top / beta);
    for (const auto& e : slate.certain) sum += std::exp((e.score - top) / beta);
    sum += static_cast<double>(slate.remaining_slots) *
           std::exp((slate.tie_score - top) / beta);
    slate.log_shifted_denom = std::log(sum);
  }
  return slate;
}

SlateDecomposition decompose_slates(const GameInstance& game,
                                    std::span<const Item> items) {
  check_items(game, items);
  SlateDecomposition out;
  out.beta = game.beta();
  out.num_slots = items.size();
  out.users.reserve(game.num_users());
  const auto rows = item_rows(game, items);
  std::vector<double> scores(items.size());
  for (std::size_t j = 0; j < game.num_users(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = rows[i][j];
    out.users.push_back(decompose_user(scores, game.k_slate(), game.beta()));
  }
  return out;
}

SlateDecomposition decompose_slates(const GameInstance& game,
                                    const StrategyProfile& profile) {
  game.validate_profile(profile);
  const auto items = profile_items(profile);
  return decompose_slates(game, items);
}

double user_utility(const UserSlate& slate, double beta) {
  if (beta == 0.0) return slate.top_score;
  return slate.top_score + beta * slate.log_shifted_denom;
}

double user_utility(const SlateDecomposition& slates, std::size_t user) {
  return user_utility(slates.users.at(user), slates.beta);
}

void choice_probabilities(const UserSlate& slate, double beta,
                          std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (beta == 0.0) {
    const double share = 1.0 / static_cast<double>(slate.top_group_size);
    for (const auto& e : slate.certain) {
      if (e.score == slate.top_score) out[e.slot] = share;
    }
    if (slate.tie_score == slate.top_score) {
      for (std::size_t idx : slate.straddle) out[idx] = share;
    }
    return;
  }
  const double lz = slate.log_shifted_denom;
  for (const auto& e : slate.certain) {
    out[e.slot] = std::exp((e.score - slate.top_score) / beta - lz);
  }
  if (!slate.straddle.empty()) {
    const double p = slate.inclusion_probability() *
                     std::exp((slate.tie_score - slate.top_score) / beta - lz);
    for (std::size_t idx : slate.straddle) out[idx] = p;
  }
}

std::vector<double> choice_probabilities(const SlateDecomposition& slates,
                                         std::size_t user) {
  std::vector<double> out(slates.num_slots, 0.0);
  choice_probabilities(slates.users.at(user), slates.beta, out);
  return out;
}

double default_choice_probability(const UserSlate& slate, double beta) {
  if (slate.default_count == 0) return 0.0;
  if (beta == 0.0) {
    if (slate.top_score != 0.0) return 0.0;
    return static_cast<double>(slate.default_count) /
           static_cast<double>(slate.top_group_size);
  }
  return static_cast<double>(slate.default_count) *
         std::exp(-slate.top_score / beta - slate.log_shifted_denom);
}

EvaluationReport evaluate(const GameInstance& game,
                          std::span<const Item> items) {
  const SlateDecomposition slates = decompose_slates(game, items);
  const double beta = game.beta();
  const bool engagement = game.metric() == Metric::kEngagement;
  EvaluationReport report;
  report.user_utilities.resize(game.num_users());
  report.creator_utilities.assign(items.size(), 0.0);
  report.choice_probs.assign(game.num_users(),
                             std::vector<double>(items.size(), 0.0));
  for (std::size_t j = 0; j < game.num_users(); ++j) {
    const double w = game.users()[j].weight;
    const double pi = user_utility(slates.users[j], beta);
    report.user_utilities[j] = pi;
    report.welfare += w * pi;
    auto& probs = report.choice_probs[j];
    choice_probabilities(slates.users[j], beta, probs);
    const double per_choice = engagement ? w * pi : w;
    for (std::size_t i = 0; i < items.size(); ++i) {
      report.creator_utilities[i] += per_choice * probs[i];
    }
  }
  return report;
}

EvaluationReport evaluate(const GameInstance& game,
                          const StrategyProfile& profile) {
  game.validate_profile(profile);
  const auto items = profile_items(profile);
  return evaluate(game, items);
}

std::vector<double> creator_utilities(const GameInstance& game,
                                      std::span<const Item> items) {
  return evaluate(game, items).creator_utilities;
}

std::vector<double> creator_utilities(const GameInstance& game,
                                      const StrategyProfile& profile) {
  return evaluate(game, profile).creator_utilities;
}

double welfare(const GameInstance& game, std::span<const Item> items) {
  check_items(game, items);
  const auto rows = item_rows(game, items);
  std::vector<double> scores(items.size());
  std::vector<double> scratch;
  scratch.reserve(items.size());
  double total = 0.0;
  for (std::size_t j = 0; j < game.num_users(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = rows[i][j];
    total += game.users()[j].weight *
             slate_value(scores, game.k_slate(), game.beta(), scratch);
  }
  return total;
}

double welfare(const GameInstance& game, const StrategyProfile& profile) {
  game.validate_profile(profile);
  const auto items = profile_items(profile);
  return welfare(game, items);
}

std::vector<Item> profile_items(const StrategyProfile& profile) {
  std::vector<Item> items;
  items.reserve(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    items.push_back({i, profile[i]});
  }
  return items;
}

std::vector<Item> items_without(const StrategyProfile& profile,
                                std::size_t removed) {
  std::vector<Item> items;
  items.reserve(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (i != removed) items.push_back({i, profile[i]});
  }
  return items;
}

}  // namespace ccgame
