#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgame/game.hpp"
#include "ccgame/simplex.hpp"

namespace ccgame {

inline constexpr std::size_t kDefaultEnumerationBudget = 10'000'000;
inline constexpr std::size_t kDefaultLpBudget = 100'000;

// Mixed-radix indexing of joint profiles. Player 0 is the most significant
// digit, so index order is lexicographic profile order.
class ProfileSpace {
 public:
  ProfileSpace() = default;
  // Throws BudgetExceeded if the product overflows size_t.
  explicit ProfileSpace(std::vector<std::size_t> radices);
  explicit ProfileSpace(const GameInstance& game);

  std::size_t size() const { return size_; }
  std::size_t num_players() const { return radices_.size(); }
  std::size_t radix(std::size_t player) const { return radices_[player]; }
  std::size_t stride(std::size_t player) const { return strides_[player]; }

  StrategyProfile decode(std::size_t index) const;
  std::size_t encode(const StrategyProfile& profile) const;
  std::size_t digit(std::size_t index, std::size_t player) const {
    return (index / strides_[player]) % radices_[player];
  }
  // Index of (action, s_-player) given the index of s.
  std::size_t replace(std::size_t index, std::size_t player,
                      std::size_t action) const {
    return index + (action - digit(index, player)) * strides_[player];
  }

 private:
  std::vector<std::size_t> radices_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Exact u_i(s) and W(s) for every joint profile.
class UtilityTable {
 public:
  // Throws BudgetExceeded when the number of profiles exceeds `budget`.
  UtilityTable(const GameInstance& game, std::size_t budget = kDefaultLpBudget,
               unsigned workers = 1);

  const ProfileSpace& space() const { return space_; }
  std::size_t num_players() const { return space_.num_players(); }
  double welfare(std::size_t index) const { return welfare_[index]; }
  double utility(std::size_t index, std::size_t player) const {
    return utility_[index * space_.num_players() + player];
  }
  std::span<const double> welfare_values() const { return welfare_; }

 private:
  ProfileSpace space_;
  std::vector<double> welfare_;
  std::vector<double> utility_;
};

struct WelfareOptimum {
  StrategyProfile profile;
  double welfare = 0.0;
  std::string method;  // "exact", "sa" or "brs"
  std::size_t evaluations = 0;
};

// Full enumeration; ties go to the lexicographically smallest profile.
WelfareOptimum max_welfare_exact(
    const GameInstance& game, std::size_t budget = kDefaultEnumerationBudget);
WelfareOptimum max_welfare_exact(const UtilityTable& table);

struct AnnealingOptions {
  std::size_t horizon = 5000;
  double tau0 = 0.1;  // tau_t = tau0 / sqrt(t)
  std::uint64_t seed = 0;
};

// Returns the best profile visited.
WelfareOptimum max_welfare_sa(const GameInstance& game,
                              const AnnealingOptions& options = {});

struct BestResponseOptions {
  std::size_t rounds = 0;  // 0 means max(30, 2n)
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
};

struct BestResponseRun {
  WelfareOptimum result;
  std::vector<double> welfare_path;  // after each round, first run only
};

WelfareOptimum max_welfare_brs(const GameInstance& game,
                               const BestResponseOptions& options = {});
// Single run that also records the welfare after every round.
BestResponseRun best_response_run(const GameInstance& game,
                                  std::size_t rounds, std::uint64_t seed);

struct NeCheck {
  bool is_ne = false;
  double max_gap = 0.0;  // max_i max_a u_i(a, s_-i) - u_i(s)
  std::size_t player = 0;
  std::size_t deviation = 0;
};

NeCheck verify_pure_ne(const GameInstance& game, const StrategyProfile& profile,
                       double tol = 1e-9);

struct CceResult {
  std::vector<double> distribution;  // over ProfileSpace indices
  double welfare = 0.0;
  lp::Status status = lp::Status::kIterationLimit;
  std::size_t iterations = 0;
  std::size_t constraints = 0;       // deviation rows kept after dedup
  std::size_t dropped_constraints = 0;
  double duality_gap = 0.0;
};

struct CceOptions {
  // If given, checked for CCE feasibility before solving; a verified NE
  // that violates the constraints means the table or LP is broken.
  std::optional<StrategyProfile> known_ne;
};

// Throws SolverError if the LP does not reach optimality.
CceResult worst_cce_welfare(const UtilityTable& table,
                            const CceOptions& options = {});
CceResult worst_cce_welfare(const GameInstance& game,
                            std::size_t lp_budget = kDefaultLpBudget);

// max over (i, a') of E_alpha[u_i(a', s_-i) - u_i(s)]; <= 0 for a CCE.
double cce_violation(const UtilityTable& table,
                     std::span<const double> distribution);

struct PoaOptions {
  std::size_t exact_budget = kDefaultEnumerationBudget;
  std::size_t lp_budget = kDefaultLpBudget;
  AnnealingOptions annealing;
  BestResponseOptions best_response;
  unsigned workers = 1;
  std::optional<StrategyProfile> known_ne;
};

struct SolveReport {
  WelfareOptimum max;
  CceResult worst_cce;
  double poa = 0.0;
  bool numerator_exact = false;
  ProfileSpace space;
};

SolveReport poa(const GameInstance& game, const PoaOptions& options = {});

// Exact optimum within options.exact_budget, otherwise the better of SA and
// best-response search.
WelfareOptimum max_welfare(const GameInstance& game,
                           const PoaOptions& options = {});

nlohmann::json to_json(const SolveReport& report);
// Rows "index,profile,probability" for entries above `threshold`.
std::string distribution_csv(const ProfileSpace& space,
                             std::span<const double> distribution,
                             double threshold = 0.0);

}  // namespace ccgame
