#include "ccgame/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "ccgame/error.hpp"
#include "ccgame/rng.hpp"

namespace ccgame {

ProfileSpace::ProfileSpace(std::vector<std::size_t> radices)
    : radices_(std::move(radices)), strides_(radices_.size(), 1) {
  size_ = 1;
  for (std::size_t i = radices_.size(); i-- > 0;) {
    if (radices_[i] == 0) throw InvalidInput("player with no actions");
    strides_[i] = size_;
    if (size_ > std::numeric_limits<std::size_t>::max() / radices_[i]) {
      throw BudgetExceeded("joint profile space overflows size_t");
    }
    size_ *= radices_[i];
  }
}

namespace {

std::vector<std::size_t> action_counts(const GameInstance& game) {
  std::vector<std::size_t> out(game.num_players());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = game.num_actions(i);
  return out;
}

StrategyProfile random_profile(const GameInstance& game, Rng& rng) {
  StrategyProfile s(game.num_players());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = rng.below(game.num_actions(i));
  return s;
}

// Advances a lexicographic odometer; false after the last profile.
bool next_profile(const GameInstance& game, StrategyProfile& s) {
  for (std::size_t i = s.size(); i-- > 0;) {
    if (++s[i] < game.num_actions(i)) return true;
    s[i] = 0;
  }
  return false;
}

}  // namespace

ProfileSpace::ProfileSpace(const GameInstance& game)
    : ProfileSpace(action_counts(game)) {}

StrategyProfile ProfileSpace::decode(std::size_t index) const {
  StrategyProfile s(radices_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = digit(index, i);
  return s;
}

std::size_t ProfileSpace::encode(const StrategyProfile& profile) const {
  if (profile.size() != radices_.size()) {
    throw InvalidInput("profile length does not match the profile space");
  }
  std::size_t index = 0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] >= radices_[i]) throw InvalidInput("action out of range");
    index += profile[i] * strides_[i];
  }
  return index;
}

UtilityTable::UtilityTable(const GameInstance& game, std::size_t budget,
                           unsigned workers)
    : space_(game) {
  if (space_.size() > budget) {
    throw BudgetExceeded("utility table needs " + std::to_string(space_.size()) +
                         " profiles, budget is " + std::to_string(budget));
  }
  const std::size_t n = space_.num_players();
  welfare_.assign(space_.size(), 0.0);
  utility_.assign(space_.size() * n, 0.0);
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const StrategyProfile s = space_.decode(idx);
      const EvaluationReport r = evaluate(game, s);
      welfare_[idx] = r.welfare;
      std::copy(r.creator_utilities.begin(), r.creator_utilities.end(),
                utility_.begin() + static_cast<std::ptrdiff_t>(idx * n));
    }
  };
  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(workers, space_.size() / 64));
  if (threads <= 1) {
    fill(0, space_.size());
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (space_.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(space_.size(), begin + chunk);
    if (begin < end) pool.emplace_back(fill, begin, end);
  }
  for (auto& th : pool) th.join();
}

WelfareOptimum max_welfare_exact(const GameInstance& game, std::size_t budget) {
  const std::size_t total = game.num_profiles();
  if (total > budget) {
    throw BudgetExceeded("exhaustive search needs " + std::to_string(total) +
                         " evaluations, budget is " + std::to_string(budget));
  }
  WelfareOptimum best;
  best.method = "exact";
  StrategyProfile s(game.num_players(), 0);
  best.welfare = -std::numeric_limits<double>::infinity();
  do {
    const double w = welfare(game, s);
    ++best.evaluations;
    if (w > best.welfare) {
      best.welfare = w;
      best.profile = s;
    }
  } while (next_profile(game, s));
  return best;
}

WelfareOptimum max_welfare_exact(const UtilityTable& table) {
  WelfareOptimum best;
  best.method = "exact";
  std::size_t arg = 0;
  for (std::size_t idx = 1; idx < table.space().size(); ++idx) {
    if (table.welfare(idx) > table.welfare(arg)) arg = idx;
  }
  best.profile = table.space().decode(arg);
  best.welfare = table.welfare(arg);
  best.evaluations = table.space().size();
  return best;
}

WelfareOptimum max_welfare_sa(const GameInstance& game,
                              const AnnealingOptions& options) {
  Rng rng(options.seed);
  StrategyProfile current = random_profile(game, rng);
  double w = welfare(game, current);
  WelfareOptimum best{current, w, "sa", 1};
  const std::size_t n = game.num_players();
  for (std::size_t t = 1; t <= options.horizon; ++t) {
    const double tau = options.tau0 / std::sqrt(static_cast<double>(t));
    const std::size_t i = rng.below(n);
    const std::size_t a = rng.below(game.num_actions(i));
    if (a == current[i]) continue;
    const std::size_t previous = current[i];
    current[i] = a;
    const double w_new = welfare(game, current);
    ++best.evaluations;
    const bool accept =
        w_new > w || rng.uniform() < std::exp((w_new - w) / tau);
    if (!accept) {
      current[i] = previous;
      continue;
    }
    w = w_new;
    if (w > best.welfare) {
      best.welfare = w;
      best.profile = current;
    }
  }
  return best;
}

BestResponseRun best_response_run(const GameInstance& game, std::size_t rounds,
                                  std::uint64_t seed) {
  Rng rng(seed);
  BestResponseRun run;
  StrategyProfile s = random_profile(game, rng);
  double w = welfare(game, s);
  run.result.evaluations = 1;
  const std::size_t n = game.num_players();
  for (std::size_t t = 0; t < rounds; ++t) {
    const std::size_t i = rng.below(n);
    const std::size_t keep = s[i];
    std::size_t best_a = keep;
    double best_w = w;
    for (std::size_t a = 0; a < game.num_actions(i); ++a) {
      if (a == keep) continue;
      s[i] = a;
      const double wa = welfare(game, s);
      ++run.result.evaluations;
      if (wa > best_w) {
        best_w = wa;
        best_a = a;
      }
    }
    s[i] = best_a;
    w = best_w;
    run.welfare_path.push_back(w);
  }
  run.result.profile = s;
  run.result.welfare = w;
  run.result.method = "brs";
  return run;
}

WelfareOptimum max_welfare_brs(const GameInstance& game,
                               const BestResponseOptions& options) {
  const std::size_t rounds =
      options.rounds ? options.rounds
                     : std::max<std::size_t>(30, 2 * game.num_players());
  WelfareOptimum best;
  best.method = "brs";
  best.welfare = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
    const auto run = best_response_run(game, rounds, derive_seed(options.seed, r));
    evaluations += run.result.evaluations;
    if (run.result.welfare > best.welfare) best = run.result;
  }
  best.evaluations = evaluations;
  return best;
}

WelfareOptimum max_welfare(const GameInstance& game, const PoaOptions& options) {
  if (game.num_profiles() <= options.exact_budget) {
    return max_welfare_exact(game, options.exact_budget);
  }
  const WelfareOptimum sa = max_welfare_sa(game, options.annealing);
  const WelfareOptimum brs = max_welfare_brs(game, options.best_response);
  WelfareOptimum best = brs.welfare > sa.welfare ? brs : sa;
  best.method = "sa+brs:" + best.method;
  best.evaluations = sa.evaluations + brs.evaluations;
  return best;
}

NeCheck verify_pure_ne(const GameInstance& game, const StrategyProfile& profile,
                       double tol) {
  game.validate_profile(profile);
  const auto base = creator_utilities(game, profile);
  NeCheck check;
  check.deviation = profile.empty() ? 0 : profile[0];
  StrategyProfile dev = profile;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    for (std::size_t a = 0; a < game.num_actions(i); ++a) {
      if (a == profile[i]) continue;
      dev[i] = a;
      const double gap = creator_utilities(game, dev)[i] - base[i];
      if (gap > check.max_gap) {
        check.max_gap = gap;
        check.player = i;
        check.deviation = a;
      }
    }
    dev[i] = profile[i];
  }
  check.is_ne = check.max_gap <= tol;
  return check;
}

namespace {

struct DeviationRow {
  std::size_t player;
  std::size_t action;
  std::vector<double> gains;
};

std::vector<DeviationRow> deviation_rows(const UtilityTable& table,
                                         std::size_t& dropped) {
  const ProfileSpace& space = table.space();
  const std::size_t total = space.size();
  double scale = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    for (std::size_t i = 0; i < table.num_players(); ++i) {
      scale = std::max(scale, std::abs(table.utility(idx, i)));
    }
  }
  const double zero_tol = 1e-12 * std::max(1.0, scale);

  std::vector<DeviationRow> rows;
  std::unordered_multimap<std::uint64_t, std::size_t> seen;
  dropped = 0;
  for (std::size_t i = 0; i < space.num_players(); ++i) {
    for (std::size_t a = 0; a < space.radix(i); ++a) {
      std::vector<double> gains(total);
      double largest = 0.0;
      std::uint64_t hash = 1469598103934665603ULL;
      for (std::size_t idx = 0; idx < total; ++idx) {
        double g = table.utility(space.replace(idx, i, a), i) - table.utility(idx, i);
        if (std::abs(g) <= zero_tol) g = 0.0;
        gains[idx] = g;
        largest = std::max(largest, g);
        std::uint64_t bits;
        std::memcpy(&bits, &g, sizeof bits);
        hash = (hash ^ bits) * 1099511628211ULL;
      }
      // A row with no positive gain is satisfied by every distribution.
      if (largest <= 0.0) {
        ++dropped;
        continue;
      }
      bool duplicate = false;
      auto range = seen.equal_range(hash);
      for (auto it = range.first; it != range.second && !duplicate; ++it) {
        duplicate = rows[it->second].gains == gains;
      }
      if (duplicate) {
        ++dropped;
        continue;
      }
      seen.emplace(hash, rows.size());
      rows.push_back({i, a, std::move(gains)});
    }
  }
  return rows;
}

}  // namespace

double cce_violation(const UtilityTable& table,
                     std::span<const double> distribution) {
  const ProfileSpace& space = table.space();
  if (distribution.size() != space.size()) {
    throw InvalidInput("distribution length does not match the profile space");
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < space.num_players(); ++i) {
    for (std::size_t a = 0; a < space.radix(i); ++a) {
      double gain = 0.0;
      for (std::size_t idx = 0; idx < space.size(); ++idx) {
        if (distribution[idx] == 0.0) continue;
        gain += distribution[idx] *
                (table.utility(space.replace(idx, i, a), i) - table.utility(idx, i));
      }
      worst = std::max(worst, gain);
    }
  }
  return worst;
}

CceResult worst_cce_welfare(const UtilityTable& table, const CceOptions& options) {
  const ProfileSpace& space = table.space();
  if (options.known_ne) {
    std::vector<double> point(space.size(), 0.0);
    point[space.encode(*options.known_ne)] = 1.0;
    const double v = cce_violation(table, point);
    if (v > 1e-9) {
      throw SolverError("supplied pure NE violates the CCE constraints by " +
                        std::to_string(v));
    }
  }

  CceResult out;
  auto rows = deviation_rows(table, out.dropped_constraints);
  out.constraints = rows.size();

  lp::Problem problem;
  problem.num_vars = space.size();
  problem.objective.assign(table.welfare_values().begin(),
                           table.welfare_values().end());
  problem.constraints.reserve(rows.size() + 1);
  for (auto& row : rows) {
    problem.constraints.push_back(
        {std::move(row.gains), lp::Relation::kLessEqual, 0.0});
  }
  problem.constraints.push_back(
      {std::vector<double>(space.size(), 1.0), lp::Relation::kEqual, 1.0});

  const lp::Solution sol = lp::solve(problem);
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status != lp::Status::kOptimal) {
    throw SolverError("worst-CCE LP ended with status " +
                      std::string(lp::to_string(sol.status)));
  }
  out.distribution = sol.x;
  double mass = 0.0;
  for (double p : out.distribution) mass += p;
  for (double& p : out.distribution) p /= mass;
  out.welfare = 0.0;
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    out.welfare += out.distribution[idx] * table.welfare(idx);
  }
  // Only the simplex row has a nonzero right-hand side.
  out.duality_gap = std::abs(sol.objective - sol.duals.back());
  return out;
}

CceResult worst_cce_welfare(const GameInstance& game, std::size_t lp_budget) {
  const UtilityTable table(game, lp_budget);
  return worst_cce_welfare(table);
}

SolveReport poa(const GameInstance& game, const PoaOptions& options) {
  if (game.num_profiles() > options.lp_budget) {
    throw BudgetExceeded("worst-CCE LP needs " +
                         std::to_string(game.num_profiles()) +
                         " variables, budget is " +
                         std::to_string(options.lp_budget));
  }
  const UtilityTable table(game, options.lp_budget, options.workers);
  SolveReport report;
  report.space = table.space();
  if (table.space().size() <= options.exact_budget) {
    report.max = max_welfare_exact(table);
    report.numerator_exact = true;
  } else {
    report.max = max_welfare(game, options);
  }
  CceOptions cce;
  cce.known_ne = options.known_ne;
  report.worst_cce = worst_cce_welfare(table, cce);
  report.poa = report.max.welfare / report.worst_cce.welfare;
  return report;
}

namespace {

std::string profile_string(const StrategyProfile& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const SolveReport& report) {
  nlohmann::json support = nlohmann::json::array();
  for (std::size_t idx = 0; idx < report.worst_cce.distribution.size(); ++idx) {
    const double p = report.worst_cce.distribution[idx];
    if (p <= 1e-12) continue;
    support.push_back({{"index", idx},
                       {"profile", report.space.decode(idx)},
                       {"probability", p}});
  }
  return {
      {"max_welfare", report.max.welfare},
      {"max_profile", report.max.profile},
      {"max_method", report.max.method},
      {"numerator_exact", report.numerator_exact},
      {"worst_cce_welfare", report.worst_cce.welfare},
      {"poa", report.poa},
      {"lp_status", std::string(lp::to_string(report.worst_cce.status))},
      {"lp_iterations", report.worst_cce.iterations},
      {"lp_constraints", report.worst_cce.constraints},
      {"lp_dropped_constraints", report.worst_cce.dropped_constraints},
      {"lp_duality_gap", report.worst_cce.duality_gap},
      {"cce_support", support},
  };
}

std::string distribution_csv(const ProfileSpace& space,
                             std::span<const double> distribution,
                             double threshold) {
  std::ostringstream out;
  out.precision(17);
  out << "index,profile,probability\n";
  for (std::size_t idx = 0; idx < distribution.size(); ++idx) {
    if (distribution[idx] <= threshold) continue;
    out << idx << ',' << profile_string(space.decode(idx)) << ','
        << distribution[idx] << '\n';
  }
  return out.str();
}

}  // namespace ccgame
