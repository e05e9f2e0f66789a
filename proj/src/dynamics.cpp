#include "ccgame/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "ccgame/equilibrium.hpp"
#include "ccgame/error.hpp"
#include "ccgame/rng.hpp"

namespace ccgame {

double default_reward_scale(const GameInstance& game) {
  if (game.metric() == Metric::kEngagement && game.beta() > 0.0) {
    return game.total_weight() *
           (1.0 + game.beta() * std::log(static_cast<double>(game.k_slate())));
  }
  return game.total_weight();
}

std::vector<double> exp3_mixing(std::span<const double> scores, double epsilon) {
  const std::size_t k = scores.size();
  std::vector<double> p(k);
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    p[j] = std::exp(scores[j] - top);
    z += p[j];
  }
  const double floor = epsilon / static_cast<double>(k);
  for (double& v : p) v = (1.0 - epsilon) * v / z + floor;
  return p;
}

Exp3Step exp3_step(std::span<const double> scores, double eta, double epsilon,
                   std::size_t arm, double utility, double reward_scale) {
  if (arm >= scores.size()) throw InvalidInput("arm index out of range");
  const auto p = exp3_mixing(scores, epsilon);
  Exp3Step out;
  out.scores.assign(scores.begin(), scores.end());
  out.scores[arm] += eta * (utility / reward_scale) / p[arm];
  out.mixing = exp3_mixing(out.scores, epsilon);
  return out;
}

StrategyProfile DynamicsTrace::profile(std::size_t t) const {
  return StrategyProfile(actions.begin() + static_cast<std::ptrdiff_t>(t * num_players),
                         actions.begin() + static_cast<std::ptrdiff_t>((t + 1) * num_players));
}

double DynamicsTrace::average_welfare() const {
  if (expected_welfare.empty()) return 0.0;
  return std::accumulate(expected_welfare.begin(), expected_welfare.end(), 0.0) /
         static_cast<double>(expected_welfare.size());
}

namespace {

std::size_t sample(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    acc += p[j];
    if (u < acc) return j;
  }
  return p.size() - 1;
}

void validate(const Exp3Config& c) {
  if (!(c.eta > 0.0)) throw InvalidInput("Exp3 eta must be positive");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) {
    throw InvalidInput("Exp3 epsilon must lie in [0, 1]");
  }
  if (c.reward_scale < 0.0) throw InvalidInput("reward_scale must be positive");
}

}  // namespace

DynamicsTrace run_dynamics(const GameInstance& game,
                           std::span<const Exp3Config> configs,
                           const DynamicsOptions& options) {
  const std::size_t n = game.num_players();
  if (configs.size() != n) throw InvalidInput("need one Exp3 config per player");
  const std::size_t horizon = configs[0].horizon;
  for (const auto& c : configs) {
    validate(c);
    if (c.horizon != horizon) throw InvalidInput("all players need the same horizon");
  }
  const double default_scale = default_reward_scale(game);

  std::vector<std::vector<double>> y(n);
  std::vector<Rng> rngs;
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i].assign(game.num_actions(i), 0.0);
    rngs.emplace_back(configs[i].seed);
    scale[i] = configs[i].reward_scale > 0.0 ? configs[i].reward_scale : default_scale;
  }
  Rng replication_rng(derive_seed(configs[0].seed, 0x7265706cULL, n));

  DynamicsTrace trace;
  trace.rounds = horizon;
  trace.num_players = n;
  trace.snapshot_interval = options.snapshot_interval;
  trace.actions.reserve(horizon * n);
  trace.utilities.reserve(horizon * n);
  trace.welfare.reserve(horizon);
  trace.expected_welfare.reserve(horizon);

  std::vector<std::vector<double>> p(n);
  StrategyProfile s(n), extra(n);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = exp3_mixing(y[i], configs[i].epsilon);
      s[i] = sample(p[i], rngs[i]);
    }
    if (options.snapshot_interval > 0 && t % options.snapshot_interval == 0) {
      trace.snapshot_rounds.push_back(t);
      trace.mixing.push_back(p);
    }
    const EvaluationReport r = evaluate(game, s);
    double w_sum = r.welfare;
    for (std::size_t rep = 1; rep < options.replications; ++rep) {
      for (std::size_t i = 0; i < n; ++i) extra[i] = sample(p[i], replication_rng);
      w_sum += welfare(game, extra);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = r.creator_utilities[i];
      const double normalized = u / scale[i];
      if (normalized < -1e-12 || normalized > 1.0 + 1e-9) {
        throw InvalidInput("normalized reward " + std::to_string(normalized) +
                           " outside [0, 1]; raise reward_scale");
      }
      y[i][s[i]] += configs[i].eta * normalized / p[i][s[i]];
      trace.actions.push_back(s[i]);
      trace.utilities.push_back(u);
    }
    trace.welfare.push_back(r.welfare);
    trace.expected_welfare.push_back(
        w_sum / static_cast<double>(std::max<std::size_t>(1, options.replications)));
  }
  trace.final_mixing.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.final_mixing[i] = exp3_mixing(y[i], configs[i].epsilon);
  }
  return trace;
}

DynamicsTrace run_dynamics(const GameInstance& game, const Exp3Config& config,
                           const DynamicsOptions& options) {
  std::vector<Exp3Config> configs(game.num_players(), config);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    configs[i].seed = derive_seed(config.seed, i);
  }
  return run_dynamics(game, configs, options);
}

namespace {

// Memoizes creator utilities by profile index when the space is small
// enough to make repeats likely.
class UtilityCache {
 public:
  explicit UtilityCache(const GameInstance& game) : game_(game) {
    try {
      space_ = ProfileSpace(game);
      enabled_ = space_.size() <= 10'000'000;
    } catch (const BudgetExceeded&) {
      enabled_ = false;
    }
  }

  const std::vector<double>& get(const StrategyProfile& s) {
    if (!enabled_) {
      scratch_ = creator_utilities(game_, s);
      return scratch_;
    }
    const std::size_t key = space_.encode(s);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, creator_utilities(game_, s)).first;
    return it->second;
  }

 private:
  const GameInstance& game_;
  ProfileSpace space_;
  bool enabled_ = false;
  std::unordered_map<std::size_t, std::vector<double>> cache_;
  std::vector<double> scratch_;
};

std::vector<double> regrets_for(const DynamicsTrace& trace, const GameInstance& game,
                                const std::vector<std::size_t>& players) {
  UtilityCache cache(game);
  std::vector<double> out;
  for (std::size_t i : players) {
    if (i >= trace.num_players) throw InvalidInput("player index out of range");
    std::vector<double> totals(game.num_actions(i), 0.0);
    double realized = 0.0;
    for (std::size_t t = 0; t < trace.rounds; ++t) {
      StrategyProfile s = trace.profile(t);
      realized += trace.utility(t, i);
      for (std::size_t a = 0; a < totals.size(); ++a) {
        s[i] = a;
        totals[a] += cache.get(s)[i];
      }
    }
    out.push_back(*std::max_element(totals.begin(), totals.end()) - realized);
  }
  return out;
}

}  // namespace

double estimate_regret(const DynamicsTrace& trace, const GameInstance& game,
                       std::size_t player) {
  return regrets_for(trace, game, {player}).front();
}

std::vector<double> estimate_regrets(const DynamicsTrace& trace,
                                     const GameInstance& game) {
  std::vector<std::size_t> all(trace.num_players);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return regrets_for(trace, game, all);
}

double pota(const DynamicsTrace& trace, double max_welfare) {
  const double mean = trace.average_welfare();
  return max_welfare / std::max(mean, std::numeric_limits<double>::min());
}

std::map<std::string, double> action_histogram(const DynamicsTrace& trace,
                                               const GameInstance& game,
                                               HistogramKey key) {
  std::map<std::string, double> counts;
  double total = 0.0;
  for (std::size_t t = 0; t < trace.rounds; ++t) {
    for (std::size_t i = 0; i < trace.num_players; ++i) {
      const std::size_t a = trace.actions[t * trace.num_players + i];
      if (key == HistogramKey::kAction) {
        counts[std::to_string(a)] += 1.0;
        total += 1.0;
        continue;
      }
      const auto& tags = game.players()[i].actions[a].tags;
      if (tags.empty()) {
        counts["untagged"] += 1.0;
        total += 1.0;
      }
      for (const auto& tag : tags) {
        counts[tag] += 1.0;
        total += 1.0;
      }
    }
  }
  for (auto& [name, c] : counts) c /= total;
  return counts;
}

std::string trace_csv(const DynamicsTrace& trace) {
  std::string out = "round,player,action,utility,welfare\n";
  char buf[160];
  for (std::size_t t = 0; t < trace.rounds; ++t) {
    for (std::size_t i = 0; i < trace.num_players; ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g\n", t, i,
                    trace.actions[t * trace.num_players + i],
                    trace.utility(t, i), trace.welfare[t]);
      out += buf;
    }
  }
  return out;
}

nlohmann::json to_json(const DynamicsSummary& summary, const DynamicsTrace& trace) {
  nlohmann::json doc = {{"rounds", trace.rounds},
                        {"players", trace.num_players},
                        {"avg_welfare", summary.average_welfare},
                        {"regrets", summary.regrets},
                        {"histogram", summary.histogram},
                        {"final_mixing", trace.final_mixing}};
  if (summary.max_welfare) doc["max_welfare"] = *summary.max_welfare;
  if (summary.pota) doc["pota"] = *summary.pota;
  if (!summary.regrets.empty() && trace.rounds > 0) {
    doc["max_regret_rate"] =
        *std::max_element(summary.regrets.begin(), summary.regrets.end()) /
        static_cast<double>(trace.rounds);
  }
  return doc;
}

}  // namespace ccgame
