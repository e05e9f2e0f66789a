#include "ccgame/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ccgame/bounds.hpp"
#include "ccgame/equilibrium.hpp"
#include "ccgame/game.hpp"
#include "ccgame/gumbel.hpp"
#include "ccgame/instances.hpp"
#include "ccgame/rng.hpp"

namespace ccgame {

namespace {

constexpr double kSlack = 1e-9;
// Items chosen fewer times than this have no usable conditional estimate.
constexpr std::size_t kMinConditionalSupport = 30;

class Tally {
 public:
  explicit Tally(std::string name) { result_.name = std::move(name); }

  void check(bool ok, double excess = 0.0) {
    ++result_.cases;
    if (!ok) {
      ++result_.violations;
      worst_ = std::max(worst_, excess);
    }
  }

  CheckResult finish(std::string what) {
    char buf[160];
    if (result_.violations == 0) {
      std::snprintf(buf, sizeof buf, "%zu %s, no violations", result_.cases, what.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%zu of %zu %s violated (worst excess %.3g)",
                    result_.violations, result_.cases, what.c_str(), worst_);
    }
    result_.detail = buf;
    result_.passed = result_.violations == 0;
    return result_;
  }

 private:
  CheckResult result_;
  double worst_ = 0.0;
};

GameInstance random_instance(Rng& rng) {
  const std::size_t n = 1 + rng.below(5);
  const std::size_t m = 1 + rng.below(20);
  const int k = 1 + static_cast<int>(rng.below(4));
  const double beta = 0.05 + 0.95 * rng.uniform();
  std::vector<User> users(m);
  for (std::size_t j = 0; j < m; ++j) {
    users[j].id = static_cast<int>(j);
    users[j].weight = 0.5 + rng.uniform();
  }
  std::vector<ActionSet> players(n);
  for (std::size_t i = 0; i < n; ++i) {
    players[i].player_id = static_cast<int>(i);
    players[i].actions.resize(1 + rng.below(3));
    for (auto& a : players[i].actions) {
      a.sigma.resize(m);
      for (auto& v : a.sigma) v = rng.uniform();
    }
  }
  return GameInstance(std::move(users), std::move(players), beta, k);
}

StrategyProfile random_profile(const GameInstance& game, Rng& rng) {
  StrategyProfile s(game.num_players());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = rng.below(game.num_actions(i));
  return s;
}

std::vector<Item> all_items(const GameInstance& game) {
  std::vector<Item> pool;
  for (std::size_t i = 0; i < game.num_players(); ++i)
    for (std::size_t a = 0; a < game.num_actions(i); ++a) pool.push_back({i, a});
  return pool;
}

// Whether `x` beats the K-th best score among `others` (or fills an empty
// slot with a positive score).
bool enters_some_slate(const GameInstance& game, std::span<const Item> others,
                       Item x) {
  const auto k = static_cast<std::size_t>(game.k_slate());
  for (std::size_t j = 0; j < game.num_users(); ++j) {
    std::vector<double> s;
    for (const Item& it : others) s.push_back(game.sigma(it.player, it.action, j));
    const double v = game.sigma(x.player, x.action, j);
    if (s.size() < k) {
      if (v > 0.0) return true;
      continue;
    }
    std::nth_element(s.begin(), s.begin() + (k - 1), s.end(), std::greater<>());
    if (v > s[k - 1]) return true;
  }
  return false;
}

CheckResult oracle_check(const VerificationOptions& o) {
  Tally tally("closed_form_vs_monte_carlo");
  Rng rng(derive_seed(o.seed, 1));
  for (std::size_t c = 0; c < o.oracle_cases; ++c) {
    const std::size_t items = 2 + rng.below(5);
    const int k = 1 + static_cast<int>(rng.below(items));
    const double beta = 0.05 + 0.95 * rng.uniform();
    std::vector<double> scores(items);
    for (auto& v : scores) v = rng.uniform();

    const UserSlate slate = decompose_user(scores, k, beta);
    const double pi = user_utility(slate, beta);
    std::vector<double> probs(items, 0.0);
    choice_probabilities(slate, beta, probs);

    // The oracle samples the realized slate: the K best scores.
    std::vector<std::size_t> order(items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(static_cast<std::size_t>(k));
    std::vector<double> shown;
    for (std::size_t idx : order) shown.push_back(scores[idx]);
    gumbel::SamplingOptions so;
    so.samples = o.oracle_samples;
    so.seed = derive_seed(o.seed, 2, c);
    const auto mc = gumbel::mc_summary(shown, beta, so);

    auto within = [&](double exact, const gumbel::Estimate& e) {
      const double z = std::abs(exact - e.mean) / std::max(e.std_error, 1e-300);
      tally.check(z <= 3.0, z - 3.0);
    };
    within(pi, mc.utility);
    double shown_mass = 0.0;
    std::vector<gumbel::Estimate> conditional;
    for (std::size_t r = 0; r < order.size(); ++r) {
      within(probs[order[r]], mc.choice[r]);
      shown_mass += probs[order[r]];
      const auto& cond = mc.conditional[r];
      const double hits = mc.choice[r].mean * static_cast<double>(mc.samples);
      if (cond && hits >= static_cast<double>(kMinConditionalSupport)) {
        within(pi, *cond);
        conditional.push_back(*cond);
      }
    }
    tally.check(std::abs(shown_mass - 1.0) <= kSlack, std::abs(shown_mass - 1.0));
    for (std::size_t a = 0; a < conditional.size(); ++a)
      for (std::size_t b = a + 1; b < conditional.size(); ++b) {
        const double se = std::hypot(conditional[a].std_error, conditional[b].std_error);
        const double z = std::abs(conditional[a].mean - conditional[b].mean) / se;
        tally.check(z <= 3.0, z - 3.0);
      }
  }
  return tally.finish("comparisons at 3 standard errors");
}

std::vector<CheckResult> property_checks(const VerificationOptions& o) {
  Tally normalization("choice_normalization");
  Tally identity("welfare_identity");
  Tally monotone("welfare_monotonicity");
  Tally strict("welfare_strict_on_entry");
  Tally submodular("welfare_submodularity");
  Tally smooth("smoothness");
  Rng rng(derive_seed(o.seed, 3));
  for (std::size_t t = 0; t < o.property_instances; ++t) {
    const GameInstance game = random_instance(rng);
    const double beta = game.beta();
    const StrategyProfile s = random_profile(game, rng);
    const StrategyProfile star = random_profile(game, rng);
    const auto report = evaluate(game, s);
    const auto slates = decompose_slates(game, s);

    double default_mass = 0.0;
    for (std::size_t j = 0; j < game.num_users(); ++j) {
      const double p0 = default_choice_probability(slates.users[j], beta);
      const auto& p = report.choice_probs[j];
      const double total = std::accumulate(p.begin(), p.end(), 0.0) + p0;
      normalization.check(std::abs(total - 1.0) <= kSlack, std::abs(total - 1.0));
      default_mass += game.users()[j].weight * report.user_utilities[j] * p0;
    }
    const double sum_u = std::accumulate(report.creator_utilities.begin(),
                                         report.creator_utilities.end(), 0.0);
    const double gap = std::abs(report.welfare - sum_u - default_mass);
    identity.check(gap <= kSlack * std::max(1.0, report.welfare), gap);

    // Set-function view over the whole item pool.
    auto pool = all_items(game);
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    const std::size_t t_size = rng.below(pool.size());
    const std::size_t s_size = t_size == 0 ? 0 : rng.below(t_size + 1);
    const std::vector<Item> small(pool.begin(), pool.begin() + s_size);
    const std::vector<Item> large(pool.begin(), pool.begin() + t_size);
    const Item x = pool[t_size];
    auto with = [](std::vector<Item> v, Item it) {
      v.push_back(it);
      return v;
    };
    const double ws = welfare(game, small), wt = welfare(game, large);
    const double ws_x = welfare(game, with(small, x)), wt_x = welfare(game, with(large, x));
    monotone.check(ws_x >= ws - kSlack, ws - ws_x);
    monotone.check(wt_x >= wt - kSlack, wt - wt_x);
    if (enters_some_slate(game, large, x)) strict.check(wt_x > wt, wt - wt_x);
    submodular.check(ws_x - ws >= wt_x - wt - kSlack, (wt_x - wt) - (ws_x - ws));

    const double c = bounds::c_beta_k(beta, game.k_slate());
    double deviations = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      StrategyProfile d = s;
      d[i] = star[i];
      deviations += creator_utilities(game, d)[i];
    }
    const double rhs = c * welfare(game, star) - c * report.welfare;
    smooth.check(deviations >= rhs - kSlack * std::max(1.0, std::abs(rhs)),
                 rhs - deviations);
  }
  return {normalization.finish("users"),
          identity.finish("profiles"),
          monotone.finish("additions"),
          strict.finish("slate-entering additions"),
          submodular.finish("nested pairs"),
          smooth.finish("profile pairs")};
}

CheckResult bounds_check() {
  Tally tally("bound_invariants");
  const double betas[] = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  for (double beta : betas) {
    double prev_c = 0.0;
    for (int k = 1; k <= 64; ++k) {
      const double c = bounds::c_beta_k(beta, k);
      tally.check(c >= 1.0 - kSlack, 1.0 - c);
      tally.check(c >= prev_c - kSlack, prev_c - c);
      tally.check(bounds::poa_upper(beta, k) <= 2.0 + kSlack);
      if (k >= 2) {
        tally.check(bounds::dynamic_poa_bound(5, beta, k, 0.01) >=
                    bounds::poa_upper(beta, k));
      }
      prev_c = c;
    }
  }
  for (int k = 1; k <= 64; ++k) {
    double prev = 0.0;
    for (double beta : betas) {
      const double c = bounds::c_beta_k(beta, k);
      tally.check(c >= prev - kSlack, prev - c);
      prev = c;
    }
  }
  return tally.finish("grid points");
}

std::vector<CheckResult> equilibrium_checks(const VerificationOptions& o) {
  Tally feasible("pure_ne_in_cce_polytope");
  Tally ordering("worst_cce_below_ne");
  Tally bound("poa_below_bound");
  Rng rng(derive_seed(o.seed, 4));
  for (std::size_t t = 0; t < o.lp_instances; ++t) {
    const GameInstance game = random_instance(rng);
    const UtilityTable table(game);
    const WelfareOptimum best = max_welfare_exact(table);
    const CceResult cce = worst_cce_welfare(table);
    feasible.check(cce_violation(table, cce.distribution) <= 1e-7,
                   cce_violation(table, cce.distribution));
    const double poa = best.welfare / cce.welfare;
    bound.check(poa >= 1.0 - kSlack && poa < bounds::poa_upper(game.beta(), game.k_slate()),
                poa - bounds::poa_upper(game.beta(), game.k_slate()));
    for (std::size_t idx = 0; idx < table.space().size(); ++idx) {
      if (!verify_pure_ne(game, table.space().decode(idx)).is_ne) continue;
      std::vector<double> point(table.space().size(), 0.0);
      point[idx] = 1.0;
      feasible.check(cce_violation(table, point) <= kSlack);
      ordering.check(cce.welfare <= table.welfare(idx) + kSlack,
                     cce.welfare - table.welfare(idx));
    }
  }
  return {feasible.finish("distributions"), ordering.finish("pure equilibria"),
          bound.finish("instances")};
}

std::vector<CheckResult> family_checks() {
  Tally lower("lower_bound_family");
  for (int n = 3; n <= 5; ++n)
    for (int k = 2; k <= n - 1; ++k)
      for (double beta : {0.1, 0.2}) {
        if (!bounds::lower_bound_hypothesis_holds(n, beta, k)) continue;
        const GameInstance game = instances::gen_lower_bound_instance(n, k, beta);
        const StrategyProfile ne(static_cast<std::size_t>(n), 0);
        lower.check(verify_pure_ne(game, ne).is_ne);
        const double ratio = max_welfare_exact(game).welfare / welfare(game, ne);
        lower.check(ratio > bounds::poa_lower(n, beta, k),
                    bounds::poa_lower(n, beta, k) - ratio);
      }
  Tally exposure("exposure_family");
  const auto inst = instances::gen_exposure_gap_instance(3, 2, 0.1);
  StrategyProfile ne(3, 0);
  ne[0] = 1;
  exposure.check(verify_pure_ne(inst.game, ne).is_ne);
  StrategyProfile other = ne;
  other[0] = 0;
  const double ratio = welfare(inst.game, other) / welfare(inst.game, ne);
  exposure.check(ratio > 2.0, 2.0 - ratio);
  exposure.check(std::abs(ratio - instances::exposure_gap_ratio(0.1, 2)) <= 1e-9);
  return {lower.finish("grid checks"), exposure.finish("checks")};
}

}  // namespace

std::vector<CheckResult> run_verification(const VerificationOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(oracle_check(options));
  for (auto& r : property_checks(options)) out.push_back(std::move(r));
  out.push_back(bounds_check());
  for (auto& r : equilibrium_checks(options)) out.push_back(std::move(r));
  for (auto& r : family_checks()) out.push_back(std::move(r));
  return out;
}

}  // namespace ccgame
