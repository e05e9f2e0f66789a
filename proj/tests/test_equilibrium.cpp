#include <cmath>
#include <numeric>

#include "ccgame/bounds.hpp"
#include "ccgame/equilibrium.hpp"
#include "ccgame/error.hpp"
#include "ccgame/instances.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace ccgame;
using ccgame::testing::make_game;
using ccgame::testing::random_game;
using doctest::Approx;

TEST_CASE("profile space is lexicographic") {
  const ProfileSpace space({2, 3, 2});
  CHECK(space.size() == 12);
  CHECK(space.decode(0) == StrategyProfile{0, 0, 0});
  CHECK(space.decode(1) == StrategyProfile{0, 0, 1});
  CHECK(space.decode(2) == StrategyProfile{0, 1, 0});
  CHECK(space.decode(11) == StrategyProfile{1, 2, 1});
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    CHECK(space.encode(space.decode(idx)) == idx);
    auto s = space.decode(idx);
    s[1] = 2;
    CHECK(space.replace(idx, 1, 2) == space.encode(s));
  }
}

TEST_CASE("exact maximum on the two-cluster instance") {
  const GameInstance game = instances::gen_dataset1(2, 100, 0.1, 1, 0);
  const WelfareOptimum best = max_welfare_exact(game);
  CHECK(best.welfare == Approx(100.0).epsilon(1e-12));
  CHECK(best.profile == StrategyProfile{0, 1});  // lexicographically first
  CHECK(best.evaluations == 4);
}

TEST_CASE("exact maximum: single player, single action") {
  const GameInstance game = make_game({{{0.3, 0.4}}}, 0.2, 1);
  CHECK(max_welfare_exact(game).profile == StrategyProfile{0});
}

TEST_CASE("exact search respects its budget") {
  const GameInstance game = instances::gen_dataset1(5, 100, 0.1, 2, 1);
  CHECK_THROWS_AS(max_welfare_exact(game, 100), BudgetExceeded);
  CHECK_THROWS_AS(UtilityTable(game, 100), BudgetExceeded);
}

TEST_CASE("annealing and best-response search on small instances") {
  int sa_hits = 0;
  int brs_hits = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const GameInstance game = instances::gen_dataset1(4, 100, 0.1, 2, 100 + seed);
    const double exact = max_welfare_exact(game).welfare;
    const auto sa = max_welfare_sa(game, {5000, 0.1, static_cast<std::uint64_t>(seed)});
    const auto brs = max_welfare_brs(game, {0, 5, static_cast<std::uint64_t>(seed)});
    CHECK(sa.welfare <= exact + 1e-9);
    CHECK(brs.welfare <= exact + 1e-9);
    sa_hits += std::abs(sa.welfare - exact) <= 1e-9;
    brs_hits += std::abs(brs.welfare - exact) <= 1e-9;
  }
  CHECK(sa_hits >= 9);
  CHECK(brs_hits >= 9);
}

TEST_CASE("best-response search: single player and monotone path") {
  const GameInstance one = make_game({{{0.1}, {0.9}, {0.5}}}, 0.3, 1);
  CHECK(best_response_run(one, 1, 4).result.profile == StrategyProfile{1});
  Rng rng(8);
  const GameInstance game = random_game(rng, 4, 4, 6, 0.2, 2);
  const auto run = best_response_run(game, 40, 9);
  for (std::size_t t = 1; t < run.welfare_path.size(); ++t) {
    CHECK(run.welfare_path[t] >= run.welfare_path[t - 1]);
  }
}

TEST_CASE("annealing acceptance probability of a worse move") {
  CHECK(std::exp(-0.1 / 0.1) == Approx(0.3679).epsilon(1e-4));
}

TEST_CASE("pure NE checks") {
  const GameInstance two = instances::gen_dataset1(2, 100, 0.1, 1, 0);
  const NeCheck crowded = verify_pure_ne(two, {0, 0});
  CHECK_FALSE(crowded.is_ne);
  CHECK(crowded.max_gap == Approx(25.0).epsilon(1e-12));  // m/4
  CHECK(verify_pure_ne(two, {0, 1}).is_ne);

  const GameInstance lb_game = instances::gen_lower_bound_instance(4, 2, 0.2);
  CHECK(verify_pure_ne(lb_game, StrategyProfile(4, 0)).is_ne);

  const auto gap = instances::gen_exposure_gap_instance(3, 2, 0.1);
  CHECK(verify_pure_ne(gap.game, {1, 0, 0}).is_ne);
}

TEST_CASE("PoA on the two-cluster instance") {
  const GameInstance base = instances::gen_dataset1(2, 100, 0.1, 1, 0);
  const SolveReport k1 = poa(base);
  CHECK(k1.numerator_exact);
  CHECK(k1.worst_cce.welfare == Approx(75.0).epsilon(1e-9));
  CHECK(std::abs(k1.poa - 1.33) <= 0.02);
  CHECK(std::abs(poa(base.with_beta_k(0.1, 2)).poa - 1.28) <= 0.02);
  CHECK(std::abs(poa(base.with_beta_k(0.5, 2)).poa - 1.11) <= 0.02);
}

TEST_CASE("single-player PoA is one") {
  const GameInstance game = make_game({{{0.2, 0.9}, {0.7, 0.6}, {0.1, 0.1}}}, 0.3, 1);
  const SolveReport r = poa(game);
  CHECK(r.poa == Approx(1.0).epsilon(1e-9));
  double best_u = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    best_u = std::max(best_u, creator_utilities(game, StrategyProfile{a})[0]);
  }
  CHECK(r.worst_cce.welfare == Approx(best_u).epsilon(1e-9));
}

TEST_CASE("LP: NE point masses are feasible and bound the worst CCE") {
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng.below(3);
    const int k = 1 + static_cast<int>(rng.below(3));
    const double beta = 0.05 + rng.uniform();
    const GameInstance game = random_game(rng, n, 3, 2 + rng.below(5), beta, k,
                                          trial % 3 == 0);
    const UtilityTable table(game);
    const CceResult cce = worst_cce_welfare(table);
    CHECK(cce_violation(table, cce.distribution) <= 1e-7);
    CHECK(cce.duality_gap <= 1e-7 * std::max(1.0, cce.welfare));
    const double total = std::accumulate(cce.distribution.begin(),
                                         cce.distribution.end(), 0.0);
    CHECK(total == Approx(1.0).epsilon(1e-9));
    const WelfareOptimum best = max_welfare_exact(table);
    const double ratio = best.welfare / cce.welfare;
    CHECK(ratio >= 1.0 - 1e-9);
    CHECK(ratio < bounds::poa_upper(beta, k));
    for (std::size_t idx = 0; idx < table.space().size(); ++idx) {
      const StrategyProfile s = table.space().decode(idx);
      if (!verify_pure_ne(game, s).is_ne) continue;
      ++checked;
      std::vector<double> point(table.space().size(), 0.0);
      point[idx] = 1.0;
      CHECK(cce_violation(table, point) <= 1e-9);
      CHECK(cce.welfare <= table.welfare(idx) + 1e-7);
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("a supplied NE that is not an NE trips the pre-check") {
  const GameInstance two = instances::gen_dataset1(2, 100, 0.1, 1, 0);
  const UtilityTable table(two);
  CceOptions opt;
  opt.known_ne = StrategyProfile{0, 0};
  CHECK_THROWS_AS(worst_cce_welfare(table, opt), SolverError);
}

TEST_CASE("report serialization") {
  const GameInstance base = instances::gen_dataset1(2, 100, 0.1, 1, 0);
  const SolveReport r = poa(base);
  const auto doc = to_json(r);
  CHECK(doc["poa"].get<double>() == Approx(r.poa));
  CHECK(doc["lp_status"] == "optimal");
  const std::string csv = distribution_csv(r.space, r.worst_cce.distribution, 1e-12);
  CHECK(csv.rfind("index,profile,probability\n", 0) == 0);
}
