// Python bindings. Structured results cross the boundary as JSON text and
// are decoded in ccgame/__init__.py; tables and profiles use plain lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccgame/bounds.hpp"
#include "ccgame/dynamics.hpp"
#include "ccgame/equilibrium.hpp"
#include "ccgame/error.hpp"
#include "ccgame/experiment.hpp"
#include "ccgame/game.hpp"
#include "ccgame/instances.hpp"
#include "ccgame/serialization.hpp"
#include "ccgame/verification.hpp"

namespace py = pybind11;
using namespace ccgame;

namespace {

std::string solve_json(const GameInstance& game, std::size_t exact_budget,
                       std::size_t lp_budget) {
  PoaOptions o;
  o.exact_budget = exact_budget;
  o.lp_budget = lp_budget;
  const SolveReport rep = poa(game, o);
  nlohmann::json doc = to_json(rep);
  doc["distribution"] = rep.worst_cce.distribution;
  return doc.dump();
}

std::string dynamics_json(const GameInstance& game, double eta, double epsilon,
                          std::size_t horizon, std::uint64_t seed, bool regret) {
  Exp3Config cfg;
  cfg.eta = eta;
  cfg.epsilon = epsilon;
  cfg.horizon = horizon;
  cfg.seed = seed;
  DynamicsOptions opts;
  opts.snapshot_interval = 0;
  const DynamicsTrace trace = run_dynamics(game, cfg, opts);
  DynamicsSummary summary;
  summary.average_welfare = trace.average_welfare();
  if (regret) summary.regrets = estimate_regrets(trace, game);
  nlohmann::json doc = to_json(summary, trace);
  doc["welfare"] = trace.welfare;
  doc["actions"] = trace.actions;
  return doc.dump();
}

py::tuple utility_table(const GameInstance& game, std::size_t budget) {
  const UtilityTable table(game, budget);
  const std::size_t size = table.space().size();
  std::vector<double> w(table.welfare_values().begin(), table.welfare_values().end());
  std::vector<std::vector<double>> u(size, std::vector<double>(table.num_players()));
  for (std::size_t idx = 0; idx < size; ++idx)
    for (std::size_t i = 0; i < table.num_players(); ++i) u[idx][i] = table.utility(idx, i);
  std::vector<std::size_t> radices;
  for (std::size_t i = 0; i < table.num_players(); ++i) radices.push_back(table.space().radix(i));
  return py::make_tuple(radices, w, u);
}

std::pair<std::string, std::string> experiment(const std::string& config_json) {
  const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
  const ExperimentResult res = run_experiment(cfg);
  return {rows_csv(res.rows), summary_csv(res.summary, cfg.aggregation)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Competing content creation game: closed forms, equilibria, dynamics";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<GameInstance>(m, "GameInstance")
      .def_property_readonly("num_users", &GameInstance::num_users)
      .def_property_readonly("num_players", &GameInstance::num_players)
      .def_property_readonly("beta", &GameInstance::beta)
      .def_property_readonly("k", &GameInstance::k_slate)
      .def_property_readonly("metric",
                             [](const GameInstance& g) { return std::string(to_string(g.metric())); })
      .def_property_readonly("total_weight", &GameInstance::total_weight)
      .def("num_actions", &GameInstance::num_actions)
      .def("with_metric", [](const GameInstance& g, const std::string& name) {
        return g.with_metric(metric_from_string(name));
      })
      .def("to_json", [](const GameInstance& g) { return instance_to_json(g).dump(); });

  m.def("instance_from_json", [](const std::string& text) {
    return instance_from_json(nlohmann::json::parse(text));
  });

  py::enum_<instances::ClusterSampler>(m, "ClusterSampler")
      .value("COMPOSITION", instances::ClusterSampler::kComposition)
      .value("PER_USER", instances::ClusterSampler::kPerUser);

  m.def("gen_dataset1", &instances::gen_dataset1, py::arg("n"), py::arg("m"),
        py::arg("beta"), py::arg("k"), py::arg("seed"),
        py::arg("sampler") = instances::ClusterSampler::kComposition);
  m.def("gen_dataset2", &instances::gen_dataset2, py::arg("n"), py::arg("m"),
        py::arg("delta"), py::arg("beta"), py::arg("k"), py::arg("seed"),
        py::arg("sampler") = instances::ClusterSampler::kComposition);
  m.def("gen_lower_bound_instance", &instances::gen_lower_bound_instance, py::arg("n"), py::arg("k"),
        py::arg("beta"));
  m.def(
      "gen_exposure_gap_instance",
      [](int n, int k, double beta, std::optional<double> delta) {
        auto p = instances::gen_exposure_gap_instance(n, k, beta, delta);
        return py::make_tuple(p.game, p.delta, p.guarantee_holds);
      },
      py::arg("n"), py::arg("k"), py::arg("beta"), py::arg("delta") = py::none());

  m.def("welfare", py::overload_cast<const GameInstance&, const StrategyProfile&>(&welfare));
  m.def("creator_utilities",
        py::overload_cast<const GameInstance&, const StrategyProfile&>(&creator_utilities));
  m.def("choice_probabilities", [](const GameInstance& g, const StrategyProfile& s) {
    return evaluate(g, s).choice_probs;
  });
  m.def("verify_pure_ne", [](const GameInstance& g, const StrategyProfile& s, double tol) {
    const NeCheck c = verify_pure_ne(g, s, tol);
    return py::make_tuple(c.is_ne, c.max_gap);
  }, py::arg("game"), py::arg("profile"), py::arg("tol") = 1e-9);

  m.def("utility_table", &utility_table, py::arg("game"),
        py::arg("budget") = kDefaultLpBudget);
  m.def("_solve_json", &solve_json, py::arg("game"),
        py::arg("exact_budget") = kDefaultEnumerationBudget,
        py::arg("lp_budget") = kDefaultLpBudget);
  m.def("_dynamics_json", &dynamics_json, py::arg("game"), py::arg("eta") = 0.1,
        py::arg("epsilon") = 0.1, py::arg("horizon") = 5000, py::arg("seed") = 0,
        py::arg("regret") = false);
  m.def("_experiment_csv", &experiment);

  m.def("c_beta_k", &bounds::c_beta_k);
  m.def("poa_upper", &bounds::poa_upper);
  m.def("poa_lower", &bounds::poa_lower);
  m.def("dynamic_poa_bound", &bounds::dynamic_poa_bound);
  m.def("welfare_loss_factor", &bounds::welfare_loss_factor);
}
