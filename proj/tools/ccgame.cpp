// ccgame: command-line front end.
//
//   ccgame gen        --config spec.json [--seed N] [--out instance.json]
//   ccgame solve      (--instance F | --config spec.json) [--out DIR] [--workers N]
//   ccgame dynamics   (--instance F | --config spec.json) [--seed N] [--out DIR]
//   ccgame bounds     [--beta B ...] [--k K ...] [--n N] [--regret-rate R] [--pivot]
//   ccgame verify     [--seed N] [--quick] [--out DIR]
//   ccgame experiment --config exp.json [--seed N] [--out DIR] [--workers N]
//
// Exit status: 0 success, 1 invalid input, 2 budget exceeded, 3 verification
// failure (including solver failures).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccgame/bounds.hpp"
#include "ccgame/dynamics.hpp"
#include "ccgame/equilibrium.hpp"
#include "ccgame/error.hpp"
#include "ccgame/experiment.hpp"
#include "ccgame/instances.hpp"
#include "ccgame/serialization.hpp"
#include "ccgame/verification.hpp"

namespace {

using namespace ccgame;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitBudget = 2;
constexpr int kExitVerification = 3;

struct VerificationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstanceSource {
  std::string instance_path;
  std::string config_path;
  std::optional<std::uint64_t> seed;

  GameInstance load() const {
    if (!instance_path.empty()) return load_instance(instance_path);
    if (config_path.empty()) throw InvalidInput("need --instance or --config");
    auto spec = instances::spec_from_json(read_json_file(config_path));
    if (seed) spec.seed = *seed;
    auto built = instances::build(spec);
    for (const auto& w : built.warnings) std::cerr << "warning: " << w << "\n";
    return std::move(built.game);
  }
};

void add_source(CLI::App* cmd, InstanceSource& src) {
  cmd->add_option("--instance", src.instance_path, "Instance JSON file");
  cmd->add_option("--config", src.config_path, "Instance spec JSON (generated on the fly)");
  cmd->add_option("--seed", src.seed, "Seed override for the generator");
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

int cmd_gen(const InstanceSource& src, const std::string& out) {
  if (src.config_path.empty()) throw InvalidInput("gen needs --config");
  emit(out, instance_to_json(src.load()).dump(1) + "\n");
  return kExitOk;
}

int cmd_solve(const InstanceSource& src, const std::string& out, unsigned workers,
              std::size_t exact_budget, std::size_t lp_budget) {
  const GameInstance game = src.load();
  PoaOptions opts;
  opts.workers = workers;
  opts.exact_budget = exact_budget;
  opts.lp_budget = lp_budget;
  const SolveReport rep = poa(game, opts);
  const std::string doc = to_json(rep).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    const std::filesystem::path dir(out);
    write_text_file(dir / "solve.json", doc);
    write_text_file(dir / "cce.csv",
                    distribution_csv(rep.space, rep.worst_cce.distribution, 1e-12));
  }
  return kExitOk;
}

int cmd_dynamics(const InstanceSource& src, const std::string& out, Exp3Config cfg,
                 bool regret, bool with_max) {
  const GameInstance game = src.load();
  if (src.seed) cfg.seed = *src.seed;
  DynamicsOptions dopts;
  dopts.snapshot_interval = 0;
  const DynamicsTrace trace = run_dynamics(game, cfg, dopts);
  DynamicsSummary summary;
  summary.average_welfare = trace.average_welfare();
  summary.histogram = action_histogram(trace, game, HistogramKey::kTag);
  if (regret) summary.regrets = estimate_regrets(trace, game);
  if (with_max) {
    summary.max_welfare = max_welfare(game).welfare;
    summary.pota = pota(trace, *summary.max_welfare);
  }
  const std::string doc = to_json(summary, trace).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    const std::filesystem::path dir(out);
    write_text_file(dir / "dynamics.json", doc);
    write_text_file(dir / "trace.csv", trace_csv(trace));
  }
  return kExitOk;
}

std::string fixed(double v, const char* spec = "%.6f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int cmd_bounds(std::vector<double> betas, std::vector<int> ks, std::optional<int> n,
               std::optional<double> rate, bool pivot, const std::string& out) {
  if (betas.empty()) betas = {0.1, 0.5};
  if (ks.empty()) ks = {1, 2, 3, 4, 5, 6, 7};
  std::string text;
  if (pivot) {
    // The theoretical-bound columns: one row per K, one column per beta.
    text = "k";
    for (double b : betas) text += ",beta=" + fixed(b, "%g");
    text += "\n";
    for (int k : ks) {
      text += std::to_string(k);
      for (double b : betas) text += "," + fixed(bounds::poa_upper(b, k), "%.2f");
      text += "\n";
    }
  } else {
    text = "beta,k,c,poa_upper,poa_upper_asymptotic,poa_lower,dynamic_upper,"
           "welfare_loss_factor\n";
    for (double b : betas)
      for (int k : ks) {
        const auto r = bounds::report(b, k, n, rate);
        if (n && !bounds::lower_bound_hypothesis_holds(*n, b, k)) {
          std::fprintf(stderr,
                       "warning: lower-bound construction needs n > 2, K < n, beta <= 1 "
                       "and 5 beta log K <= 1; not met for n=%d beta=%g K=%d\n",
                       *n, b, k);
        }
        text += fixed(b, "%g") + "," + std::to_string(k) + "," + fixed(r.c) + "," +
                fixed(r.poa_upper) + "," +
                (k >= 2 ? fixed(r.poa_upper_asymptotic) : std::string("inf")) + "," +
                (r.poa_lower ? fixed(*r.poa_lower) : "") + "," +
                (r.dynamic_upper ? fixed(*r.dynamic_upper) : "") + "," +
                fixed(r.welfare_loss_factor) + "\n";
      }
  }
  emit(out, text);
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, bool quick, const std::string& out) {
  VerificationOptions v;
  v.seed = seed;
  if (quick) {
    v.oracle_cases = 10;
    v.oracle_samples = 200'000;
    v.property_instances = 50;
    v.lp_instances = 10;
  }
  const auto checks = run_verification(v);
  std::size_t failed = 0;
  std::string csv = "check,passed,cases,violations,detail\n";
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    csv += c.name + "," + (c.passed ? "1" : "0") + "," + std::to_string(c.cases) + "," +
           std::to_string(c.violations) + ",\"" + c.detail + "\"\n";
    failed += c.passed ? 0 : 1;
  }
  if (!out.empty()) write_text_file(std::filesystem::path(out) / "verify.csv", csv);
  if (failed > 0) throw VerificationFailed(std::to_string(failed) + " check(s) failed");
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, std::optional<std::uint64_t> seed,
                   const std::string& out, std::optional<unsigned> workers) {
  ExperimentConfig cfg = config_from_json(read_json_file(config_path));
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  if (workers) cfg.workers = *workers;
  const ExperimentResult result = run_experiment(cfg);
  write_outputs(cfg, result);
  std::size_t errors = 0;
  for (const auto& r : result.rows) errors += r.error.empty() ? 0 : 1;
  std::cerr << cfg.id << ": " << result.rows.size() << " rows, " << errors
            << " with errors, written to " << cfg.output_dir.string() << "\n";
  for (const auto& [name, csv] : result.tables) std::cout << name << "\n" << csv;
  if (result.failed_checks > 0) {
    throw VerificationFailed(std::to_string(result.failed_checks) + " check(s) failed");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competing content creation game toolkit"};
  app.require_subcommand(1);

  InstanceSource src;
  std::string out;
  unsigned workers = 1;

  auto* gen = app.add_subcommand("gen", "Generate an instance from a spec");
  add_source(gen, src);
  gen->add_option("--out", out, "Output file (default stdout)");

  std::size_t exact_budget = kDefaultEnumerationBudget;
  std::size_t lp_budget = kDefaultLpBudget;
  auto* solve = app.add_subcommand("solve", "Max welfare, worst CCE and PoA");
  add_source(solve, src);
  solve->add_option("--out", out, "Output directory");
  solve->add_option("--workers", workers, "Threads for the utility table");
  solve->add_option("--exact-budget", exact_budget, "Max profiles for enumeration");
  solve->add_option("--lp-budget", lp_budget, "Max profiles for the CCE LP");

  Exp3Config exp3;
  bool regret = false;
  bool with_max = false;
  auto* dyn = app.add_subcommand("dynamics", "Run Exp3 for every creator");
  add_source(dyn, src);
  dyn->add_option("--out", out, "Output directory");
  dyn->add_option("--eta", exp3.eta, "Learning rate");
  dyn->add_option("--epsilon", exp3.epsilon, "Exploration rate");
  dyn->add_option("--horizon", exp3.horizon, "Rounds");
  dyn->add_flag("--regret", regret, "Estimate per-player regret");
  dyn->add_flag("--pota", with_max, "Compute max welfare and PotA");

  std::vector<double> betas;
  std::vector<int> ks;
  std::optional<int> bound_n;
  std::optional<double> rate;
  bool pivot = false;
  auto* bnd = app.add_subcommand("bounds", "Closed-form bound table");
  bnd->add_option("--beta", betas, "Noise scales (default 0.1 0.5)");
  bnd->add_option("--k", ks, "Slate sizes (default 1..7)");
  bnd->add_option("--n", bound_n, "Players, for the lower and dynamic bounds");
  bnd->add_option("--regret-rate", rate, "R/T for the dynamic bound");
  bnd->add_flag("--pivot", pivot, "K x beta matrix of 1 + 1/c, 2 decimals");
  bnd->add_option("--out", out, "Output file (default stdout)");

  std::uint64_t verify_seed = 1;
  bool quick = false;
  auto* ver = app.add_subcommand("verify", "Oracle and property self-checks");
  ver->add_option("--seed", verify_seed, "Master seed");
  ver->add_flag("--quick", quick, "Smaller sample sizes");
  ver->add_option("--out", out, "Directory for verify.csv");

  std::string exp_config;
  std::optional<std::uint64_t> exp_seed;
  std::optional<unsigned> exp_workers;
  auto* exp = app.add_subcommand("experiment", "Run an experiment config");
  exp->add_option("--config", exp_config, "Experiment JSON")->required();
  exp->add_option("--seed", exp_seed, "Master seed override");
  exp->add_option("--out", out, "Output directory override");
  exp->add_option("--workers", exp_workers, "Parallel tasks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (gen->parsed()) return cmd_gen(src, out);
    if (solve->parsed()) return cmd_solve(src, out, workers, exact_budget, lp_budget);
    if (dyn->parsed()) return cmd_dynamics(src, out, exp3, regret, with_max);
    if (bnd->parsed()) return cmd_bounds(betas, ks, bound_n, rate, pivot, out);
    if (ver->parsed()) return cmd_verify(verify_seed, quick, out);
    if (exp->parsed()) return cmd_experiment(exp_config, exp_seed, out, exp_workers);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitVerification;
  } catch (const VerificationFailed& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
