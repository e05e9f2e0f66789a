#include "ccgame/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "ccgame/bounds.hpp"
#include "ccgame/equilibrium.hpp"
#include "ccgame/error.hpp"
#include "ccgame/rng.hpp"
#include "ccgame/serialization.hpp"
#include "ccgame/verification.hpp"

namespace ccgame {

namespace {

using nlohmann::json;

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::kPoaTable, "poa_table"},
    {ExperimentKind::kPotaTable, "pota_table"},
    {ExperimentKind::kMetricComparison, "metric_comparison"},
    {ExperimentKind::kExplorationSweep, "exploration_sweep"},
    {ExperimentKind::kHistogram, "histogram"},
    {ExperimentKind::kBoundsTable, "bounds_table"},
    {ExperimentKind::kVerify, "verify"},
};

constexpr std::pair<Aggregation, std::string_view> kAggregationNames[] = {
    {Aggregation::kWorst, "worst"},
    {Aggregation::kMean, "mean"},
    {Aggregation::kMeanWithRange, "mean_with_range"},
};

// Salt separating algorithm seeds from instance seeds.
constexpr std::uint64_t kAlgorithmSalt = 0x5eed'a160'0000'0001ULL;

std::string fmt(const char* spec, double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string full(double v) { return fmt("%.17g", v); }
std::string label(double v) { return fmt("%g", v); }

std::uint64_t double_bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <class T>
std::vector<T> read_list(const json& grid, const char* key, std::vector<T> fallback) {
  if (!grid.contains(key)) return fallback;
  const json& v = grid[key];
  std::vector<T> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<T>());
  } else {
    out.push_back(v.get<T>());
  }
  if (out.empty()) throw InvalidInput(std::string("grid axis '") + key + "' is empty");
  return out;
}

bool uses_delta(const ExperimentConfig& c) {
  return c.family == instances::Family::kDataset2;
}

bool uses_epsilon(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::kPotaTable:
    case ExperimentKind::kMetricComparison:
    case ExperimentKind::kExplorationSweep:
    case ExperimentKind::kHistogram:
      return true;
    default:
      return false;
  }
}

struct Cell {
  std::size_t index = 0;
  int n = 0;
  int k = 0;
  double beta = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  Metric metric = Metric::kEngagement;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& c) {
  std::vector<Cell> cells;
  if (c.kind == ExperimentKind::kVerify) {
    cells.push_back(Cell{});
    return cells;
  }
  const bool skip = c.skip_k_above_n && c.kind != ExperimentKind::kBoundsTable;
  for (double beta : c.grid.beta)
    for (int k : c.grid.k)
      for (int n : c.grid.n)
        for (double delta : c.grid.delta)
          for (double eps : c.grid.epsilon)
            for (Metric metric : c.grid.metric) {
              if (skip && k > n) continue;
              cells.push_back(Cell{cells.size(), n, k, beta, delta, eps, metric});
            }
  return cells;
}

std::uint64_t instance_seed(const ExperimentConfig& c, const Cell& cell,
                            std::size_t trial) {
  // Independent of beta, K, epsilon and metric so that those axes compare
  // the same sampled instances.
  std::uint64_t key = mix64(static_cast<std::uint64_t>(c.family) + 1);
  key = mix64(key ^ static_cast<std::uint64_t>(c.cluster_sampler));
  key = mix64(key ^ static_cast<std::uint64_t>(cell.n));
  key = mix64(key ^ static_cast<std::uint64_t>(c.m));
  if (uses_delta(c)) key = mix64(key ^ double_bits(cell.delta));
  return derive_seed(c.seed, key, trial);
}

std::uint64_t algorithm_seed(const ExperimentConfig& c, const Cell& cell,
                             std::size_t trial) {
  return derive_seed(c.seed ^ kAlgorithmSalt, cell.index, trial);
}

GameInstance build_instance(const ExperimentConfig& c, const Cell& cell,
                            std::uint64_t seed) {
  instances::InstanceSpec spec;
  spec.family = c.family;
  spec.n = cell.n;
  spec.m = c.m;
  spec.beta = cell.beta;
  spec.k = cell.k;
  spec.metric = cell.metric;
  spec.delta = cell.delta;
  spec.cluster_sampler = c.cluster_sampler;
  spec.embedding = c.embedding;
  spec.seed = seed;
  return instances::build(spec).game;
}

PoaOptions poa_options(const ExperimentConfig& c, std::uint64_t seed) {
  PoaOptions o;
  o.exact_budget = c.exact_budget;
  o.lp_budget = c.lp_budget;
  o.annealing.seed = derive_seed(seed, 1);
  o.best_response.seed = derive_seed(seed, 2);
  return o;
}

class TaskRunner {
 public:
  TaskRunner(const ExperimentConfig& config, const Cell& cell, std::size_t trial)
      : c_(config), cell_(cell), trial_(trial) {
    base_.experiment_id = c_.id;
    base_.family = std::string(instances::to_string(c_.family));
    base_.cell = cell.index;
    base_.n = cell.n;
    base_.k = cell.k;
    base_.beta = cell.beta;
    if (uses_delta(c_)) base_.delta = cell.delta;
    if (uses_epsilon(c_)) base_.epsilon = cell.epsilon;
    base_.metric = std::string(to_string(cell.metric));
    base_.trial = trial;
  }

  std::vector<ResultRow> run() {
    try {
      switch (c_.kind) {
        case ExperimentKind::kPoaTable:
          run_poa();
          break;
        case ExperimentKind::kPotaTable:
        case ExperimentKind::kMetricComparison:
        case ExperimentKind::kExplorationSweep:
        case ExperimentKind::kHistogram:
          run_dynamics_task();
          break;
        case ExperimentKind::kBoundsTable:
          run_bounds();
          break;
        case ExperimentKind::kVerify:
          run_verify();
          break;
      }
    } catch (const std::exception& ex) {
      const char* tag = dynamic_cast<const BudgetExceeded*>(&ex) ? "budget_exceeded"
                        : dynamic_cast<const SolverError*>(&ex) ? "solver_error"
                        : dynamic_cast<const InvalidInput*>(&ex) ? "invalid_input"
                                                                 : "error";
      rows_.clear();
      ResultRow r = base_;
      r.quantity = "error";
      r.value = std::nan("");
      r.error = std::string(tag) + ": " + ex.what();
      rows_.push_back(std::move(r));
    }
    return std::move(rows_);
  }

 private:
  void emit(std::string quantity, double value, std::string methods = "",
            std::string error = "") {
    ResultRow r = base_;
    r.quantity = std::move(quantity);
    r.value = value;
    r.methods = std::move(methods);
    r.error = std::move(error);
    rows_.push_back(std::move(r));
  }

  bool engagement_bound_applies() const {
    return cell_.metric == Metric::kEngagement;
  }

  void run_poa() {
    const std::uint64_t iseed = instance_seed(c_, cell_, trial_);
    base_.seed = iseed;
    const GameInstance game = build_instance(c_, cell_, iseed);
    const SolveReport rep = poa(game, poa_options(c_, algorithm_seed(c_, cell_, trial_)));
    const std::string methods = rep.max.method + "+cce_lp";
    emit("poa", rep.poa, methods);
    emit("max_welfare", rep.max.welfare, rep.max.method);
    emit("worst_cce_welfare", rep.worst_cce.welfare, "cce_lp");
    if (engagement_bound_applies()) {
      emit("poa_bound", bounds::poa_upper(cell_.beta, cell_.k), "closed_form");
    }
  }

  void run_dynamics_task() {
    const std::uint64_t iseed = instance_seed(c_, cell_, trial_);
    const std::uint64_t aseed = algorithm_seed(c_, cell_, trial_);
    base_.seed = iseed;
    const GameInstance game = build_instance(c_, cell_, iseed);

    Exp3Config exp3 = c_.exp3;
    exp3.epsilon = cell_.epsilon;
    exp3.seed = aseed;
    DynamicsOptions dopts;
    dopts.replications = c_.replications;
    dopts.snapshot_interval = 0;
    const DynamicsTrace trace = run_dynamics(game, exp3, dopts);
    const double avg = trace.average_welfare();
    emit("average_welfare", avg, "exp3");
    emit("normalized_welfare", avg / game.total_weight(), "exp3");

    if (c_.kind == ExperimentKind::kHistogram) {
      for (const auto& [tag, share] :
           action_histogram(trace, game, HistogramKey::kTag)) {
        emit("share:" + tag, share, "exp3");
      }
      return;
    }

    const WelfareOptimum opt = max_welfare(game, poa_options(c_, aseed));
    const double ratio = pota(trace, opt.welfare);
    emit("max_welfare", opt.welfare, opt.method);
    emit("pota", ratio, opt.method + "+exp3");
    if (engagement_bound_applies()) {
      emit("poa_bound", bounds::poa_upper(cell_.beta, cell_.k), "closed_form");
    }
    if (!c_.estimate_regret) return;

    const std::vector<double> regrets = estimate_regrets(trace, game);
    const double rate =
        *std::max_element(regrets.begin(), regrets.end()) /
        static_cast<double>(trace.rounds);
    emit("max_regret_rate", rate, "exp3");
    // The bound divides by a per-unit-weight floor on W, so the regret rate
    // enters per unit of user weight.
    const double unit_rate = rate / game.total_weight();
    emit("regret_rate_per_weight", unit_rate, "exp3");
    if (engagement_bound_applies() && cell_.k >= 2 && cell_.beta > 0.0) {
      // Regret can be negative over a finite run; the bound is stated for
      // a nonnegative regret rate.
      const double bound = bounds::dynamic_poa_bound(cell_.n, cell_.beta, cell_.k,
                                                     std::max(unit_rate, 0.0));
      emit("dynamic_bound", bound, "closed_form");
      emit("dynamic_bound_holds", ratio <= bound ? 1.0 : 0.0, "closed_form");
    }
  }

  void run_bounds() {
    base_.seed = 0;
    const auto rep = bounds::report(cell_.beta, cell_.k,
                                    cell_.n > 2 ? std::optional<int>(cell_.n)
                                                : std::nullopt);
    emit("c", rep.c, "closed_form");
    emit("poa_upper", rep.poa_upper, "closed_form");
    if (cell_.k >= 2) emit("poa_upper_asymptotic", rep.poa_upper_asymptotic, "closed_form");
    emit("welfare_loss_factor", rep.welfare_loss_factor, "closed_form");
    if (rep.poa_lower && bounds::lower_bound_hypothesis_holds(cell_.n, cell_.beta, cell_.k)) {
      emit("poa_lower", *rep.poa_lower, "closed_form");
    }
  }

  void run_verify() {
    VerificationOptions v = c_.verification;
    v.seed = derive_seed(c_.seed, trial_);
    base_.seed = v.seed;
    base_.family = "mixed";
    for (const CheckResult& check : run_verification(v)) {
      emit(check.name, check.passed ? 1.0 : 0.0, check.detail,
           check.passed ? "" : "verification_failed: " + check.detail);
    }
  }

  const ExperimentConfig& c_;
  Cell cell_;
  std::size_t trial_;
  ResultRow base_;
  std::vector<ResultRow> rows_;
};

bool higher_is_worse(const std::string& quantity) {
  return quantity == "poa" || quantity == "pota" || quantity == "max_regret_rate" ||
         quantity == "regret_rate_per_weight" || quantity == "dynamic_bound";
}

std::string axis_label(const ResultRow& r, const std::string& axis) {
  if (axis == "n") return std::to_string(r.n);
  if (axis == "k") return std::to_string(r.k);
  if (axis == "beta") return label(r.beta);
  if (axis == "delta") return r.delta ? label(*r.delta) : "";
  if (axis == "epsilon") return r.epsilon ? label(*r.epsilon) : "";
  if (axis == "metric") return r.metric;
  if (axis == "quantity") return r.quantity;
  throw InvalidInput("unknown pivot axis '" + axis + "'");
}

constexpr const char* kAxes[] = {"beta", "k", "n", "delta", "epsilon", "metric"};

// Orders labels numerically when all parse as numbers, otherwise keeps first
// appearance.
std::vector<std::string> ordered_labels(std::vector<std::string> labels) {
  std::vector<std::string> unique;
  for (auto& l : labels) {
    if (std::find(unique.begin(), unique.end(), l) == unique.end()) unique.push_back(l);
  }
  const bool numeric = std::all_of(unique.begin(), unique.end(), [](const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return *end == '\0';
  });
  if (numeric) {
    std::stable_sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) {
      return std::strtod(a.c_str(), nullptr) < std::strtod(b.c_str(), nullptr);
    });
  }
  return unique;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view to_string(Aggregation aggregation) {
  for (const auto& [a, name] : kAggregationNames) {
    if (a == aggregation) return name;
  }
  return "unknown";
}

PivotSpec default_pivot(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kPoaTable:
      return {"k", "n", "poa"};
    case ExperimentKind::kPotaTable:
      return {"k", "n", "pota"};
    case ExperimentKind::kMetricComparison:
      return {"delta", "n", "pota"};
    case ExperimentKind::kExplorationSweep:
      return {"n", "epsilon", "average_welfare"};
    case ExperimentKind::kHistogram:
      return {"quantity", "n", ""};
    case ExperimentKind::kBoundsTable:
      return {"k", "beta", "poa_upper"};
    case ExperimentKind::kVerify:
      return {"quantity", "", ""};
  }
  return {"k", "n", "poa"};
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  try {
    c.id = doc.value("id", c.id);
    const std::string kind = doc.at("kind").get<std::string>();
    bool found = false;
    for (const auto& [k, name] : kKindNames) {
      if (name == kind) {
        c.kind = k;
        found = true;
      }
    }
    if (!found) throw InvalidInput("unknown experiment kind '" + kind + "'");

    c.family = instances::family_from_string(doc.value("family", std::string("dataset1")));
    c.m = doc.value("m", c.m);
    c.cluster_sampler = instances::cluster_sampler_from_string(
        doc.value("cluster_sampler", std::string("composition")));
    c.seed = doc.value("seed", c.seed);
    c.trials = doc.value("trials", c.trials);
    if (c.kind == ExperimentKind::kBoundsTable) c.trials = 1;
    if (c.kind == ExperimentKind::kMetricComparison) c.aggregation = Aggregation::kMeanWithRange;
    if (doc.contains("aggregation")) {
      const std::string agg = doc["aggregation"].get<std::string>();
      found = false;
      for (const auto& [a, name] : kAggregationNames) {
        if (name == agg) {
          c.aggregation = a;
          found = true;
        }
      }
      if (!found) throw InvalidInput("unknown aggregation '" + agg + "'");
    }
    c.skip_k_above_n = doc.value("skip_k_above_n", c.skip_k_above_n);
    c.workers = doc.value("workers", c.workers);
    c.output_dir = doc.value("output_dir", c.output_dir.string());

    const json grid = doc.value("grid", json::object());
    c.grid.n = read_list<int>(grid, "n", c.grid.n);
    c.grid.k = read_list<int>(grid, "k", c.grid.k);
    c.grid.beta = read_list<double>(grid, "beta", c.grid.beta);
    c.grid.delta = read_list<double>(grid, "delta", c.grid.delta);
    c.grid.epsilon = read_list<double>(grid, "epsilon", c.grid.epsilon);
    c.grid.metric.clear();
    for (const auto& name : read_list<std::string>(grid, "metric", {"engagement"})) {
      c.grid.metric.push_back(metric_from_string(name));
    }

    if (doc.contains("exp3")) {
      const json& e = doc["exp3"];
      c.exp3.eta = e.value("eta", c.exp3.eta);
      c.exp3.horizon = e.value("horizon", c.exp3.horizon);
      c.exp3.reward_scale = e.value("reward_scale", c.exp3.reward_scale);
      c.replications = e.value("replications", c.replications);
    }
    c.estimate_regret = doc.value("estimate_regret", c.estimate_regret);
    if (doc.contains("budgets")) {
      const json& b = doc["budgets"];
      c.exact_budget = b.value("exact", c.exact_budget);
      c.lp_budget = b.value("lp", c.lp_budget);
    }
    if (doc.contains("embedding")) {
      const json& e = doc["embedding"];
      c.embedding.user_file = e.at("user_file").get<std::string>();
      c.embedding.item_file = e.at("item_file").get<std::string>();
      if (e.contains("item_tags_file")) {
        c.embedding.item_tags_file = e["item_tags_file"].get<std::string>();
      }
      c.embedding.actions_per_player =
          e.value("actions_per_player", c.embedding.actions_per_player);
      c.embedding.threshold = e.value("threshold", c.embedding.threshold);
    }
    if (doc.contains("verification")) {
      const json& v = doc["verification"];
      c.verification.oracle_cases = v.value("oracle_cases", c.verification.oracle_cases);
      c.verification.oracle_samples =
          v.value("oracle_samples", c.verification.oracle_samples);
      c.verification.property_instances =
          v.value("property_instances", c.verification.property_instances);
      c.verification.lp_instances = v.value("lp_instances", c.verification.lp_instances);
    }
    if (doc.contains("pivot")) {
      const json& p = doc["pivot"];
      PivotSpec d = default_pivot(c.kind);
      c.pivot = PivotSpec{p.value("rows", d.rows), p.value("columns", d.columns),
                          p.value("quantity", d.quantity)};
    }
  } catch (const json::exception& ex) {
    throw InvalidInput(std::string("bad experiment config: ") + ex.what());
  }
  if (c.trials < 1) throw InvalidInput("trials must be >= 1");
  if (c.m < 1) throw InvalidInput("m must be >= 1");
  if (c.workers < 1) c.workers = 1;
  if (c.kind != ExperimentKind::kVerify && enumerate_cells(c).empty()) {
    throw InvalidInput("experiment grid has no cells (every K exceeds n?)");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json metrics = json::array();
  for (Metric m : c.grid.metric) metrics.push_back(std::string(to_string(m)));
  json doc = {
      {"id", c.id},
      {"kind", std::string(to_string(c.kind))},
      {"family", std::string(instances::to_string(c.family))},
      {"m", c.m},
      {"cluster_sampler", std::string(instances::to_string(c.cluster_sampler))},
      {"seed", c.seed},
      {"trials", c.trials},
      {"aggregation", std::string(to_string(c.aggregation))},
      {"skip_k_above_n", c.skip_k_above_n},
      {"grid",
       {{"n", c.grid.n},
        {"k", c.grid.k},
        {"beta", c.grid.beta},
        {"delta", c.grid.delta},
        {"epsilon", c.grid.epsilon},
        {"metric", metrics}}},
      {"exp3",
       {{"eta", c.exp3.eta},
        {"horizon", c.exp3.horizon},
        {"reward_scale", c.exp3.reward_scale},
        {"replications", c.replications}}},
      {"estimate_regret", c.estimate_regret},
      {"budgets", {{"exact", c.exact_budget}, {"lp", c.lp_budget}}},
  };
  if (c.family == instances::Family::kEmbedding) {
    doc["embedding"] = {{"user_file", c.embedding.user_file.string()},
                        {"item_file", c.embedding.item_file.string()},
                        {"actions_per_player", c.embedding.actions_per_player},
                        {"threshold", c.embedding.threshold}};
    if (c.embedding.item_tags_file) {
      doc["embedding"]["item_tags_file"] = c.embedding.item_tags_file->string();
    }
  }
  if (c.kind == ExperimentKind::kVerify) {
    doc["verification"] = {{"oracle_cases", c.verification.oracle_cases},
                           {"oracle_samples", c.verification.oracle_samples},
                           {"property_instances", c.verification.property_instances},
                           {"lp_instances", c.verification.lp_instances}};
  }
  if (c.pivot) {
    doc["pivot"] = {{"rows", c.pivot->rows},
                    {"columns", c.pivot->columns},
                    {"quantity", c.pivot->quantity}};
  }
  return doc;
}

std::vector<CellSummary> aggregate(const std::vector<ResultRow>& rows,
                                   Aggregation aggregation) {
  // Groups keep first-appearance order, which is (cell, quantity) order for
  // canonically sorted rows.
  std::vector<CellSummary> out;
  std::map<std::pair<std::size_t, std::string>, std::size_t> slot;
  std::map<std::size_t, std::size_t> errors_per_cell;
  for (const ResultRow& r : rows) {
    if (!r.error.empty() && r.quantity == "error") {
      ++errors_per_cell[r.cell];
      continue;
    }
    auto [it, fresh] = slot.try_emplace({r.cell, r.quantity}, out.size());
    if (fresh) {
      CellSummary s;
      s.key = r;
      s.key.trial = 0;
      s.key.seed = 0;
      s.key.error.clear();
      s.mean = 0.0;
      s.min = r.value;
      s.max = r.value;
      out.push_back(std::move(s));
    }
    CellSummary& s = out[it->second];
    s.count += 1;
    s.mean += r.value;
    s.min = std::min(s.min, r.value);
    s.max = std::max(s.max, r.value);
    if (!r.error.empty()) s.errors += 1;
    if (s.key.methods != r.methods &&
        s.key.methods.find(r.methods) == std::string::npos) {
      s.key.methods += "|" + r.methods;
    }
  }
  for (CellSummary& s : out) {
    s.mean /= static_cast<double>(s.count);
    s.errors += errors_per_cell.count(s.key.cell) ? errors_per_cell[s.key.cell] : 0;
    switch (aggregation) {
      case Aggregation::kWorst:
        s.key.value = higher_is_worse(s.key.quantity) ? s.max : s.min;
        break;
      case Aggregation::kMean:
      case Aggregation::kMeanWithRange:
        s.key.value = s.mean;
        break;
    }
  }
  return out;
}

std::string emit_table(const std::vector<CellSummary>& summary, const PivotSpec& pivot) {
  std::vector<const CellSummary*> selected;
  for (const CellSummary& s : summary) {
    if (!pivot.quantity.empty() && pivot.rows != "quantity" &&
        pivot.columns != "quantity" && s.key.quantity != pivot.quantity) {
      continue;
    }
    selected.push_back(&s);
  }
  if (selected.empty()) {
    throw InvalidInput("no results for quantity '" + pivot.quantity + "'");
  }
  const std::string& id = selected.front()->key.experiment_id;
  std::vector<std::string> row_labels, col_labels;
  for (const CellSummary* s : selected) {
    if (s->key.experiment_id != id) throw InvalidInput("rows span several experiments");
    row_labels.push_back(axis_label(s->key, pivot.rows));
    col_labels.push_back(pivot.columns.empty() ? std::string("value")
                                               : axis_label(s->key, pivot.columns));
  }
  const auto rows = ordered_labels(row_labels);
  const auto cols = ordered_labels(col_labels);
  std::map<std::pair<std::string, std::string>, double> cells;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const double v = selected[i]->key.value;
    auto [it, fresh] = cells.try_emplace({row_labels[i], col_labels[i]}, v);
    if (!fresh && !(it->second == v || (std::isnan(v) && std::isnan(it->second)))) {
      throw InvalidInput("conflicting duplicate cell (" + pivot.rows + "=" +
                         row_labels[i] + ", " + pivot.columns + "=" + col_labels[i] +
                         ")");
    }
  }
  std::ostringstream out;
  out << csv_field(pivot.rows + (pivot.columns.empty() ? "" : "\\" + pivot.columns));
  for (const auto& c : cols) out << ',' << csv_field(c);
  out << '\n';
  for (const auto& r : rows) {
    out << csv_field(r);
    for (const auto& c : cols) {
      auto it = cells.find({r, c});
      out << ',' << (it == cells.end() ? std::string("-") : fmt("%.2f", it->second));
    }
    out << '\n';
  }
  return out.str();
}

std::string rows_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "experiment_id,family,cell,n,k,beta,delta,epsilon,metric,quantity,value,"
         "seed,trial,methods,error\n";
  for (const ResultRow& r : rows) {
    out << csv_field(r.experiment_id) << ',' << r.family << ',' << r.cell << ','
        << r.n << ',' << r.k << ',' << full(r.beta) << ','
        << (r.delta ? full(*r.delta) : "") << ','
        << (r.epsilon ? full(*r.epsilon) : "") << ',' << r.metric << ','
        << csv_field(r.quantity) << ',' << full(r.value) << ',' << r.seed << ','
        << r.trial << ',' << csv_field(r.methods) << ',' << csv_field(r.error) << '\n';
  }
  return out.str();
}

std::string summary_csv(const std::vector<CellSummary>& summary,
                        Aggregation aggregation) {
  std::ostringstream out;
  out << "experiment_id,family,cell,n,k,beta,delta,epsilon,metric,quantity,"
         "aggregation,value,mean,min,max,count,errors,methods\n";
  for (const CellSummary& s : summary) {
    const ResultRow& r = s.key;
    out << csv_field(r.experiment_id) << ',' << r.family << ',' << r.cell << ','
        << r.n << ',' << r.k << ',' << full(r.beta) << ','
        << (r.delta ? full(*r.delta) : "") << ','
        << (r.epsilon ? full(*r.epsilon) : "") << ',' << r.metric << ','
        << csv_field(r.quantity) << ',' << to_string(aggregation) << ','
        << full(r.value) << ',' << full(s.mean) << ',' << full(s.min) << ','
        << full(s.max) << ',' << s.count << ',' << s.errors << ','
        << csv_field(r.methods) << '\n';
  }
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const std::vector<Cell> cells = enumerate_cells(config);
  const std::size_t trials = config.kind == ExperimentKind::kVerify ? 1 : config.trials;
  const std::size_t tasks = cells.size() * trials;
  std::vector<std::vector<ResultRow>> results(tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      results[t] = TaskRunner(config, cells[t / trials], t % trials).run();
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, config.workers), tasks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ExperimentResult out;
  for (auto& task_rows : results) {
    for (auto& r : task_rows) out.rows.push_back(std::move(r));
  }
  out.summary = aggregate(out.rows, config.aggregation);
  if (config.kind == ExperimentKind::kVerify) {
    for (const ResultRow& r : out.rows) {
      if (r.value != 1.0) ++out.failed_checks;
    }
  }

  const PivotSpec pivot = config.pivot.value_or(default_pivot(config.kind));
  // One table per combination of the remaining axes that actually vary.
  std::vector<std::string> split_axes;
  for (const char* axis : kAxes) {
    if (axis == pivot.rows || axis == pivot.columns) continue;
    std::set<std::string> seen;
    for (const CellSummary& s : out.summary) seen.insert(axis_label(s.key, axis));
    if (seen.size() > 1) split_axes.push_back(axis);
  }
  std::vector<std::string> groups;
  std::map<std::string, std::vector<CellSummary>> grouped;
  for (const CellSummary& s : out.summary) {
    std::string name = "table";
    for (const auto& axis : split_axes) name += "_" + axis + "=" + axis_label(s.key, axis);
    if (!grouped.count(name)) groups.push_back(name);
    grouped[name].push_back(s);
  }
  for (const auto& name : groups) {
    try {
      out.tables.emplace_back(name, emit_table(grouped[name], pivot));
    } catch (const InvalidInput&) {
      // Quantity absent in this group (e.g. every trial errored).
    }
  }
  return out;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  write_text_file(config.output_dir / "rows.csv", rows_csv(result.rows));
  write_text_file(config.output_dir / "summary.csv",
                  summary_csv(result.summary, config.aggregation));
  json tables = json::array();
  for (const auto& [name, csv] : result.tables) {
    write_text_file(config.output_dir / (name + ".csv"), csv);
    tables.push_back(name + ".csv");
  }
  std::size_t errors = 0;
  for (const ResultRow& r : result.rows) {
    if (!r.error.empty()) ++errors;
  }
  json summary = {{"config", config_to_json(config)},
                  {"rows", result.rows.size()},
                  {"cells", result.summary.size()},
                  {"errors", errors},
                  {"tables", tables}};
  if (config.kind == ExperimentKind::kVerify) summary["failed_checks"] = result.failed_checks;
  write_text_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace ccgame
