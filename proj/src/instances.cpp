#include "ccgame/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ccgame/error.hpp"

namespace ccgame::instances {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kDataset1:
      return "dataset1";
    case Family::kDataset2:
      return "dataset2";
    case Family::kLowerBound:
      return "lower_bound";
    case Family::kExposureGap:
      return "exposure_gap";
    case Family::kEmbedding:
      return "embedding";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  for (Family f : {Family::kDataset1, Family::kDataset2, Family::kLowerBound,
                   Family::kExposureGap, Family::kEmbedding}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidInput("unknown instance family '" + std::string(name) + "'");
}

std::string_view to_string(ClusterSampler sampler) {
  return sampler == ClusterSampler::kComposition ? "composition" : "per_user";
}

ClusterSampler cluster_sampler_from_string(std::string_view name) {
  if (name == "composition") return ClusterSampler::kComposition;
  if (name == "per_user") return ClusterSampler::kPerUser;
  throw InvalidInput("unknown cluster sampler '" + std::string(name) + "'");
}

std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts,
                                            Rng& rng) {
  if (parts == 0 || parts > total) {
    throw InvalidInput("cannot split " + std::to_string(total) + " users into " +
                       std::to_string(parts) + " nonempty clusters");
  }
  std::vector<std::size_t> points(total - 1);
  std::iota(points.begin(), points.end(), std::size_t{1});
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    const std::size_t j = i + rng.below(points.size() - i);
    std::swap(points[i], points[j]);
  }
  std::vector<std::size_t> cuts(points.begin(), points.begin() + (parts - 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> sizes;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    sizes.push_back(c - prev);
    prev = c;
  }
  sizes.push_back(total - prev);
  return sizes;
}

namespace {

std::vector<User> plain_users(std::size_t m) {
  std::vector<User> users(m);
  for (std::size_t j = 0; j < m; ++j) users[j].id = static_cast<int>(j);
  return users;
}

// Indicator rows for contiguous user clusters; also tags users by cluster.
std::vector<Action> cluster_actions(const std::vector<std::size_t>& sizes,
                                    std::vector<User>& users) {
  std::vector<Action> actions;
  std::size_t start = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    Action a;
    a.sigma.assign(users.size(), 0.0);
    const std::string tag = "cluster" + std::to_string(c + 1);
    for (std::size_t j = start; j < start + sizes[c]; ++j) {
      a.sigma[j] = 1.0;
      users[j].tags = {tag};
    }
    a.tags = {tag};
    actions.push_back(std::move(a));
    start += sizes[c];
  }
  return actions;
}

std::vector<ActionSet> shared_actions(int n, const std::vector<Action>& actions) {
  std::vector<ActionSet> players(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    players[i].player_id = i;
    players[i].actions = actions;
  }
  return players;
}

// log(b + K) - L with b = e^L - 1, i.e. log1p((K-1) e^{-L}).
double log_shift(double l, double count) {
  return std::log1p(count * std::exp(-l));
}

}  // namespace

std::vector<std::size_t> random_cluster_sizes(std::size_t total, std::size_t parts,
                                              ClusterSampler sampler, Rng& rng) {
  if (sampler == ClusterSampler::kComposition) return random_composition(total, parts, rng);
  if (parts == 0 || parts > total) return random_composition(total, parts, rng);  // throws
  std::vector<std::size_t> sizes;
  do {
    sizes.assign(parts, 0);
    for (std::size_t u = 0; u < total; ++u) ++sizes[rng.below(parts)];
  } while (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end());
  return sizes;
}

GameInstance gen_dataset1(int n, int m, double beta, int k, std::uint64_t seed,
                          ClusterSampler sampler) {
  if (n < 2) throw InvalidInput("dataset1 needs n >= 2");
  if (m <= 0 || m % 2 != 0) throw InvalidInput("dataset1 needs an even m > 0");
  if (m / 2 < n - 1) {
    throw InvalidInput("dataset1 needs m/2 >= n-1 so every small cluster is nonempty");
  }
  Rng rng(seed);
  const std::size_t half = static_cast<std::size_t>(m / 2);
  std::vector<std::size_t> sizes{half};
  const auto rest =
      random_cluster_sizes(half, static_cast<std::size_t>(n - 1), sampler, rng);
  sizes.insert(sizes.end(), rest.begin(), rest.end());
  auto users = plain_users(static_cast<std::size_t>(m));
  const auto actions = cluster_actions(sizes, users);
  return GameInstance(std::move(users), shared_actions(n, actions), beta, k);
}

GameInstance gen_dataset2(int n, int m, double delta, double beta, int k,
                          std::uint64_t seed, ClusterSampler sampler) {
  if (n < 1) throw InvalidInput("dataset2 needs n >= 1");
  if (m < n) throw InvalidInput("dataset2 needs m >= n so every cluster is nonempty");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidInput("dataset2 needs 0 <= delta <= 1");
  }
  Rng rng(seed);
  const auto sizes = random_cluster_sizes(static_cast<std::size_t>(m),
                                          static_cast<std::size_t>(n), sampler, rng);
  auto users = plain_users(static_cast<std::size_t>(m));
  std::vector<Action> actions;
  Action safe;
  safe.sigma.assign(static_cast<std::size_t>(m), delta);
  safe.tags = {"s0"};
  actions.push_back(std::move(safe));
  for (auto& a : cluster_actions(sizes, users)) actions.push_back(std::move(a));
  return GameInstance(std::move(users), shared_actions(n, actions), beta, k);
}

std::vector<std::size_t> cluster_sizes(const GameInstance& game,
                                       std::size_t first_indicator_action) {
  std::vector<std::size_t> sizes;
  const auto& actions = game.players().at(0).actions;
  for (std::size_t a = first_indicator_action; a < actions.size(); ++a) {
    double sum = 0.0;
    for (double v : actions[a].sigma) sum += v;
    sizes.push_back(static_cast<std::size_t>(std::lround(sum)));
  }
  return sizes;
}

double lower_bound_weight(int k, double beta) {
  return 1.0 + beta * std::log(static_cast<double>(k));
}

GameInstance gen_lower_bound_instance(int n, int k, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidInput("lower-bound instance requires 0 <= beta <= 1");
  }
  if (n <= 2) throw InvalidInput("lower-bound instance requires n > 2");
  if (k < 1) throw InvalidInput("lower-bound instance requires K >= 1");
  if (k > n - 1) throw InvalidInput("lower-bound instance requires K <= n - 1");
  if (beta > 0.0 && std::log(static_cast<double>(k)) > 1.0 / (5.0 * beta)) {
    throw InvalidInput("lower-bound instance requires K <= e^{1/(5 beta)}");
  }
  const double a = lower_bound_weight(k, beta);
  std::vector<User> users = plain_users(static_cast<std::size_t>(n));
  users[0].weight = n;
  for (int j = 1; j < n; ++j) users[j].weight = a;
  std::vector<Action> actions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    actions[i].sigma.assign(static_cast<std::size_t>(n), 0.0);
    actions[i].sigma[i] = 1.0;
    actions[i].tags = {"x" + std::to_string(i + 1)};
    users[i].tags = {"type" + std::to_string(i + 1)};
  }
  return GameInstance(std::move(users), shared_actions(n, actions), beta, k);
}

double exposure_gap_delta0(double beta, int k) {
  if (!(beta > 0.0)) throw InvalidInput("delta_0 is defined for beta > 0");
  if (k < 1) throw InvalidInput("K must be at least 1");
  const double l = 1.0 / beta;
  const double kk = static_cast<double>(k);
  // 2K(b+K)/(b+2K) with the e^L factors cancelled.
  const double target = 2.0 * kk * std::exp(log_shift(l, kk - 1.0) -
                                            log_shift(l, 2.0 * kk - 1.0));
  return beta * std::log(target - (kk - 1.0));
}

double exposure_gap_ratio(double beta, int k) {
  if (!(beta > 0.0)) throw InvalidInput("welfare ratio is defined for beta > 0");
  const double l = 1.0 / beta;
  const double kk = static_cast<double>(k);
  const double num = l + log_shift(l, kk - 1.0) + std::log(kk);
  const double den = 2.0 * (std::log(2.0 * kk) + log_shift(l, kk - 1.0) -
                            log_shift(l, 2.0 * kk - 1.0));
  return num / den;
}

ExposureGapInstance gen_exposure_gap_instance(int n, int k, double beta,
                                 std::optional<double> delta) {
  if (n < 2) throw InvalidInput("exposure instance needs n >= 2");
  if (k < 1) throw InvalidInput("K must be at least 1");
  if (!(beta >= 0.0)) throw InvalidInput("beta must be nonnegative");
  ExposureGapInstance out;
  if (delta) {
    out.delta = *delta;
  } else {
    out.delta = beta > 0.0 ? exposure_gap_delta0(beta, k) : 0.5;
  }
  if (!(out.delta >= 0.0 && out.delta <= 1.0)) {
    throw InvalidInput("delta must lie in [0, 1]");
  }
  const double cap = k > 1 ? std::min(0.14, 1.0 / (5.0 * std::log(double(k)))) : 0.14;
  out.guarantee_holds = beta > 0.0 && beta <= cap;

  std::vector<User> users = plain_users(2);
  Action s0{{0.0, 0.0}, {"s0"}};
  Action s1{{1.0, 0.0}, {"s1"}};
  Action s2{{out.delta, out.delta}, {"s2"}};
  std::vector<ActionSet> players(static_cast<std::size_t>(n));
  players[0] = {0, {s1, s2}};
  for (int i = 1; i < n; ++i) players[i] = {i, {s0}};
  out.game = GameInstance(std::move(users), std::move(players), beta, k,
                          Metric::kExposure);
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(t, &used);
    return used == t.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool is_integer_literal(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
  if (i == t.size()) return false;
  for (; i < t.size(); ++i) {
    if (t[i] < '0' || t[i] > '9') return false;
  }
  return true;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

std::vector<std::vector<double>> read_vector_csv(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line, ','));
  }
  if (rows.empty()) throw InvalidInput(path.string() + " has no rows");
  // Header: first row with a non-numeric cell.
  {
    double v;
    bool numeric = true;
    for (const auto& cell : rows[0]) numeric = numeric && parse_double(cell, v);
    if (!numeric) rows.erase(rows.begin());
  }
  if (rows.empty()) throw InvalidInput(path.string() + " has no data rows");
  bool id_column = rows[0].size() > 1;
  for (const auto& r : rows) {
    id_column = id_column && !r.empty() && is_integer_literal(r[0]);
  }
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  const std::size_t skip = id_column ? 1 : 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> vec;
    for (std::size_t c = skip; c < rows[r].size(); ++c) {
      double v;
      if (!parse_double(rows[r][c], v)) {
        throw InvalidInput(path.string() + ": row " + std::to_string(r + 1) +
                           " column " + std::to_string(c + 1) + " is not a number");
      }
      vec.push_back(v);
    }
    if (!out.empty() && vec.size() != out.front().size()) {
      throw InvalidInput(path.string() + ": inconsistent row width at row " +
                         std::to_string(r + 1));
    }
    out.push_back(std::move(vec));
  }
  if (out.front().empty()) throw InvalidInput(path.string() + " has no vector columns");
  return out;
}

GameInstance build_embedding_instance(
    const std::vector<std::vector<double>>& user_vectors,
    const std::vector<std::vector<double>>& items,
    const std::vector<std::vector<std::string>>& item_tags,
    const EmbeddingOptions& options) {
  if (user_vectors.empty() || items.empty()) {
    throw InvalidInput("embedding instance needs users and items");
  }
  const std::size_t d = user_vectors.front().size();
  for (const auto& v : user_vectors) {
    if (v.size() != d) throw InvalidInput("user vectors have inconsistent dimension");
  }
  for (const auto& v : items) {
    if (v.size() != d) {
      throw InvalidInput("item dimension " + std::to_string(v.size()) +
                         " does not match user dimension " + std::to_string(d));
    }
  }
  if (options.n < 1) throw InvalidInput("embedding instance needs n >= 1");
  if (options.actions_per_player < 1) {
    throw InvalidInput("actions_per_player must be at least 1");
  }
  if (items.size() < options.actions_per_player) {
    throw InvalidInput("item pool (" + std::to_string(items.size()) +
                       ") is smaller than actions_per_player (" +
                       std::to_string(options.actions_per_player) + ")");
  }
  if (!item_tags.empty() && item_tags.size() != items.size()) {
    throw InvalidInput("item tag file must have one row per item");
  }
  const std::size_t m = user_vectors.size();
  std::vector<User> users = plain_users(m);
  for (std::size_t j = 0; j < m; ++j) users[j].features = user_vectors[j];

  std::vector<ActionSet> players(static_cast<std::size_t>(options.n));
  std::vector<std::size_t> pool(items.size());
  for (int i = 0; i < options.n; ++i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    players[i].player_id = i;
    for (std::size_t a = 0; a < options.actions_per_player; ++a) {
      const std::size_t pick = a + rng.below(pool.size() - a);
      std::swap(pool[a], pool[pick]);
      const auto& item = items[pool[a]];
      Action action;
      action.sigma.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0;
        for (std::size_t t = 0; t < d; ++t) dot += item[t] * user_vectors[j][t];
        action.sigma[j] = dot >= options.threshold ? 1.0 : 0.0;
      }
      if (!item_tags.empty()) action.tags = item_tags[pool[a]];
      players[i].actions.push_back(std::move(action));
    }
  }
  return GameInstance(std::move(users), std::move(players), options.beta, options.k);
}

GameInstance load_embedding_instance(const EmbeddingOptions& options) {
  const auto users = read_vector_csv(options.user_file);
  const auto items = read_vector_csv(options.item_file);
  std::vector<std::vector<std::string>> tags;
  if (options.item_tags_file) {
    // One line per item; tags separated by '|'. A leading "id," is ignored.
    for (const std::string& line : read_lines(*options.item_tags_file)) {
      if (trim(line).empty()) continue;
      const auto pos = line.rfind(',');
      const std::string field = trim(pos == std::string::npos ? line : line.substr(pos + 1));
      std::vector<std::string> item_tags;
      for (const auto& t : split(field, '|')) {
        if (!trim(t).empty()) item_tags.push_back(trim(t));
      }
      tags.push_back(std::move(item_tags));
    }
  }
  return build_embedding_instance(users, items, tags, options);
}

BuiltInstance build(const InstanceSpec& spec) {
  BuiltInstance out;
  switch (spec.family) {
    case Family::kDataset1:
      out.game = gen_dataset1(spec.n, spec.m, spec.beta, spec.k, spec.seed,
                              spec.cluster_sampler);
      break;
    case Family::kDataset2:
      out.game = gen_dataset2(spec.n, spec.m, spec.delta, spec.beta, spec.k, spec.seed,
                              spec.cluster_sampler);
      break;
    case Family::kLowerBound:
      out.game = gen_lower_bound_instance(spec.n, spec.k, spec.beta);
      break;
    case Family::kExposureGap: {
      auto p = gen_exposure_gap_instance(spec.n, spec.k, spec.beta, spec.exposure_delta);
      if (!p.guarantee_holds) {
        out.warnings.push_back(
            "beta outside (0, min(0.14, 1/(5 log K))]: welfare ratio > 2 not guaranteed");
      }
      out.game = std::move(p.game);
      return out;  // always the exposure metric
    }
    case Family::kEmbedding: {
      EmbeddingOptions e = spec.embedding;
      e.n = spec.n;
      e.beta = spec.beta;
      e.k = spec.k;
      e.seed = spec.seed;
      out.game = load_embedding_instance(e);
      break;
    }
  }
  if (spec.metric != Metric::kEngagement) out.game = out.game.with_metric(spec.metric);
  return out;
}

InstanceSpec spec_from_json(const nlohmann::json& doc) {
  try {
    InstanceSpec s;
    s.family = family_from_string(doc.at("family").get<std::string>());
    s.n = doc.value("n", s.n);
    s.m = doc.value("m", s.m);
    s.beta = doc.value("beta", s.beta);
    s.k = doc.value("k", s.k);
    s.metric = metric_from_string(doc.value("metric", std::string("engagement")));
    s.delta = doc.value("delta", s.delta);
    s.cluster_sampler = cluster_sampler_from_string(
        doc.value("cluster_sampler", std::string("composition")));
    if (doc.contains("exposure_delta") && !doc["exposure_delta"].is_null()) {
      s.exposure_delta = doc["exposure_delta"].get<double>();
    }
    s.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("embedding")) {
      const auto& e = doc["embedding"];
      s.embedding.user_file = e.at("user_file").get<std::string>();
      s.embedding.item_file = e.at("item_file").get<std::string>();
      if (e.contains("item_tags_file")) {
        s.embedding.item_tags_file = e["item_tags_file"].get<std::string>();
      }
      s.embedding.actions_per_player =
          e.value("actions_per_player", s.embedding.actions_per_player);
      s.embedding.threshold = e.value("threshold", s.embedding.threshold);
    }
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("bad instance spec: ") + ex.what());
  }
}

nlohmann::json spec_to_json(const InstanceSpec& spec) {
  nlohmann::json doc = {{"family", std::string(to_string(spec.family))},
                        {"n", spec.n},
                        {"m", spec.m},
                        {"beta", spec.beta},
                        {"k", spec.k},
                        {"metric", std::string(to_string(spec.metric))},
                        {"delta", spec.delta},
                        {"cluster_sampler", std::string(to_string(spec.cluster_sampler))},
                        {"seed", spec.seed}};
  if (spec.exposure_delta) doc["exposure_delta"] = *spec.exposure_delta;
  if (spec.family == Family::kEmbedding) {
    doc["embedding"] = {{"user_file", spec.embedding.user_file.string()},
                        {"item_file", spec.embedding.item_file.string()},
                        {"actions_per_player", spec.embedding.actions_per_player},
                        {"threshold", spec.embedding.threshold}};
    if (spec.embedding.item_tags_file) {
      doc["embedding"]["item_tags_file"] = spec.embedding.item_tags_file->string();
    }
  }
  return doc;
}

}  // namespace ccgame::instances
