#include "ccgame/serialization.hpp"

#include <fstream>
#include <sstream>

#include "ccgame/error.hpp"

namespace ccgame {

using nlohmann::json;

json instance_to_json(const GameInstance& game) {
  json users = json::array();
  for (const User& u : game.users()) {
    json ju = {{"id", u.id}, {"weight", u.weight}};
    if (!u.tags.empty()) ju["tags"] = u.tags;
    if (!u.features.empty()) ju["features"] = u.features;
    users.push_back(std::move(ju));
  }
  json players = json::array();
  for (const ActionSet& set : game.players()) {
    json actions = json::array();
    for (const Action& a : set.actions) {
      json ja = {{"sigma", a.sigma}};
      if (!a.tags.empty()) ja["tags"] = a.tags;
      actions.push_back(std::move(ja));
    }
    players.push_back({{"id", set.player_id}, {"actions", std::move(actions)}});
  }
  return {{"beta", game.beta()},
          {"k", game.k_slate()},
          {"metric", std::string(to_string(game.metric()))},
          {"users", std::move(users)},
          {"players", std::move(players)}};
}

GameInstance instance_from_json(const json& doc) {
  try {
    std::vector<User> users;
    int next_id = 0;
    for (const json& ju : doc.at("users")) {
      User u;
      u.id = ju.value("id", next_id);
      u.weight = ju.value("weight", 1.0);
      if (ju.contains("tags")) u.tags = ju.at("tags").get<std::vector<std::string>>();
      if (ju.contains("features")) {
        u.features = ju.at("features").get<std::vector<double>>();
      }
      next_id = u.id + 1;
      users.push_back(std::move(u));
    }
    std::vector<ActionSet> players;
    int player_id = 0;
    for (const json& jp : doc.at("players")) {
      ActionSet set;
      set.player_id = jp.value("id", player_id);
      for (const json& ja : jp.at("actions")) {
        Action a;
        a.sigma = ja.at("sigma").get<std::vector<double>>();
        if (ja.contains("tags")) a.tags = ja.at("tags").get<std::vector<std::string>>();
        set.actions.push_back(std::move(a));
      }
      ++player_id;
      players.push_back(std::move(set));
    }
    const Metric metric =
        metric_from_string(doc.value("metric", std::string("engagement")));
    return GameInstance(std::move(users), std::move(players),
                        doc.at("beta").get<double>(), doc.at("k").get<int>(),
                        metric);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed instance document: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << contents;
}

GameInstance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json_file(path));
}

void save_instance(const GameInstance& game,
                   const std::filesystem::path& path) {
  write_text_file(path, instance_to_json(game).dump(1) + "\n");
}

}  // namespace ccgame
