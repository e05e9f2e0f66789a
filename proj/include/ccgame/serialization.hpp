#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ccgame/game.hpp"

namespace ccgame {

// Instance document:
//   {"beta": b, "k": K, "metric": "engagement"|"exposure",
//    "users":   [{"id": j, "weight": w, "tags": [...], "features": [...]}],
//    "players": [{"id": i, "actions": [{"sigma": [m reals], "tags": [...]}]}]}
// "tags", "features" and player "id" are optional. Scores are validated to
// [0, 1] on load.
nlohmann::json instance_to_json(const GameInstance& game);
GameInstance instance_from_json(const nlohmann::json& doc);

GameInstance load_instance(const std::filesystem::path& path);
void save_instance(const GameInstance& game, const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& contents);

}  // namespace ccgame
