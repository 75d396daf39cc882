#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qarena/game.hpp"

namespace qarena {

// One game per line: "<game-id> <a1;a2;...> <outcome>".
// An empty action list is written "-"; an unfinished game has outcome "none".
struct Playout {
  GameId game = GameId::TicTacToe;
  std::vector<Action> actions;
  std::optional<Outcome> result;
};

std::string format_playout(const Playout& playout);
Playout parse_playout(std::string_view line);

// Re-applies the actions through the checked apply; throws on any illegal step.
GameState replay(GameId game, std::span<const Action> actions);

}  // namespace qarena
