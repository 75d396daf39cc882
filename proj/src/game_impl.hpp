#pragma once

#include <optional>
#include <vector>

#include "qarena/game.hpp"

// Per-game rule engines behind the dispatch in game.cpp. Preconditions are
// checked by the caller.
namespace qarena::detail {

GameState tictactoe_initial();
void tictactoe_actions(const GameState& s, std::vector<Action>& out);
GameState tictactoe_apply(const GameState& s, const Action& a);
std::optional<Outcome> tictactoe_outcome(const GameState& s);

GameState morris_initial();
void morris_actions(const GameState& s, const Rules& rules, std::vector<Action>& out);
GameState morris_apply(const GameState& s, const Action& a);
std::optional<Outcome> morris_outcome(const GameState& s, const Rules& rules);

GameState mancala_initial();
void mancala_actions(const GameState& s, std::vector<Action>& out);
GameState mancala_apply(const GameState& s, const Action& a);
std::optional<Outcome> mancala_outcome(const GameState& s, const Rules& rules);

}  // namespace qarena::detail
