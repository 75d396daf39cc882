#pragma once

#include <string>
#include <vector>

#include "qarena/agents.hpp"
#include "qarena/game.hpp"

namespace qarena {

// Results of n games with a fixed seat assignment: counts are from P1's side.
struct MatchRecord {
  std::string p1;
  std::string p2;
  int p1_wins = 0;
  int draws = 0;
  int p1_losses = 0;
  int n_games = 0;

  void add(const Outcome& o) {
    ++n_games;
    if (o.is_draw()) {
      ++draws;
    } else if (*o.winner == Player::P1) {
      ++p1_wins;
    } else {
      ++p1_losses;
    }
  }

  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

// "W:D:L" as used in tournament tables.
std::string cell_text(const MatchRecord& record);

// Plays one game to the end. When log is given the actions are appended.
Outcome play_game(GameId game, Agent& p1, Agent& p2, std::vector<Action>* log = nullptr);

}  // namespace qarena
