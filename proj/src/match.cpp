#include "qarena/match.hpp"

namespace qarena {

std::string cell_text(const MatchRecord& record) {
  return std::to_string(record.p1_wins) + ":" + std::to_string(record.draws) + ":" +
         std::to_string(record.p1_losses);
}

Outcome play_game(GameId game, Agent& p1, Agent& p2, std::vector<Action>* log) {
  GameState s = initial_state(game);
  while (true) {
    if (auto o = outcome(s)) return *o;
    Agent& mover = s.to_move == Player::P1 ? p1 : p2;
    const Action a = mover.select(s);
    if (log) log->push_back(a);
    s = apply_legal(s, a);
  }
}

}  // namespace qarena
