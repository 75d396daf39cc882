#include <numeric>

#include "game_impl.hpp"

namespace qarena {

namespace mancala {

int seed_total(const GameState& s) {
  return std::accumulate(s.board.begin(), s.board.begin() + 14, 0);
}

int score(const GameState& s, Player p, const Rules& rules) {
  const Player owner = rules.leftover_seeds_to_owner ? p : opponent(p);
  int total = s.board[bank(p)];
  for (int h = 0; h < kHouses; ++h) total += s.board[house_index(owner, h)];
  return total;
}

}  // namespace mancala

namespace detail {
namespace {

bool has_seeds(const GameState& s, Player p) {
  for (int h = 0; h < mancala::kHouses; ++h) {
    if (s.board[mancala::house_index(p, h)] > 0) return true;
  }
  return false;
}

bool owns_house(Player p, int pit) {
  const int first = mancala::house_index(p, 0);
  return pit >= first && pit < first + mancala::kHouses;
}

}  // namespace

GameState mancala_initial() {
  GameState s;
  s.game = GameId::Mancala;
  s.phase = Phase::Play;
  for (Player p : {Player::P1, Player::P2}) {
    for (int h = 0; h < mancala::kHouses; ++h) s.board[mancala::house_index(p, h)] = 4;
  }
  return s;
}

void mancala_actions(const GameState& s, std::vector<Action>& out) {
  for (int h = 0; h < mancala::kHouses; ++h) {
    if (s.board[mancala::house_index(s.to_move, h)] > 0) out.push_back(Action::sow(h));
  }
}

// Counter-clockwise sowing is ascending pit index modulo 14, skipping the
// opponent's bank.
GameState mancala_apply(const GameState& s, const Action& a) {
  GameState next = s;
  ++next.ply;
  const Player mover = s.to_move;
  const int skip = mancala::bank(opponent(mover));
  int pit = mancala::house_index(mover, a.from);
  int seeds = next.board[pit];
  next.board[pit] = 0;
  while (seeds > 0) {
    pit = (pit + 1) % 14;
    if (pit == skip) continue;
    ++next.board[pit];
    --seeds;
  }

  if (pit == mancala::bank(mover)) return next;  // extra turn

  const int opposite = 12 - pit;
  if (owns_house(mover, pit) && next.board[pit] == 1 && next.board[opposite] > 0) {
    next.board[mancala::bank(mover)] += next.board[opposite] + 1;
    next.board[pit] = 0;
    next.board[opposite] = 0;
  }
  next.to_move = opponent(mover);
  return next;
}

std::optional<Outcome> mancala_outcome(const GameState& s, const Rules& rules) {
  if (has_seeds(s, s.to_move)) return std::nullopt;
  const int p1 = mancala::score(s, Player::P1, rules);
  const int p2 = mancala::score(s, Player::P2, rules);
  if (p1 > p2) return Outcome::win(Player::P1);
  if (p2 > p1) return Outcome::win(Player::P2);
  return Outcome::draw();
}

}  // namespace detail
}  // namespace qarena
