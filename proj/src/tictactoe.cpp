#include <array>

#include "game_impl.hpp"

namespace qarena::detail {
namespace {

constexpr std::array<std::array<int, 3>, 8> kLines = {{
    {0, 1, 2}, {3, 4, 5}, {6, 7, 8},  // rows
    {0, 3, 6}, {1, 4, 7}, {2, 5, 8},  // columns
    {0, 4, 8}, {2, 4, 6},             // diagonals
}};

std::uint8_t mark(Player p) { return p == Player::P1 ? 1 : 2; }

}  // namespace

GameState tictactoe_initial() {
  GameState s;
  s.game = GameId::TicTacToe;
  s.phase = Phase::Play;
  return s;
}

void tictactoe_actions(const GameState& s, std::vector<Action>& out) {
  for (int cell = 0; cell < 9; ++cell) {
    if (s.board[cell] == 0) out.push_back(Action::place(cell));
  }
}

GameState tictactoe_apply(const GameState& s, const Action& a) {
  GameState next = s;
  next.board[a.to] = mark(s.to_move);
  next.to_move = opponent(s.to_move);
  ++next.ply;
  return next;
}

std::optional<Outcome> tictactoe_outcome(const GameState& s) {
  for (const auto& line : kLines) {
    const std::uint8_t v = s.board[line[0]];
    if (v != 0 && v == s.board[line[1]] && v == s.board[line[2]]) {
      return Outcome::win(v == 1 ? Player::P1 : Player::P2);
    }
  }
  for (int cell = 0; cell < 9; ++cell) {
    if (s.board[cell] == 0) return std::nullopt;
  }
  return Outcome::draw();
}

}  // namespace qarena::detail
