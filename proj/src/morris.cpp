#include <algorithm>
#include <array>
#include <vector>

#include "game_impl.hpp"

namespace qarena {
namespace {

//  0-----------1-----------2
//  |   3-------4-------5   |
//  |   |   6---7---8   |   |
//  9---10--11      12--13--14
//  |   |   15--16--17  |   |
//  |   18------19------20  |
//  21----------22----------23
constexpr std::array<std::array<int, 3>, 16> kMills = {{
    {0, 1, 2},    {3, 4, 5},    {6, 7, 8},    {9, 10, 11},  {12, 13, 14}, {15, 16, 17},
    {18, 19, 20}, {21, 22, 23}, {0, 9, 21},   {3, 10, 18},  {6, 11, 15},  {1, 4, 7},
    {16, 19, 22}, {8, 12, 17},  {5, 13, 20},  {2, 14, 23},
}};

// Adjacent points are consecutive members of a line.
std::array<std::vector<int>, 24> build_neighbours() {
  std::array<std::vector<int>, 24> adj;
  for (const auto& line : kMills) {
    for (int i = 0; i + 1 < 3; ++i) {
      adj[line[i]].push_back(line[i + 1]);
      adj[line[i + 1]].push_back(line[i]);
    }
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

const std::array<std::vector<int>, 24>& adjacency() {
  static const auto adj = build_neighbours();
  return adj;
}

std::uint8_t mark(Player p) { return p == Player::P1 ? 1 : 2; }

bool forms_mill(const GameState& s, int point) {
  const std::uint8_t v = s.board[point];
  if (v == 0) return false;
  for (const auto& line : kMills) {
    if (line[0] != point && line[1] != point && line[2] != point) continue;
    if (s.board[line[0]] == v && s.board[line[1]] == v && s.board[line[2]] == v) return true;
  }
  return false;
}

bool has_movement(const GameState& s, Player p) {
  const auto& adj = adjacency();
  const std::uint8_t own = mark(p);
  for (int from = 0; from < 24; ++from) {
    if (s.board[from] != own) continue;
    for (int to : adj[from]) {
      if (s.board[to] == 0) return true;
    }
  }
  return false;
}

Phase phase_for(const GameState& s, Player p) {
  return s.in_hand[index_of(p)] > 0 ? Phase::Placement : Phase::Movement;
}

}  // namespace

namespace morris {

const std::array<std::array<int, 3>, 16>& mills() { return kMills; }

const std::vector<int>& neighbours(int point) { return adjacency().at(point); }

int pieces_on_board(const GameState& s, Player p) {
  const std::uint8_t own = mark(p);
  return static_cast<int>(std::count(s.board.begin(), s.board.end(), own));
}

int total_pieces(const GameState& s, Player p) {
  return pieces_on_board(s, p) + s.in_hand[index_of(p)];
}

int captured_from(const GameState& s, Player p) { return kMorrisPieces - total_pieces(s, p); }

bool in_mill(const GameState& s, int point) { return forms_mill(s, point); }

int mill_count(const GameState& s, Player p) {
  const std::uint8_t own = mark(p);
  int n = 0;
  for (const auto& line : kMills) {
    if (s.board[line[0]] == own && s.board[line[1]] == own && s.board[line[2]] == own) ++n;
  }
  return n;
}

}  // namespace morris

namespace detail {

GameState morris_initial() {
  GameState s;
  s.game = GameId::NineMensMorris;
  s.phase = Phase::Placement;
  s.in_hand = {kMorrisPieces, kMorrisPieces};
  return s;
}

void morris_actions(const GameState& s, const Rules& rules, std::vector<Action>& out) {
  const std::uint8_t own = mark(s.to_move);
  switch (s.phase) {
    case Phase::Removal: {
      const std::uint8_t theirs = mark(opponent(s.to_move));
      const std::size_t first = out.size();
      bool any_outside_mill = false;
      for (int p = 0; p < 24; ++p) {
        if (s.board[p] != theirs) continue;
        const bool protected_piece = forms_mill(s, p);
        if (!protected_piece) any_outside_mill = true;
        out.push_back(Action::remove(p));
      }
      if (rules.protect_mills && any_outside_mill) {
        auto tail = std::remove_if(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                                   [&](const Action& a) { return forms_mill(s, a.from); });
        out.erase(tail, out.end());
      }
      return;
    }
    case Phase::Placement:
      for (int p = 0; p < 24; ++p) {
        if (s.board[p] == 0) out.push_back(Action::place(p));
      }
      return;
    case Phase::Movement: {
      const auto& adj = adjacency();
      for (int from = 0; from < 24; ++from) {
        if (s.board[from] != own) continue;
        for (int to : adj[from]) {
          if (s.board[to] == 0) out.push_back(Action::move(from, to));
        }
      }
      return;
    }
    case Phase::Play:
      return;
  }
}

GameState morris_apply(const GameState& s, const Action& a) {
  GameState next = s;
  ++next.ply;
  const Player mover = s.to_move;
  const Player other = opponent(mover);

  if (a.kind == Action::Kind::Remove) {
    next.board[a.from] = 0;
    next.to_move = other;
    next.phase = phase_for(next, other);
    return next;
  }

  int landed;
  if (a.kind == Action::Kind::Place) {
    next.board[a.to] = mark(mover);
    --next.in_hand[index_of(mover)];
    landed = a.to;
  } else {
    next.board[a.from] = 0;
    next.board[a.to] = mark(mover);
    landed = a.to;
  }

  if (forms_mill(next, landed) && morris::pieces_on_board(next, other) > 0) {
    next.phase = Phase::Removal;  // same player removes next
    return next;
  }
  next.to_move = other;
  next.phase = phase_for(next, other);
  return next;
}

std::optional<Outcome> morris_outcome(const GameState& s, const Rules& rules) {
  for (Player p : {Player::P1, Player::P2}) {
    if (morris::total_pieces(s, p) < 3) return Outcome::win(opponent(p));
  }
  if (s.phase == Phase::Movement && !has_movement(s, s.to_move)) {
    return Outcome::win(opponent(s.to_move));
  }
  if (s.ply >= rules.morris_ply_cap) return Outcome::draw();
  return std::nullopt;
}

}  // namespace detail
}  // namespace qarena
