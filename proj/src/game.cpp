#include "qarena/game.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>
#include <unordered_set>

#include "game_impl.hpp"

namespace qarena {
namespace {

int parse_int(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error("bad_action", "not a number: '" + std::string(text) + "'");
  }
  return value;
}

void require_range(int value, int lo, int hi, std::string_view text) {
  if (value < lo || value > hi) {
    throw Error("bad_action", "index out of range in '" + std::string(text) + "'");
  }
}

}  // namespace

std::string_view game_name(GameId game) {
  switch (game) {
    case GameId::TicTacToe:
      return "tictactoe";
    case GameId::NineMensMorris:
      return "ninemensmorris";
    case GameId::Mancala:
      return "mancala";
  }
  return "unknown";
}

GameId parse_game(std::string_view name) {
  if (name == "tictactoe" || name == "ttt") return GameId::TicTacToe;
  if (name == "ninemensmorris" || name == "nmm" || name == "morris") {
    return GameId::NineMensMorris;
  }
  if (name == "mancala") return GameId::Mancala;
  throw Error("unknown_game", std::string(name));
}

std::string_view player_name(Player p) { return p == Player::P1 ? "p1" : "p2"; }

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Play:
      return "play";
    case Phase::Placement:
      return "placement";
    case Phase::Movement:
      return "movement";
    case Phase::Removal:
      return "removal";
  }
  return "unknown";
}

std::string to_string(GameId game, const Action& action) {
  switch (game) {
    case GameId::TicTacToe:
      return std::to_string(action.to);
    case GameId::Mancala:
      return std::to_string(action.from);
    case GameId::NineMensMorris:
      switch (action.kind) {
        case Action::Kind::Place:
          return "P" + std::to_string(action.to);
        case Action::Kind::Move:
          return "M" + std::to_string(action.from) + "-" + std::to_string(action.to);
        case Action::Kind::Remove:
          return "R" + std::to_string(action.from);
        case Action::Kind::Sow:
          break;
      }
      break;
  }
  return "?";
}

Action parse_action(GameId game, std::string_view text) {
  switch (game) {
    case GameId::TicTacToe: {
      const int cell = parse_int(text);
      require_range(cell, 0, 8, text);
      return Action::place(cell);
    }
    case GameId::Mancala: {
      const int house = parse_int(text);
      require_range(house, 0, mancala::kHouses - 1, text);
      return Action::sow(house);
    }
    case GameId::NineMensMorris: {
      if (text.size() < 2) break;
      const char tag = text.front();
      const std::string_view rest = text.substr(1);
      if (tag == 'P' || tag == 'R') {
        const int point = parse_int(rest);
        require_range(point, 0, 23, text);
        return tag == 'P' ? Action::place(point) : Action::remove(point);
      }
      if (tag == 'M') {
        const auto dash = rest.find('-');
        if (dash == std::string_view::npos) break;
        const int from = parse_int(rest.substr(0, dash));
        const int to = parse_int(rest.substr(dash + 1));
        require_range(from, 0, 23, text);
        require_range(to, 0, 23, text);
        return Action::move(from, to);
      }
      break;
    }
  }
  throw Error("bad_action", "cannot parse '" + std::string(text) + "' for " +
                                std::string(game_name(game)));
}

std::string to_string(const Outcome& outcome) {
  if (!outcome.winner) return "draw";
  return std::string(player_name(*outcome.winner));
}

Outcome parse_outcome(std::string_view text) {
  if (text == "draw") return Outcome::draw();
  if (text == "p1") return Outcome::win(Player::P1);
  if (text == "p2") return Outcome::win(Player::P2);
  throw Error("bad_outcome", std::string(text));
}

std::string StateKey::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (unsigned char c : bytes_) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

GameState initial_state(GameId game) {
  switch (game) {
    case GameId::TicTacToe:
      return detail::tictactoe_initial();
    case GameId::NineMensMorris:
      return detail::morris_initial();
    case GameId::Mancala:
      return detail::mancala_initial();
  }
  throw Error("unknown_game", std::to_string(static_cast<int>(game)));
}

std::optional<Outcome> outcome(const GameState& s, const Rules& rules) {
  switch (s.game) {
    case GameId::TicTacToe:
      return detail::tictactoe_outcome(s);
    case GameId::NineMensMorris:
      return detail::morris_outcome(s, rules);
    case GameId::Mancala:
      return detail::mancala_outcome(s, rules);
  }
  return std::nullopt;
}

void generate_actions(const GameState& s, std::vector<Action>& out, const Rules& rules) {
  switch (s.game) {
    case GameId::TicTacToe:
      detail::tictactoe_actions(s, out);
      break;
    case GameId::NineMensMorris:
      detail::morris_actions(s, rules, out);
      break;
    case GameId::Mancala:
      detail::mancala_actions(s, out);
      break;
  }
}

std::vector<Action> legal_actions(const GameState& s, const Rules& rules) {
  if (outcome(s, rules)) throw Error("terminal", "no legal actions in a terminal state");
  std::vector<Action> actions;
  actions.reserve(24);
  generate_actions(s, actions, rules);
  return actions;
}

GameState apply_legal(const GameState& s, const Action& a, const Rules& /*rules*/) {
  switch (s.game) {
    case GameId::TicTacToe:
      return detail::tictactoe_apply(s, a);
    case GameId::NineMensMorris:
      return detail::morris_apply(s, a);
    case GameId::Mancala:
      return detail::mancala_apply(s, a);
  }
  return s;
}

GameState apply(const GameState& s, const Action& a, const Rules& rules) {
  const auto actions = legal_actions(s, rules);
  if (std::find(actions.begin(), actions.end(), a) == actions.end()) {
    throw Error("illegal_action", to_string(s.game, a));
  }
  return apply_legal(s, a, rules);
}

// Layout: [game][to_move] then
//   TicTacToe: 9 cell bytes
//   Nine Men's Morris: [phase] 24 point bytes [in_hand P1][in_hand P2]
//   Mancala: 14 pit bytes
StateKey state_key(const GameState& s) {
  std::string bytes;
  bytes.reserve(32);
  bytes.push_back(static_cast<char>(s.game));
  bytes.push_back(static_cast<char>(s.to_move));
  switch (s.game) {
    case GameId::TicTacToe:
      bytes.append(reinterpret_cast<const char*>(s.board.data()), 9);
      break;
    case GameId::NineMensMorris:
      bytes.push_back(static_cast<char>(s.phase));
      bytes.append(reinterpret_cast<const char*>(s.board.data()), 24);
      bytes.push_back(static_cast<char>(s.in_hand[0]));
      bytes.push_back(static_cast<char>(s.in_hand[1]));
      break;
    case GameId::Mancala:
      bytes.append(reinterpret_cast<const char*>(s.board.data()), 14);
      break;
  }
  return StateKey(std::move(bytes));
}

std::size_t enumerate_reachable(GameId game, std::size_t cap, std::optional<int> max_depth) {
  std::unordered_set<StateKey, StateKeyHash> seen;
  std::deque<std::pair<GameState, int>> frontier;
  const GameState start = initial_state(game);
  if (cap < 1) throw CapExceeded(0);
  seen.insert(state_key(start));
  frontier.emplace_back(start, 0);
  while (!frontier.empty()) {
    auto [s, depth] = frontier.front();
    frontier.pop_front();
    if (max_depth && depth >= *max_depth) continue;
    if (outcome(s)) continue;
    for (const Action& a : legal_actions(s)) {
      GameState next = apply_legal(s, a);
      StateKey key = state_key(next);
      if (seen.contains(key)) continue;
      if (seen.size() >= cap) throw CapExceeded(seen.size());
      seen.insert(std::move(key));
      frontier.emplace_back(next, depth + 1);
    }
  }
  return seen.size();
}

std::string render(const GameState& s) {
  std::ostringstream out;
  switch (s.game) {
    case GameId::TicTacToe: {
      static constexpr char kMarks[] = {'.', 'X', 'O'};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << kMarks[s.board[r * 3 + c]];
        out << '\n';
      }
      break;
    }
    case GameId::NineMensMorris: {
      static constexpr char kMarks[] = {'.', 'W', 'B'};
      out << "points:";
      for (int p = 0; p < 24; ++p) out << ' ' << kMarks[s.board[p]];
      out << "\nin hand: " << int(s.in_hand[0]) << '/' << int(s.in_hand[1])
          << " phase: " << phase_name(s.phase) << '\n';
      break;
    }
    case GameId::Mancala: {
      out << "   ";
      for (int h = 5; h >= 0; --h) out << ' ' << int(s.board[mancala::house_index(Player::P2, h)]);
      out << "\n" << int(s.board[13]) << "             " << int(s.board[6]) << "\n   ";
      for (int h = 0; h < 6; ++h) out << ' ' << int(s.board[mancala::house_index(Player::P1, h)]);
      out << '\n';
      break;
    }
  }
  out << "to move: " << player_name(s.to_move) << '\n';
  return out.str();
}

}  // namespace qarena
