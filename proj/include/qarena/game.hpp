#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qarena/error.hpp"

namespace qarena {

enum class GameId : std::uint8_t { TicTacToe = 0, NineMensMorris = 1, Mancala = 2 };

inline constexpr std::array<GameId, 3> kAllGames = {GameId::TicTacToe, GameId::NineMensMorris,
                                                     GameId::Mancala};

std::string_view game_name(GameId game);
// Accepts the canonical names plus a few short aliases ("ttt", "nmm").
GameId parse_game(std::string_view name);

enum class Player : std::uint8_t { P1 = 0, P2 = 1 };

constexpr Player opponent(Player p) { return p == Player::P1 ? Player::P2 : Player::P1; }
constexpr int index_of(Player p) { return static_cast<int>(p); }
std::string_view player_name(Player p);

// Only Nine Men's Morris uses the three real phases; the other games sit in Play.
// During Removal the player to move is the one who just closed a mill.
enum class Phase : std::uint8_t { Play = 0, Placement = 1, Movement = 2, Removal = 3 };

std::string_view phase_name(Phase phase);

struct Action {
  enum class Kind : std::uint8_t { Place = 0, Move = 1, Remove = 2, Sow = 3 };

  Kind kind = Kind::Place;
  std::int8_t from = -1;  // Move source, Remove target, Sow house (0..5, own side)
  std::int8_t to = -1;    // Place target, Move destination

  static Action place(int point) { return {Kind::Place, -1, static_cast<std::int8_t>(point)}; }
  static Action move(int from, int to) {
    return {Kind::Move, static_cast<std::int8_t>(from), static_cast<std::int8_t>(to)};
  }
  static Action remove(int point) { return {Kind::Remove, static_cast<std::int8_t>(point), -1}; }
  static Action sow(int house) { return {Kind::Sow, static_cast<std::int8_t>(house), -1}; }

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

// Text forms: TicTacToe "4", Mancala "2", Nine Men's Morris "P5" / "M3-4" / "R7".
std::string to_string(GameId game, const Action& action);
Action parse_action(GameId game, std::string_view text);

struct GameState {
  GameId game = GameId::TicTacToe;
  Player to_move = Player::P1;
  Phase phase = Phase::Play;
  // TicTacToe: cells 0..8 (0 empty, 1 X, 2 O).
  // Nine Men's Morris: points 0..23 (0 empty, 1 P1, 2 P2).
  // Mancala: pits 0..13; 0..5 P1 houses, 6 P1 bank, 7..12 P2 houses, 13 P2 bank.
  std::array<std::uint8_t, 24> board{};
  std::array<std::uint8_t, 2> in_hand{};  // Nine Men's Morris only
  std::uint16_t ply = 0;

  friend bool operator==(const GameState&, const GameState&) = default;
};

struct Outcome {
  std::optional<Player> winner;  // empty means draw

  static Outcome draw() { return {}; }
  static Outcome win(Player p) { return {p}; }

  bool is_draw() const { return !winner.has_value(); }
  // +1 win, -1 loss, 0 draw from p's point of view.
  double value_for(Player p) const {
    if (!winner) return 0.0;
    return *winner == p ? 1.0 : -1.0;
  }

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

std::string to_string(const Outcome& outcome);  // "p1", "p2" or "draw"
Outcome parse_outcome(std::string_view text);

// Compact byte encoding of (game, to_move, position, phase, in-hand counts).
// The ply counter is deliberately not part of the key.
class StateKey {
 public:
  StateKey() = default;
  explicit StateKey(std::string bytes) : bytes_(std::move(bytes)) {}

  const std::string& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }
  std::string hex() const;

  friend bool operator==(const StateKey&, const StateKey&) = default;
  friend auto operator<=>(const StateKey&, const StateKey&) = default;

 private:
  std::string bytes_;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& key) const noexcept {
    return std::hash<std::string>{}(key.bytes());
  }
};

// Rule variants. Defaults follow the project rules; alternatives exist for experiments.
struct Rules {
  // Nine Men's Morris: pieces inside a mill may only be removed when every
  // opponent piece is inside a mill.
  bool protect_mills = true;
  // Mancala end of game: seeds left in a house count for the house owner
  // (false: they count for the opponent).
  bool leftover_seeds_to_owner = true;
  // Nine Men's Morris: ply count at which the game is declared drawn.
  int morris_ply_cap = 200;
};

inline constexpr int kMancalaSeeds = 48;
inline constexpr int kMorrisPieces = 9;

GameState initial_state(GameId game);

// Canonical ascending order. Throws Error("terminal") on terminal states.
std::vector<Action> legal_actions(const GameState& s, const Rules& rules = {});

// Appends the canonical actions without the terminal check. Search and
// training call this after they have already asked outcome().
void generate_actions(const GameState& s, std::vector<Action>& out, const Rules& rules = {});

// Throws Error("illegal_action") when a is not in legal_actions(s).
GameState apply(const GameState& s, const Action& a, const Rules& rules = {});

// Same as apply but trusts the caller that a is legal. Used on hot paths
// (search, training) where the action was just taken from legal_actions.
GameState apply_legal(const GameState& s, const Action& a, const Rules& rules = {});

std::optional<Outcome> outcome(const GameState& s, const Rules& rules = {});

StateKey state_key(const GameState& s);

// Thrown by enumerate_reachable when the cap is hit.
class CapExceeded : public Error {
 public:
  explicit CapExceeded(std::size_t partial)
      : Error("cap_exceeded", "state cap reached after " + std::to_string(partial) + " states"),
        partial_(partial) {}
  std::size_t partial_count() const { return partial_; }

 private:
  std::size_t partial_;
};

// Breadth-first closure from the initial state, terminal states included.
// max_depth limits the number of plies explored.
std::size_t enumerate_reachable(GameId game, std::size_t cap,
                                std::optional<int> max_depth = std::nullopt);

// Game-specific helpers used by heuristics, the play service and tests.
namespace morris {
const std::array<std::array<int, 3>, 16>& mills();
const std::vector<int>& neighbours(int point);
int pieces_on_board(const GameState& s, Player p);
int total_pieces(const GameState& s, Player p);
int captured_from(const GameState& s, Player p);
bool in_mill(const GameState& s, int point);
int mill_count(const GameState& s, Player p);
}  // namespace morris

namespace mancala {
inline constexpr int kHouses = 6;
constexpr int bank(Player p) { return p == Player::P1 ? 6 : 13; }
constexpr int house_index(Player p, int house) { return (p == Player::P1 ? 0 : 7) + house; }
int score(const GameState& s, Player p, const Rules& rules = {});
int seed_total(const GameState& s);
}  // namespace mancala

// Human-readable board picture for logs and the CLI.
std::string render(const GameState& s);

}  // namespace qarena
