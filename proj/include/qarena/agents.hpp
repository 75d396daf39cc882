#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qarena/game.hpp"
#include "qarena/qtable.hpp"
#include "qarena/rng.hpp"

namespace qarena {

enum class AgentKind : std::uint8_t { Random, MinMaxDet, MinMaxNonDet, QGreedy, QPercent, QTwin };

// Textual policy description shared by the CLI, config files and the HTTP API:
//   random | minmax-det[:depth=N] | minmax-nd[:depth=N] | q:<snapshot-path>
//   | q-pct:<run-dir>:<percent> | q-twin (training teacher only)
struct AgentSpec {
  AgentKind kind = AgentKind::Random;
  std::optional<int> depth;  // minimax plies; game default when empty
  std::string source;        // snapshot path (q) or run directory (q-pct)
  double percent = 100.0;    // q-pct only

  static AgentSpec parse(std::string_view text);
  static AgentSpec of(AgentKind kind) {
    AgentSpec spec;
    spec.kind = kind;
    return spec;
  }
  std::string to_string() const;

  bool is_minimax() const {
    return kind == AgentKind::MinMaxDet || kind == AgentKind::MinMaxNonDet;
  }
  bool is_deterministic() const { return kind == AgentKind::MinMaxDet; }

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

// Full depth for TicTacToe, 6 plies for the two larger games.
int default_depth(GameId game);
int resolved_depth(const AgentSpec& spec, GameId game);

struct HeuristicWeights {
  double morris_piece = 0.08;
  double morris_mill = 0.12;
};

// Leaf evaluator in [-1, 1] from the perspective player's point of view.
// Terminal states always score their exact outcome.
//   TicTacToe: 0 (search is always exhaustive in practice)
//   Mancala: (own bank - opponent bank) / 48
//   Nine Men's Morris: piece and closed-mill differences, clamped
class Heuristic {
 public:
  explicit Heuristic(HeuristicWeights weights = {}) : weights_(weights) {}
  double operator()(const GameState& s, Player perspective) const;
  const HeuristicWeights& weights() const { return weights_; }

 private:
  HeuristicWeights weights_;
};

// Depth-limited negamax with alpha-beta pruning. Exact when the subtree ends
// in terminals before the depth runs out.
double minimax_value(const GameState& s, int depth, const Heuristic& h, Player perspective);

// Reference implementation without pruning, kept for cross-checks.
double minimax_value_unpruned(const GameState& s, int depth, const Heuristic& h,
                              Player perspective);

// Indices (into legal_actions(s)) of every action reaching the maximal
// minimax value at the given depth.
std::vector<std::size_t> minimax_best_indices(const GameState& s, int depth, const Heuristic& h);

Action select_random(const GameState& s, Rng& rng);
// MinMaxDet takes the first maximal action; MinMaxNonDet draws one uniformly.
Action select_minmax(const GameState& s, const AgentSpec& spec, Rng& rng,
                     const Heuristic& h = Heuristic{});
// Greedy over Q with uniform tie-breaking; unseen pairs count as 0.
Action select_q(const GameState& s, const QTable& q, Rng& rng);

// A playable policy. Instances own their rng and caches, so one instance must
// not be shared between threads; clone with a derived seed instead.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual Action select(const GameState& s) = 0;
  virtual std::unique_ptr<Agent> clone(std::uint64_t seed) const = 0;
  virtual const AgentSpec& spec() const = 0;
};

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  Action select(const GameState& s) override { return select_random(s, rng_); }
  std::unique_ptr<Agent> clone(std::uint64_t seed) const override {
    return std::make_unique<RandomAgent>(seed);
  }
  const AgentSpec& spec() const override { return spec_; }

 private:
  Rng rng_;
  AgentSpec spec_{};
};

// Memoises the maximal action set per state, so repeated positions cost a
// hash lookup. Cached sets are exactly what a fresh search would return.
class MinimaxAgent final : public Agent {
 public:
  MinimaxAgent(AgentSpec spec, GameId game, std::uint64_t seed, Heuristic h = Heuristic{});

  Action select(const GameState& s) override;
  std::unique_ptr<Agent> clone(std::uint64_t seed) const override;
  const AgentSpec& spec() const override { return spec_; }
  int depth() const { return depth_; }

 private:
  AgentSpec spec_;
  GameId game_;
  int depth_;
  Heuristic heuristic_;
  Rng rng_;
  std::unordered_map<StateKey, std::vector<std::uint8_t>, StateKeyHash> cache_;
};

// Reads a table it does not own; the table may keep changing underneath
// (the q-twin teacher reads the learner's live table).
class QGreedyAgent final : public Agent {
 public:
  QGreedyAgent(std::shared_ptr<const QTable> table, std::uint64_t seed,
               AgentSpec spec = AgentSpec::of(AgentKind::QGreedy));

  Action select(const GameState& s) override { return select_q(s, *table_, rng_); }
  std::unique_ptr<Agent> clone(std::uint64_t seed) const override {
    return std::make_unique<QGreedyAgent>(table_, seed, spec_);
  }
  const AgentSpec& spec() const override { return spec_; }
  const QTable& table() const { return *table_; }

 private:
  std::shared_ptr<const QTable> table_;
  Rng rng_;
  AgentSpec spec_;
};

}  // namespace qarena
