#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qarena/agents.hpp"
#include "qarena/game.hpp"
#include "qarena/match.hpp"
#include "qarena/qtable.hpp"
#include "qarena/rng.hpp"

namespace qarena {

class AgentFactory;

struct RewardSpec {
  double win = 1.0;
  double loss = -1.0;
  double draw = 0.0;

  // win >= draw >= loss and win > loss. (A draw equal to a win is allowed
  // so that TicTacToe can be trained with draw=+1.)
  void validate() const;
  double for_outcome(const Outcome& o, Player learner) const;
  double max_magnitude() const;
};

struct TrainConfig {
  GameId game = GameId::TicTacToe;
  AgentSpec teacher = AgentSpec::of(AgentKind::MinMaxDet);
  // Opponent of the evaluation batches. When empty: the teacher, except for
  // q-twin, whose self-evaluation says nothing; it is measured against minmax-det.
  std::optional<AgentSpec> evaluator;
  double alpha = kDefaultAlpha;
  double gamma = kDefaultGamma;
  double epsilon = 0.1;
  // Linear decay from epsilon (first episode) to this value (last episode).
  std::optional<double> epsilon_final;
  RewardSpec rewards;
  std::uint64_t max_episodes = 50000;
  std::uint64_t eval_every = 100;
  std::uint64_t eval_games = 100;
  // 0 selects max(1, max_episodes / 100).
  std::uint64_t snapshot_every = 0;
  std::uint64_t seed = 42;
  int st_window = 20;
  int st_tolerance = 1;
  int fs_window = 20;
  std::uint64_t fs_confirm = 5000;
  // Files (snapshots, curve, manifest) are written only when set.
  std::filesystem::path out_dir;

  void validate() const;
  std::uint64_t effective_snapshot_every() const;
  double epsilon_at(std::uint64_t episode) const;
  AgentSpec resolved_evaluator() const;
};

struct EvalPoint {
  std::uint64_t episode = 0;
  int learner_wins = 0;
  int teacher_wins = 0;
  int draws = 0;

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct SnapshotRef {
  std::uint64_t episode = 0;
  std::string file;  // relative to the run directory

  friend bool operator==(const SnapshotRef&, const SnapshotRef&) = default;
};

struct TrainingRun {
  TrainConfig config;
  std::vector<EvalPoint> curve;
  std::optional<std::uint64_t> convergence_st;
  std::optional<std::uint64_t> convergence_fs;
  std::vector<SnapshotRef> snapshots;  // ascending episode
  std::optional<std::string> fs_snapshot;
  std::uint64_t episodes_run = 0;
  std::filesystem::path dir;  // where the run was written or read from
  std::shared_ptr<QTable> table;                // final table (in-memory runs only)
  std::shared_ptr<const QTable> fs_table;       // table at the FS episode
};

struct LearnerStep {
  StateKey key;
  std::size_t action = 0;
  std::size_t action_count = 0;
};

struct Episode {
  Player learner = Player::P1;
  std::vector<LearnerStep> steps;
  std::vector<Action> actions;
  Outcome result;
};

// Plays one game (learner epsilon-greedy over q) and then walks the learner's
// moves backwards: the last move receives the terminal reward, earlier moves
// reward 0 plus the discounted best value of the learner's next state.
Episode run_episode(QTable& q, Agent& teacher, bool learner_plays_first, double epsilon,
                    const RewardSpec& rewards, Rng& rng);

// First curve episode whose loss count (teacher_wins) stays within
// +-tolerance for the next `window` points.
std::optional<std::uint64_t> detect_convergence_st(const std::vector<EvalPoint>& curve,
                                                   int window = 20, int tolerance = 1);

// First episode starting `window` consecutive zero-loss points, after which
// every point up to confirm_episodes past the window is still loss-free.
std::optional<std::uint64_t> detect_convergence_fs(const std::vector<EvalPoint>& curve,
                                                   int window = 20,
                                                   std::uint64_t confirm_episodes = 5000);

// Greedy play of n_games with a as P1 and b as P2.
MatchRecord evaluate(Agent& a, Agent& b, GameId game, int n_games);
MatchRecord evaluate(const AgentSpec& a, const AgentSpec& b, GameId game, int n_games,
                     AgentFactory& factory, std::uint64_t seed);

// Called after each evaluation point (progress reporting).
using TrainObserver = std::function<void(const EvalPoint&)>;

TrainingRun train(const TrainConfig& cfg, AgentFactory& factory, const TrainObserver& observer = {});

// Learning-curve CSV: episode,learner_wins,teacher_wins,draws
std::string curve_csv(const std::vector<EvalPoint>& curve);
std::vector<EvalPoint> parse_curve_csv(const std::string& text);

}  // namespace qarena
