#include "qarena/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qarena/factory.hpp"
#include "qarena/snapshot.hpp"

namespace qarena {
namespace {

// Stream ids for Rng::derive_seed.
constexpr std::uint64_t kLearnerStream = 1;
constexpr std::uint64_t kTeacherStream = 2;
constexpr std::uint64_t kEvalLearnerStream = 3;
constexpr std::uint64_t kEvalOpponentStream = 4;

Action choose_learner_action(const std::vector<Action>& actions,
                             const std::vector<double>* row, double epsilon, Rng& rng,
                             std::size_t& index) {
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
    index = rng.uniform_index(actions.size());
    return actions[index];
  }
  if (!row) {
    index = rng.uniform_index(actions.size());
    return actions[index];
  }
  double best = (*row)[0];
  for (double v : *row) best = std::max(best, v);
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < row->size(); ++i) {
    if ((*row)[i] == best) ties.push_back(i);
  }
  index = ties[rng.uniform_index(ties.size())];
  return actions[index];
}

// Tracks the zero-loss streak while training and decides when FS is confirmed.
class FsTracker {
 public:
  FsTracker(int window, std::uint64_t confirm) : window_(window), confirm_(confirm) {}

  // Returns true when this point started a new streak.
  bool observe(const EvalPoint& p) {
    if (p.teacher_wins != 0) {
      streak_ = 0;
      return false;
    }
    ++streak_;
    if (streak_ == window_) window_end_ = p.episode;
    return streak_ == 1;
  }

  bool confirmed(std::uint64_t episode) const {
    return streak_ >= window_ && episode >= window_end_ + confirm_;
  }

 private:
  int window_;
  std::uint64_t confirm_;
  int streak_ = 0;
  std::uint64_t window_end_ = 0;
};

}  // namespace

void RewardSpec::validate() const {
  if (!std::isfinite(win) || !std::isfinite(loss) || !std::isfinite(draw)) {
    throw Error("invalid_config", "rewards must be finite");
  }
  if (!(win > loss) || draw > win || draw < loss) {
    throw Error("invalid_config", "rewards must satisfy win >= draw >= loss and win > loss");
  }
}

double RewardSpec::for_outcome(const Outcome& o, Player learner) const {
  if (o.is_draw()) return draw;
  return *o.winner == learner ? win : loss;
}

double RewardSpec::max_magnitude() const {
  return std::max({std::abs(win), std::abs(loss), std::abs(draw)});
}

void TrainConfig::validate() const {
  rewards.validate();
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(alpha)) throw Error("invalid_config", "alpha must be in [0, 1]");
  if (!unit(gamma)) throw Error("invalid_config", "gamma must be in [0, 1]");
  if (!unit(epsilon)) throw Error("invalid_config", "epsilon must be in [0, 1]");
  if (epsilon_final && !unit(*epsilon_final)) {
    throw Error("invalid_config", "epsilon_final must be in [0, 1]");
  }
  if (max_episodes < 1) throw Error("invalid_config", "max_episodes must be >= 1");
  if (eval_every < 1) throw Error("invalid_config", "eval_every must be >= 1");
  if (eval_games < 1) throw Error("invalid_config", "eval_games must be >= 1");
  if (st_window < 1 || fs_window < 1) throw Error("invalid_config", "windows must be >= 1");
  if (st_tolerance < 0) throw Error("invalid_config", "st_tolerance must be >= 0");
  for (const AgentSpec* spec : {&teacher, evaluator ? &*evaluator : nullptr}) {
    if (spec && spec->depth && *spec->depth < 1) {
      throw Error("invalid_config", "minimax depth must be >= 1");
    }
  }
}

std::uint64_t TrainConfig::effective_snapshot_every() const {
  if (snapshot_every > 0) return snapshot_every;
  return std::max<std::uint64_t>(1, max_episodes / 100);
}

double TrainConfig::epsilon_at(std::uint64_t episode) const {
  if (!epsilon_final || max_episodes <= 1) return epsilon;
  const double t = static_cast<double>(std::min(episode, max_episodes) - 1) /
                   static_cast<double>(max_episodes - 1);
  return epsilon + (*epsilon_final - epsilon) * t;
}

AgentSpec TrainConfig::resolved_evaluator() const {
  if (evaluator) return *evaluator;
  if (teacher.kind == AgentKind::QTwin) return AgentSpec::of(AgentKind::MinMaxDet);
  return teacher;
}

Episode run_episode(QTable& q, Agent& teacher, bool learner_plays_first, double epsilon,
                    const RewardSpec& rewards, Rng& rng) {
  Episode ep;
  ep.learner = learner_plays_first ? Player::P1 : Player::P2;
  GameState s = initial_state(q.game());
  std::vector<Action> actions;
  while (true) {
    if (auto o = outcome(s)) {
      ep.result = *o;
      break;
    }
    Action a;
    if (s.to_move == ep.learner) {
      actions.clear();
      generate_actions(s, actions);
      StateKey key = state_key(s);
      std::size_t index = 0;
      a = choose_learner_action(actions, q.find(key), epsilon, rng, index);
      ep.steps.push_back({std::move(key), index, actions.size()});
    } else {
      a = teacher.select(s);
    }
    ep.actions.push_back(a);
    s = apply_legal(s, a);
  }

  // Backward pass: reward only on the last learner move; max_next is taken
  // from the following learner state after it has been updated.
  double max_next = 0.0;
  for (std::size_t i = ep.steps.size(); i-- > 0;) {
    const bool last = i + 1 == ep.steps.size();
    const double reward = last ? rewards.for_outcome(ep.result, ep.learner) : 0.0;
    auto& row = q.row(ep.steps[i].key, ep.steps[i].action_count);
    double& cell = row[ep.steps[i].action];
    cell = q_update(cell, reward, last ? 0.0 : max_next, q.alpha(), q.gamma());
    max_next = *std::max_element(row.begin(), row.end());
  }
  return ep;
}

std::optional<std::uint64_t> detect_convergence_st(const std::vector<EvalPoint>& curve, int window,
                                                   int tolerance) {
  const std::size_t w = static_cast<std::size_t>(std::max(window, 0));
  for (std::size_t i = 0; i + w < curve.size(); ++i) {
    bool stable = true;
    for (std::size_t j = i + 1; j <= i + w; ++j) {
      if (std::abs(curve[j].teacher_wins - curve[i].teacher_wins) > tolerance) {
        stable = false;
        break;
      }
    }
    if (stable) return curve[i].episode;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> detect_convergence_fs(const std::vector<EvalPoint>& curve, int window,
                                                   std::uint64_t confirm_episodes) {
  const std::size_t w = static_cast<std::size_t>(std::max(window, 1));
  if (curve.empty()) return std::nullopt;
  const std::uint64_t last_episode = curve.back().episode;
  for (std::size_t i = 0; i + w <= curve.size(); ++i) {
    bool zero = true;
    for (std::size_t j = i; j < i + w && zero; ++j) zero = curve[j].teacher_wins == 0;
    if (!zero) continue;
    const std::uint64_t window_end = curve[i + w - 1].episode;
    const std::uint64_t stop = window_end + confirm_episodes;
    if (last_episode < stop) return std::nullopt;
    bool held = true;
    for (std::size_t j = i + w; j < curve.size() && curve[j].episode <= stop; ++j) {
      if (curve[j].teacher_wins != 0) {
        held = false;
        break;
      }
    }
    if (held) return curve[i].episode;
  }
  return std::nullopt;
}

MatchRecord evaluate(Agent& a, Agent& b, GameId game, int n_games) {
  MatchRecord record;
  record.p1 = a.spec().to_string();
  record.p2 = b.spec().to_string();
  for (int g = 0; g < n_games; ++g) record.add(play_game(game, a, b));
  return record;
}

MatchRecord evaluate(const AgentSpec& a, const AgentSpec& b, GameId game, int n_games,
                     AgentFactory& factory, std::uint64_t seed) {
  auto pa = factory.make(a, game, Rng::derive_seed(seed, 1));
  auto pb = factory.make(b, game, Rng::derive_seed(seed, 2));
  MatchRecord record = evaluate(*pa, *pb, game, n_games);
  record.p1 = a.to_string();
  record.p2 = b.to_string();
  return record;
}

TrainingRun train(const TrainConfig& cfg, AgentFactory& factory, const TrainObserver& observer) {
  cfg.validate();
  TrainingRun run;
  run.config = cfg;
  run.dir = cfg.out_dir;
  auto table = std::make_shared<QTable>(cfg.game, cfg.alpha, cfg.gamma);
  table->set_epsilon(cfg.epsilon);
  run.table = table;

  auto build = [&](const AgentSpec& spec, std::uint64_t stream) -> std::unique_ptr<Agent> {
    const std::uint64_t seed = Rng::derive_seed(cfg.seed, stream);
    if (spec.kind == AgentKind::QTwin) return AgentFactory::make_twin(table, seed);
    return factory.make(spec, cfg.game, seed);
  };
  auto teacher = build(cfg.teacher, kTeacherStream);
  auto opponent = build(cfg.resolved_evaluator(), kEvalOpponentStream);
  QGreedyAgent eval_learner(table, Rng::derive_seed(cfg.seed, kEvalLearnerStream));
  Rng learner_rng(Rng::derive_seed(cfg.seed, kLearnerStream));

  const bool write = !cfg.out_dir.empty();
  const std::uint64_t snap_every = cfg.effective_snapshot_every();
  if (write) std::filesystem::create_directories(cfg.out_dir / "snapshots");

  FsTracker fs(cfg.fs_window, cfg.fs_confirm);
  std::shared_ptr<QTable> stash;
  std::uint64_t episode = 0;
  while (episode < cfg.max_episodes) {
    ++episode;
    const bool learner_first = episode % 2 == 1;
    run_episode(*table, *teacher, learner_first, cfg.epsilon_at(episode), cfg.rewards,
                learner_rng);
    table->set_episodes_trained(episode);

    if (write && episode % snap_every == 0) {
      const std::string name = snapshot_file_name(episode);
      save_snapshot(*table, cfg.out_dir / "snapshots" / name);
      run.snapshots.push_back({episode, "snapshots/" + name});
    }

    if (episode % cfg.eval_every == 0) {
      EvalPoint p;
      p.episode = episode;
      for (std::uint64_t g = 0; g < cfg.eval_games; ++g) {
        const bool learner_p1 = g % 2 == 0;
        const Player learner = learner_p1 ? Player::P1 : Player::P2;
        const Outcome o = learner_p1 ? play_game(cfg.game, eval_learner, *opponent)
                                     : play_game(cfg.game, *opponent, eval_learner);
        if (o.is_draw()) {
          ++p.draws;
        } else if (*o.winner == learner) {
          ++p.learner_wins;
        } else {
          ++p.teacher_wins;
        }
      }
      run.curve.push_back(p);
      if (observer) observer(p);
      if (fs.observe(p)) stash = std::make_shared<QTable>(*table);
      if (fs.confirmed(episode)) break;
    }
  }
  run.episodes_run = episode;
  run.convergence_st = detect_convergence_st(run.curve, cfg.st_window, cfg.st_tolerance);
  run.convergence_fs = detect_convergence_fs(run.curve, cfg.fs_window, cfg.fs_confirm);

  if (run.convergence_fs) {
    // The stash was taken when the confirmed streak began.
    run.fs_table = stash;
    if (write) {
      const std::uint64_t n = *run.convergence_fs;
      const std::string name = fs_snapshot_file_name(n);
      save_snapshot(*stash, cfg.out_dir / "snapshots" / name);
      run.fs_snapshot = "snapshots/" + name;
      std::erase_if(run.snapshots, [n](const SnapshotRef& r) { return r.episode == n; });
      run.snapshots.push_back({n, *run.fs_snapshot});
      std::sort(run.snapshots.begin(), run.snapshots.end(),
                [](const SnapshotRef& a, const SnapshotRef& b) { return a.episode < b.episode; });
    }
  }
  if (write) write_run_files(run);
  return run;
}

std::string curve_csv(const std::vector<EvalPoint>& curve) {
  std::ostringstream out;
  out << "episode,learner_wins,teacher_wins,draws\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << p.learner_wins << ',' << p.teacher_wins << ',' << p.draws << '\n';
  }
  return out.str();
}

std::vector<EvalPoint> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EvalPoint> curve;
  if (!std::getline(in, line) || line != "episode,learner_wins,teacher_wins,draws") {
    throw Error("bad_curve", "missing curve header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EvalPoint p;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    if (!(row >> p.episode >> c1 >> p.learner_wins >> c2 >> p.teacher_wins >> c3 >> p.draws) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
      throw Error("bad_curve", "bad row '" + line + "'");
    }
    curve.push_back(p);
  }
  return curve;
}

}  // namespace qarena
