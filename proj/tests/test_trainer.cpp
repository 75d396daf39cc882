#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qarena/factory.hpp"
#include "qarena/trainer.hpp"

using namespace qarena;
namespace fs = std::filesystem;

namespace {

std::vector<EvalPoint> curve_from_losses(const std::vector<int>& losses, int games = 100) {
  std::vector<EvalPoint> curve;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    curve.push_back({100 * (i + 1), 0, losses[i], games - losses[i]});
  }
  return curve;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qarena-test-trainer-" + name);
  fs::remove_all(dir);
  return dir;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.max_episodes = 3000;
  cfg.fs_confirm = 500;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("q update chain of the worked example") {
    const double a = q_update(0.0, 1.0, 0.0, 0.4, 0.9);
    const double b = q_update(0.0, 0.0, a, 0.4, 0.9);
    const double c = q_update(0.0, 0.0, b, 0.4, 0.9);
    CHECK(std::abs(a - 0.4) < 1e-12);
    CHECK(std::abs(b - 0.144) < 1e-12);
    CHECK(std::abs(c - 0.05184) < 1e-12);
  }

  TEST_CASE("zero learning rate freezes values") {
    for (double x : {-1.0, -0.3, 0.0, 0.25, 1.0}) {
      for (double r : {-1.0, 0.0, 1.0}) {
        for (double m : {-0.5, 0.0, 0.7}) CHECK(q_update(x, r, m, 0.0, 0.9) == x);
      }
    }
  }

  TEST_CASE("episode backward pass reproduces the worked example") {
    // Random teacher, empty table, greedy learner: the learner moves uniformly
    // until it wins in three moves, which is the worked example's game.
    bool found = false;
    for (std::uint64_t seed = 0; seed < 500 && !found; ++seed) {
      QTable q(GameId::TicTacToe);
      RandomAgent teacher(seed + 1000);
      Rng rng(seed);
      const Episode ep = run_episode(q, teacher, true, 0.0, RewardSpec{}, rng);
      if (ep.result != Outcome::win(Player::P1) || ep.steps.size() != 3) continue;
      found = true;
      CHECK(std::abs(q.value(ep.steps[2].key, ep.steps[2].action) - 0.4) < 1e-12);
      CHECK(std::abs(q.value(ep.steps[1].key, ep.steps[1].action) - 0.144) < 1e-12);
      CHECK(std::abs(q.value(ep.steps[0].key, ep.steps[0].action) - 0.05184) < 1e-12);
    }
    CHECK(found);
  }

  TEST_CASE("teacher moves are never updated") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
      QTable q(GameId::TicTacToe);
      RandomAgent teacher(i);
      const Episode ep = run_episode(q, teacher, i % 2 == 0, 0.1, RewardSpec{}, rng);
      CHECK(q.size() == ep.steps.size());
      for (const auto& step : ep.steps) {
        const auto* row = q.find(step.key);
        REQUIRE(row);
        for (std::size_t a = 0; a < row->size(); ++a) {
          if (a != step.action) CHECK((*row)[a] == 0.0);
        }
      }
    }
  }

  TEST_CASE("full exploration ignores the table") {
    QTable q(GameId::TicTacToe);
    const StateKey start = state_key(initial_state(GameId::TicTacToe));
    RandomAgent teacher(1);
    Rng rng(2);
    std::map<int, int> openings;
    for (int i = 0; i < 4500; ++i) {
      // Keep cell 0 overwhelmingly attractive.
      q.row(start, 9)[0] = 1.0;
      const Episode ep = run_episode(q, teacher, true, 1.0, RewardSpec{}, rng);
      ++openings[ep.actions.front().to];
    }
    REQUIRE(openings.size() == 9);
    for (auto [cell, n] : openings) {
      CAPTURE(cell);
      CHECK(n >= 400);
      CHECK(n <= 600);
    }
  }

  TEST_CASE("draw reward override") {
    RewardSpec r;
    r.draw = 1.0;
    CHECK_NOTHROW(r.validate());
    CHECK(r.for_outcome(Outcome::draw(), Player::P1) == 1.0);
    RewardSpec bad;
    bad.win = -1.0;
    bad.loss = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    RewardSpec worse;
    worse.draw = -2.0;
    CHECK_THROWS_AS(worse.validate(), Error);
    CHECK(RewardSpec{}.for_outcome(Outcome::win(Player::P2), Player::P2) == 1.0);
    CHECK(RewardSpec{}.for_outcome(Outcome::win(Player::P2), Player::P1) == -1.0);
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto rejects = [](auto mutate) {
      TrainConfig c;
      mutate(c);
      try {
        c.validate();
        return false;
      } catch (const Error& e) {
        return e.code() == "invalid_config";
      }
    };
    CHECK(rejects([](TrainConfig& c) { c.eval_games = 0; }));
    CHECK(rejects([](TrainConfig& c) { c.eval_every = 0; }));
    CHECK(rejects([](TrainConfig& c) { c.epsilon = 1.5; }));
    CHECK(rejects([](TrainConfig& c) { c.alpha = -0.1; }));
    CHECK(rejects([](TrainConfig& c) { c.gamma = 2.0; }));
    CHECK(rejects([](TrainConfig& c) { c.max_episodes = 0; }));
  }

  TEST_CASE("defaults and derived settings") {
    TrainConfig cfg;
    CHECK(cfg.alpha == 0.4);
    CHECK(cfg.gamma == 0.9);
    CHECK(cfg.epsilon == 0.1);
    CHECK(cfg.eval_every == 100);
    CHECK(cfg.eval_games == 100);
    CHECK(cfg.effective_snapshot_every() == 500);
    cfg.max_episodes = 50;
    CHECK(cfg.effective_snapshot_every() == 1);
    cfg.max_episodes = 101;
    cfg.epsilon_final = 0.01;
    CHECK(cfg.epsilon_at(1) == 0.1);
    CHECK(cfg.epsilon_at(101) == doctest::Approx(0.01));
    CHECK(cfg.epsilon_at(51) == doctest::Approx(0.055));
    CHECK(cfg.resolved_evaluator() == cfg.teacher);
    cfg.teacher = AgentSpec::of(AgentKind::QTwin);
    CHECK(cfg.resolved_evaluator().kind == AgentKind::MinMaxDet);
    cfg.evaluator = AgentSpec::of(AgentKind::Random);
    CHECK(cfg.resolved_evaluator().kind == AgentKind::Random);
  }

  TEST_CASE("stable-loss detector") {
    CHECK(detect_convergence_st(curve_from_losses(std::vector<int>(30, 7))) == 100);
    std::vector<int> settling{30, 10};
    settling.insert(settling.end(), 25, 5);
    CHECK(detect_convergence_st(curve_from_losses(settling)) == 300);
    std::vector<int> falling;
    for (int v = 98; v >= 0; v -= 2) falling.push_back(v);
    CHECK_FALSE(detect_convergence_st(curve_from_losses(falling)).has_value());
    // Fluctuation of one is tolerated, two is not.
    std::vector<int> wobble;
    for (int i = 0; i < 25; ++i) wobble.push_back(i % 2 == 0 ? 5 : 6);
    CHECK(detect_convergence_st(curve_from_losses(wobble)) == 100);
    std::vector<int> jumpy;
    for (int i = 0; i < 25; ++i) jumpy.push_back(i % 2 == 0 ? 5 : 7);
    CHECK_FALSE(detect_convergence_st(curve_from_losses(jumpy)).has_value());
    // Twenty further points are needed.
    CHECK_FALSE(detect_convergence_st(curve_from_losses(std::vector<int>(20, 3))).has_value());
  }

  TEST_CASE("flawless-play detector") {
    std::vector<int> losses{9, 4, 1};
    losses.insert(losses.end(), 80, 0);
    CHECK(detect_convergence_fs(curve_from_losses(losses), 20, 5000) == 400);

    std::vector<int> short_streak(19, 0);
    short_streak.push_back(1);
    CHECK_FALSE(detect_convergence_fs(curve_from_losses(short_streak), 20, 0).has_value());

    // A loss during confirmation moves the answer to the next streak.
    std::vector<int> relapse(20, 0);
    relapse.push_back(0);
    relapse.push_back(2);
    relapse.insert(relapse.end(), 40, 0);
    CHECK(detect_convergence_fs(curve_from_losses(relapse), 20, 1000) == 2300);

    // Not enough episodes after the window to confirm.
    CHECK_FALSE(detect_convergence_fs(curve_from_losses(std::vector<int>(25, 0)), 20, 5000));
  }

  TEST_CASE("curve csv round trip") {
    const auto curve = curve_from_losses({5, 3, 0});
    const std::string text = curve_csv(curve);
    CHECK(text.rfind("episode,learner_wins,teacher_wins,draws\n", 0) == 0);
    CHECK(text.find("200,0,3,97\n") != std::string::npos);
    CHECK(parse_curve_csv(text) == curve);
  }

  TEST_CASE("evaluation baselines") {
    AgentFactory factory;
    const auto det = AgentSpec::of(AgentKind::MinMaxDet);
    const auto rnd = AgentSpec::of(AgentKind::Random);
    const MatchRecord self = evaluate(det, det, GameId::TicTacToe, 100, factory, 1);
    CHECK(self.draws == 100);
    const MatchRecord vs_random = evaluate(det, rnd, GameId::TicTacToe, 1000, factory, 2);
    CHECK(vs_random.p1_losses == 0);
    CHECK(vs_random.p1_wins >= 970);
    CHECK(vs_random.n_games == 1000);
  }

  TEST_CASE("training against minimax reaches flawless play") {
    AgentFactory factory;
    TrainConfig cfg = small_config();
    cfg.max_episodes = 20000;
    cfg.fs_confirm = 5000;
    const TrainingRun run = train(cfg, factory);
    REQUIRE(run.convergence_fs.has_value());
    CHECK(*run.convergence_fs >= 100);
    CHECK(*run.convergence_fs <= 5000);
    REQUIRE(run.convergence_st.has_value());
    CHECK(*run.convergence_st <= *run.convergence_fs);
    CHECK(run.episodes_run < cfg.max_episodes);
    REQUIRE(run.fs_table);
    CHECK(run.fs_table->episodes_trained() <= run.episodes_run);
    CHECK(run.table->max_abs_value() <= 1.0);
  }

  TEST_CASE("training without convergence is not an error") {
    AgentFactory factory;
    TrainConfig cfg = small_config();
    cfg.max_episodes = 300;
    const TrainingRun run = train(cfg, factory);
    CHECK_FALSE(run.convergence_fs.has_value());
    CHECK(run.episodes_run == 300);
    CHECK(run.curve.size() == 3);
  }

  TEST_CASE("training writes its run directory") {
    AgentFactory factory;
    TrainConfig cfg = small_config();
    cfg.max_episodes = 400;
    cfg.snapshot_every = 100;
    cfg.out_dir = fresh_dir("files");
    const TrainingRun run = train(cfg, factory);
    CHECK(fs::exists(cfg.out_dir / "manifest.txt"));
    CHECK(slurp(cfg.out_dir / "curve.csv") == curve_csv(run.curve));
    REQUIRE(run.snapshots.size() == 4);
    for (const auto& s : run.snapshots) CHECK(fs::exists(cfg.out_dir / s.file));
    fs::remove_all(cfg.out_dir);
  }
}

TEST_SUITE("trainer properties") {
  TEST_CASE("fixed point of the update") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const double r = rng.uniform01() * 2 - 1;
      const double m = rng.uniform01() * 2 - 1;
      const double g = rng.uniform01();
      const double a = rng.uniform01();
      const double q = r + g * m;
      CHECK(q_update(q, r, m, a, g) == doctest::Approx(q).epsilon(1e-15));
    }
    CHECK(q_update(0.5, 0.5, 0.0, 0.4, 0.9) == 0.5);
  }

  TEST_CASE("backward shape of every won and lost episode") {
    const double alpha = 0.4, gamma = 0.9;
    int checked = 0;
    for (GameId g : {GameId::TicTacToe, GameId::Mancala}) {
      for (std::uint64_t seed = 0; seed < 300; ++seed) {
        QTable q(g, alpha, gamma);
        RandomAgent teacher(seed + 7);
        Rng rng(seed);
        const Episode ep = run_episode(q, teacher, seed % 2 == 0, 0.0, RewardSpec{}, rng);
        if (ep.result.is_draw()) continue;
        // Mancala can revisit a learner state; the closed form needs distinct steps.
        std::map<StateKey, int> visits;
        for (const auto& s : ep.steps) ++visits[s.key];
        if (visits.size() != ep.steps.size()) continue;
        const double w = ep.result.value_for(ep.learner);
        double expected = alpha * w;
        for (std::size_t i = ep.steps.size(); i-- > 0;) {
          const double v = q.value(ep.steps[i].key, ep.steps[i].action);
          if (w > 0) {
            // Only the best value of the next row propagates.
            REQUIRE(v == doctest::Approx(expected).epsilon(1e-12));
            expected *= alpha * gamma;
          } else {
            REQUIRE(v <= 0.0);
            if (i + 1 == ep.steps.size()) REQUIRE(v == doctest::Approx(-alpha));
          }
        }
        for (std::size_t i = 1; w > 0 && i < ep.steps.size(); ++i) {
          REQUIRE(q.value(ep.steps[i - 1].key, ep.steps[i - 1].action) <
                  q.value(ep.steps[i].key, ep.steps[i].action));
        }
        ++checked;
      }
    }
    CHECK(checked > 100);
  }

  TEST_CASE("flawless play implies a stable loss count no later") {
    Rng rng(6);
    int with_fs = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<int> losses;
      const int n = 20 + static_cast<int>(rng.uniform_index(100));
      for (int i = 0; i < n; ++i) {
        const bool zero = rng.uniform01() < 0.85;
        losses.push_back(zero ? 0 : static_cast<int>(rng.uniform_index(4)));
      }
      const auto curve = curve_from_losses(losses);
      const std::uint64_t confirm = 100 * (1 + rng.uniform_index(30));
      const auto fs = detect_convergence_fs(curve, 20, confirm);
      if (!fs) continue;
      ++with_fs;
      const auto st = detect_convergence_st(curve, 20, 1);
      REQUIRE(st.has_value());
      REQUIRE(*st <= *fs);
    }
    CHECK(with_fs > 20);
  }

  TEST_CASE("values stay bounded after training runs") {
    AgentFactory factory;
    for (const char* teacher : {"random", "minmax-det", "minmax-nd", "q-twin"}) {
      TrainConfig cfg = small_config();
      cfg.teacher = AgentSpec::parse(teacher);
      cfg.max_episodes = 1500;
      const TrainingRun run = train(cfg, factory);
      CAPTURE(teacher);
      CHECK(run.table->max_abs_value() <= 1.0);
      for (const auto& [key, row] : run.table->entries()) {
        for (double v : row) REQUIRE(std::isfinite(v));
      }
    }
    TrainConfig mancala = small_config();
    mancala.game = GameId::Mancala;
    mancala.teacher = AgentSpec::parse("minmax-det:depth=1");
    mancala.max_episodes = 300;
    mancala.eval_games = 10;
    CHECK(train(mancala, factory).table->max_abs_value() <= 1.0);
  }

  TEST_CASE("training is reproducible") {
    AgentFactory factory;
    TrainConfig cfg = small_config();
    cfg.teacher = AgentSpec::parse("minmax-nd");
    cfg.max_episodes = 1000;
    cfg.snapshot_every = 250;
    cfg.out_dir = fresh_dir("repro-a");
    const TrainingRun a = train(cfg, factory);
    cfg.out_dir = fresh_dir("repro-b");
    const TrainingRun b = train(cfg, factory);
    CHECK(curve_csv(a.curve) == curve_csv(b.curve));
    CHECK(slurp(a.dir / "curve.csv") == slurp(b.dir / "curve.csv"));
    REQUIRE(a.snapshots == b.snapshots);
    for (const auto& s : a.snapshots) CHECK(slurp(a.dir / s.file) == slurp(b.dir / s.file));
    CHECK(*a.table == *b.table);
    fs::remove_all(a.dir);
    fs::remove_all(b.dir);

    cfg.out_dir.clear();
    cfg.seed = 4;
    CHECK_FALSE(*train(cfg, factory).table == *a.table);
  }
}
